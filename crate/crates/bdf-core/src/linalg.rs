//! Thin wrappers over the LAPACK `*heevd` divide-and-conquer eigensolvers.
//!
//! LAPACK expects column-major storage. For a Hermitian matrix `A`, the
//! row-major buffer read column-major is `conj(A)`, whose eigenvectors are
//! the conjugates of those of `A` with identical eigenvalues; the wrappers
//! conjugate on the way out instead of transposing on the way in.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex;

use crate::scalar::{EigenError, HermitianEigen};

macro_rules! heevd_impl {
    ($name:ident, $real:ty, $lapack:ident) => {
        pub(crate) fn $name(
            matrix: ArrayView2<Complex<$real>>,
        ) -> Result<HermitianEigen<$real>, EigenError> {
            let n = matrix.nrows();
            assert_eq!(n, matrix.ncols(), "eigensolver needs a square matrix");
            if n == 0 {
                return Ok(HermitianEigen {
                    values: Vec::new(),
                    vectors: Array2::zeros((0, 0)),
                });
            }
            // Logical row-major copy; LAPACK reinterprets it as conj(A).
            let mut buf: Vec<Complex<$real>> = matrix.iter().copied().collect();
            let mut values = vec![0 as $real; n];
            let ni = n as i32;
            let jobz = b'V' as std::ffi::c_char;
            let uplo = b'L' as std::ffi::c_char;
            let mut info: i32 = 0;

            // Workspace query, then the real call.
            let mut work_len = [Complex::<$real>::new(0.0, 0.0)];
            let mut rwork_len = [0 as $real];
            let mut iwork_len = [0i32];
            let query = -1i32;
            unsafe {
                lapack_sys::$lapack(
                    &jobz,
                    &uplo,
                    &ni,
                    buf.as_mut_ptr().cast(),
                    &ni,
                    values.as_mut_ptr(),
                    work_len.as_mut_ptr().cast(),
                    &query,
                    rwork_len.as_mut_ptr(),
                    &query,
                    iwork_len.as_mut_ptr(),
                    &query,
                    &mut info,
                );
            }
            if info != 0 {
                return Err(EigenError { info });
            }
            let lwork = work_len[0].re as i32;
            let lrwork = rwork_len[0] as i32;
            let liwork = iwork_len[0];
            let mut work = vec![Complex::<$real>::new(0.0, 0.0); lwork.max(1) as usize];
            let mut rwork = vec![0 as $real; lrwork.max(1) as usize];
            let mut iwork = vec![0i32; liwork.max(1) as usize];
            unsafe {
                lapack_sys::$lapack(
                    &jobz,
                    &uplo,
                    &ni,
                    buf.as_mut_ptr().cast(),
                    &ni,
                    values.as_mut_ptr(),
                    work.as_mut_ptr().cast(),
                    &lwork,
                    rwork.as_mut_ptr(),
                    &lrwork,
                    iwork.as_mut_ptr(),
                    &liwork,
                    &mut info,
                );
            }
            if info != 0 {
                return Err(EigenError { info });
            }

            // Column j of the column-major output is row j of `buf`; the
            // eigenvectors of A are its conjugates.
            let mut vectors = Array2::<Complex<$real>>::zeros((n, n));
            for j in 0..n {
                for i in 0..n {
                    vectors[(i, j)] = buf[j * n + i].conj();
                }
            }
            // One Newton-Schulz polar sweep, V <- V (3 - V^H V) / 2, pushes
            // the orthonormality defect from O(n eps) to the rounding floor.
            // Propagators and spectral projectors built from V then conserve
            // traces and norms without a coherent per-step bias.
            let vhv = vectors.t().mapv(|z| z.conj()).dot(&vectors);
            let mut poly = vhv.mapv(|z| z * Complex::<$real>::new(-0.5, 0.0));
            for i in 0..n {
                poly[(i, i)] += Complex::<$real>::new(1.5, 0.0);
            }
            let vectors = vectors.dot(&poly);
            Ok(HermitianEigen { values, vectors })
        }
    };
}

heevd_impl!(heevd_f64, f64, zheevd_);
heevd_impl!(heevd_f32, f32, cheevd_);
