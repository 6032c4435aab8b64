//! Real scalar abstraction underlying every kernel.
//!
//! All operator algebra in this crate is generic over the real field; the
//! only place a concrete type matters is the dense Hermitian eigensolver,
//! which dispatches to the matching LAPACK divide-and-conquer driver
//! (`cheevd` for `f32`, `zheevd` for `f64`).

use std::fmt::{Debug, Display};

use ndarray::{Array2, ArrayView2};
use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

use crate::linalg;

/// Eigendecomposition of a Hermitian matrix: eigenvalues in ascending order,
/// eigenvectors as the matching columns of `vectors`.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    pub vectors: Array2<Complex<T>>,
}

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
#[error("LAPACK heevd failed to converge (info = {info})")]
pub struct EigenError {
    pub info: i32,
}

/// Real scalar type for lattices, kernels and observables.
pub trait Real:
    Float + FloatConst + NumAssign + FromPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Shorthand for exact conversion of an `f64` constant.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in scalar type")
    }

    fn as_f64(self) -> f64;

    /// Raw bit pattern, for exact (bitwise) equality tests.
    fn bit_pattern(self) -> u64;

    /// Dense Hermitian eigendecomposition, eigenvalues ascending.
    ///
    /// Only the numerical value of `matrix` is read; it must be Hermitian
    /// (the solver reads a single triangle).
    fn hermitian_eigen(matrix: ArrayView2<Complex<Self>>)
        -> Result<HermitianEigen<Self>, EigenError>;
}

impl Real for f64 {
    fn as_f64(self) -> f64 {
        self
    }

    fn bit_pattern(self) -> u64 {
        self.to_bits()
    }

    fn hermitian_eigen(
        matrix: ArrayView2<Complex<f64>>,
    ) -> Result<HermitianEigen<f64>, EigenError> {
        linalg::heevd_f64(matrix)
    }
}

impl Real for f32 {
    fn as_f64(self) -> f64 {
        self as f64
    }

    fn bit_pattern(self) -> u64 {
        self.to_bits() as u64
    }

    fn hermitian_eigen(
        matrix: ArrayView2<Complex<f32>>,
    ) -> Result<HermitianEigen<f32>, EigenError> {
        linalg::heevd_f32(matrix)
    }
}
