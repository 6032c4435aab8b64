//! Dirac spinor algebra: the 4x4 matrices `alpha_k`, `beta` in the standard
//! representation, the free symbol `alpha . p + beta`, its relativistic
//! dispersion `E(p) = sqrt(1 + |p|^2)` and the negative-energy projector.
//!
//! Natural units `hbar = c = m = 1`; the mass gap of the free operator is 1.

use num_complex::Complex;

use crate::scalar::Real;

/// Dense 4x4 complex matrix acting on the spinor indices of a single mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinorMatrix<T: Real> {
    pub e: [[Complex<T>; 4]; 4],
}

fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::of(re), T::of(im))
}

impl<T: Real> SpinorMatrix<T> {
    pub fn zero() -> Self {
        Self {
            e: [[Complex::new(T::zero(), T::zero()); 4]; 4],
        }
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            m.e[i][i] = c(1.0, 0.0);
        }
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                m.e[i][j] = self.e[i][j] + other.e[i][j];
            }
        }
        m
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                m.e[i][j] = self.e[i][j] - other.e[i][j];
            }
        }
        m
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = Complex::new(T::zero(), T::zero());
                for k in 0..4 {
                    acc += self.e[i][k] * other.e[k][j];
                }
                m.e[i][j] = acc;
            }
        }
        m
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                m.e[i][j] = self.e[i][j] * s;
            }
        }
        m
    }

    pub fn scale_re(&self, s: T) -> Self {
        self.scale(Complex::new(s, T::zero()))
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                m.e[i][j] = self.e[j][i].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Complex<T> {
        self.e[0][0] + self.e[1][1] + self.e[2][2] + self.e[3][3]
    }

    pub fn frobenius_sq(&self) -> T {
        let mut acc = T::zero();
        for row in &self.e {
            for z in row {
                acc += z.norm_sqr();
            }
        }
        acc
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut m = T::zero();
        for i in 0..4 {
            for j in 0..4 {
                let d = (self.e[i][j] - other.e[i][j]).norm();
                if d > m {
                    m = d;
                }
            }
        }
        m
    }
}

/// Dirac matrix `alpha_k`, k in 0..3, standard representation.
pub fn alpha<T: Real>(k: usize) -> SpinorMatrix<T> {
    let mut m = SpinorMatrix::zero();
    match k {
        0 => {
            // off-diagonal sigma_x blocks
            m.e[0][3] = c(1.0, 0.0);
            m.e[1][2] = c(1.0, 0.0);
            m.e[2][1] = c(1.0, 0.0);
            m.e[3][0] = c(1.0, 0.0);
        }
        1 => {
            m.e[0][3] = c(0.0, -1.0);
            m.e[1][2] = c(0.0, 1.0);
            m.e[2][1] = c(0.0, -1.0);
            m.e[3][0] = c(0.0, 1.0);
        }
        2 => {
            m.e[0][2] = c(1.0, 0.0);
            m.e[1][3] = c(-1.0, 0.0);
            m.e[2][0] = c(1.0, 0.0);
            m.e[3][1] = c(-1.0, 0.0);
        }
        _ => panic!("alpha index out of range"),
    }
    m
}

/// Dirac matrix `beta = diag(1, 1, -1, -1)`.
pub fn beta<T: Real>() -> SpinorMatrix<T> {
    let mut m = SpinorMatrix::zero();
    m.e[0][0] = c(1.0, 0.0);
    m.e[1][1] = c(1.0, 0.0);
    m.e[2][2] = c(-1.0, 0.0);
    m.e[3][3] = c(-1.0, 0.0);
    m
}

/// Relativistic dispersion `E(p) = sqrt(1 + |p|^2)`.
pub fn energy<T: Real>(p: [T; 3]) -> T {
    (T::one() + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

/// Momentum symbol of the free Dirac operator, `alpha . p + beta`.
///
/// Hermitian with eigenvalues `+-E(p)`, each twice.
pub fn dirac_symbol<T: Real>(p: [T; 3]) -> SpinorMatrix<T> {
    let zero = T::zero();
    let mut m = beta::<T>();
    let (px, py, pz) = (p[0], p[1], p[2]);
    // sigma . p = [[pz, px - i py], [px + i py, -pz]] in both off-diagonal blocks
    let spp = Complex::new(px, py);
    let spm = Complex::new(px, -py);
    let z = Complex::new(pz, zero);
    m.e[0][2] = z;
    m.e[0][3] = spm;
    m.e[1][2] = spp;
    m.e[1][3] = -z;
    m.e[2][0] = z;
    m.e[2][1] = spm;
    m.e[3][0] = spp;
    m.e[3][1] = -z;
    m
}

/// Spectral projector of `dirac_symbol(p)` onto negative energy,
/// `P0(p) = (I - (alpha . p + beta) / E(p)) / 2`. Rank 2, Hermitian,
/// idempotent, commutes with the symbol.
pub fn negative_projector<T: Real>(p: [T; 3]) -> SpinorMatrix<T> {
    let e = energy(p);
    let half = T::of(0.5);
    let sym = dirac_symbol(p);
    SpinorMatrix::identity()
        .sub(&sym.scale_re(e.recip()))
        .scale_re(half)
}

/// Complement `1 - P0(p)`, the positive-energy projector.
pub fn positive_projector<T: Real>(p: [T; 3]) -> SpinorMatrix<T> {
    SpinorMatrix::identity().sub(&negative_projector(p))
}

/// Normalized positive-energy eigenspinor of `dirac_symbol(p)`.
///
/// `slot` selects one of the two orthonormal states; the pair spans the
/// positive eigenspace exactly.
pub fn positive_orbital<T: Real>(p: [T; 3], slot: usize) -> [Complex<T>; 4] {
    assert!(slot < 2, "two positive-energy slots per momentum");
    let e = energy(p);
    let norm = (T::of(2.0) * e * (e + T::one())).sqrt();
    let zero = T::zero();
    let ep1 = Complex::new(e + T::one(), zero);
    let (px, py, pz) = (p[0], p[1], p[2]);
    let raw: [Complex<T>; 4] = if slot == 0 {
        [
            ep1,
            Complex::new(zero, zero),
            Complex::new(pz, zero),
            Complex::new(px, py),
        ]
    } else {
        [
            Complex::new(zero, zero),
            ep1,
            Complex::new(px, -py),
            Complex::new(-pz, zero),
        ]
    };
    let inv = Complex::new(norm.recip(), zero);
    [raw[0] * inv, raw[1] * inv, raw[2] * inv, raw[3] * inv]
}
