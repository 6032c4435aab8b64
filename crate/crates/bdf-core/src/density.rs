//! Charge densities on the difference lattice and the Coulomb-space
//! functionals.
//!
//! Fourier conventions (fixed here, cross-checked by unit tests):
//! `rho_hat(k) = (2 pi)^{-3/2} sum_p Tr Q(p, p - k) h^3`, the Coulomb
//! transform `1/|x| <-> 4 pi / |k|^2`, and the pairing
//! `D(f, g) = 4 pi sum_{k != 0} conj(f_hat) g_hat / |k|^2 h^3`.
//! The singular `k = 0` mode is omitted throughout, which amounts to a
//! uniform neutralizing background.

use std::sync::Arc;

use num_complex::Complex;

use crate::kernel::{KernelError, KernelOperator};
use crate::lattice::{IntVec, MomentumLattice};
use crate::rng::SplitMix64;
use crate::scalar::Real;

/// Complex amplitudes on the difference lattice.
#[derive(Debug, Clone)]
pub struct ChargeDensity<T: Real> {
    lattice: Arc<MomentumLattice<T>>,
    values: Vec<Complex<T>>,
}

pub fn density_prefactor<T: Real>() -> T {
    // (2 pi)^{-3/2}
    (T::of(2.0) * T::PI()).powf(T::of(-1.5))
}

impl<T: Real> ChargeDensity<T> {
    pub fn zeros(lattice: &Arc<MomentumLattice<T>>) -> Self {
        Self {
            lattice: Arc::clone(lattice),
            values: vec![Complex::new(T::zero(), T::zero()); lattice.diff_count()],
        }
    }

    pub fn lattice(&self) -> &Arc<MomentumLattice<T>> {
        &self.lattice
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn get(&self, diff_idx: usize) -> Complex<T> {
        self.values[diff_idx]
    }

    pub fn set(&mut self, diff_idx: usize, v: Complex<T>) {
        self.values[diff_idx] = v;
    }

    pub fn get_mode(&self, k: &IntVec) -> Option<Complex<T>> {
        self.lattice.diff_index_of(k).map(|i| self.values[i])
    }

    pub fn sub(&self, other: &Self) -> Result<Self, KernelError> {
        check_density_lattice(self, other)?;
        let values = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| *a - *b)
            .collect();
        Ok(Self {
            lattice: Arc::clone(&self.lattice),
            values,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, KernelError> {
        check_density_lattice(self, other)?;
        let values = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| *a + *b)
            .collect();
        Ok(Self {
            lattice: Arc::clone(&self.lattice),
            values,
        })
    }

    pub fn scaled(&self, s: Complex<T>) -> Self {
        Self {
            lattice: Arc::clone(&self.lattice),
            values: self.values.iter().map(|v| *v * s).collect(),
        }
    }

    /// Max over modes of `|rho(-k) - conj(rho(k))|`; zero exactly when the
    /// position-space density is real.
    pub fn conjugate_symmetry_residual(&self) -> T {
        let mut worst = T::zero();
        for (idx, v) in self.values.iter().enumerate() {
            let k = self.lattice.diff_int(idx);
            let neg = self
                .lattice
                .diff_index_of(&[-k[0], -k[1], -k[2]])
                .expect("difference lattice is closed under negation");
            let d = (self.values[neg] - v.conj()).norm();
            if d > worst {
                worst = d;
            }
        }
        worst
    }

    pub fn is_conjugate_symmetric(&self, tol: T) -> bool {
        self.conjugate_symmetry_residual() <= tol
    }

    /// Coulomb norm `(sum_{k != 0} |rho(k)|^2 / |k|^2 h^3)^{1/2}`.
    pub fn coulomb_norm_sq(&self) -> T {
        let mut acc = T::zero();
        for (idx, v) in self.values.iter().enumerate() {
            let k = self.lattice.diff_int(idx);
            if k == [0, 0, 0] {
                continue;
            }
            acc += v.norm_sqr() / self.lattice.norm_sq_of(&k);
        }
        acc * self.lattice.cell_volume()
    }

    pub fn coulomb_norm(&self) -> T {
        self.coulomb_norm_sq().sqrt()
    }

    /// Deterministic pseudorandom conjugate-symmetric density with
    /// amplitudes of size `~scale`.
    pub fn random_conjugate_symmetric(
        lattice: &Arc<MomentumLattice<T>>,
        seed: u64,
        scale: T,
    ) -> Self {
        let mut rng = SplitMix64::new(seed);
        let mut rho = Self::zeros(lattice);
        for idx in 0..lattice.diff_count() {
            let k = lattice.diff_int(idx);
            if k < [0, 0, 0] {
                continue; // filled through the mirror mode
            }
            let re = T::of(rng.uniform_symmetric()) * scale;
            let im = if k == [0, 0, 0] {
                T::zero()
            } else {
                T::of(rng.uniform_symmetric()) * scale
            };
            let v = Complex::new(re, im);
            rho.values[idx] = v;
            let neg = lattice.diff_index_of(&[-k[0], -k[1], -k[2]]).unwrap();
            rho.values[neg] = v.conj();
        }
        rho
    }
}

fn check_density_lattice<T: Real>(
    a: &ChargeDensity<T>,
    b: &ChargeDensity<T>,
) -> Result<(), KernelError> {
    if Arc::ptr_eq(&a.lattice, &b.lattice) || a.lattice.compatible(&b.lattice) {
        Ok(())
    } else {
        Err(KernelError::LatticeMismatch {
            left: a.lattice.point_count(),
            right: b.lattice.point_count(),
        })
    }
}

/// Momentum-space charge density of a kernel operator:
/// `rho(k) = (2 pi)^{-3/2} sum Tr Q(p, p - k) h^3` over pairs on the lattice.
///
/// For `k` on the even sublattice this coincides term by term with the
/// half-shift form `sum_p Tr Q(p + k/2, p - k/2)` (the substitution
/// `p -> p + k/2` is a bijection of the pair set).
pub fn density<T: Real>(q: &KernelOperator<T>) -> ChargeDensity<T> {
    let lat = q.lattice();
    let mut rho = ChargeDensity::zeros(lat);
    let m = lat.point_count();
    for p in 0..m {
        let np = lat.point_int(p);
        for qq in 0..m {
            let nq = lat.point_int(qq);
            let k = [np[0] - nq[0], np[1] - nq[1], np[2] - nq[2]];
            let idx = lat.diff_index_of(&k).expect("pair difference is a mode");
            rho.values[idx] += q.block(p, qq).trace();
        }
    }
    let w = density_prefactor::<T>() * lat.cell_volume();
    for v in rho.values.iter_mut() {
        *v *= Complex::new(w, T::zero());
    }
    rho
}

/// Coulomb pairing `D(f, g) = 4 pi sum_{k != 0} conj(f) g / |k|^2 h^3`.
///
/// Real for conjugate-symmetric inputs; `D(f, f) = 4 pi ||f||_C^2` exactly.
pub fn coulomb_pairing<T: Real>(
    f: &ChargeDensity<T>,
    g: &ChargeDensity<T>,
) -> Result<Complex<T>, KernelError> {
    check_density_lattice(f, g)?;
    let lat = f.lattice();
    let mut acc = Complex::new(T::zero(), T::zero());
    for idx in 0..lat.diff_count() {
        let k = lat.diff_int(idx);
        if k == [0, 0, 0] {
            continue;
        }
        let w = lat.norm_sq_of(&k).recip();
        acc += f.values[idx].conj() * g.values[idx] * Complex::new(w, T::zero());
    }
    let four_pi = T::of(4.0) * T::PI();
    Ok(acc * Complex::new(four_pi * lat.cell_volume(), T::zero()))
}
