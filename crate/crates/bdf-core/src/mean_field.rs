//! Mean-field operator assembly and the Bogoliubov-Dirac-Fock energy.
//!
//! For a vacuum perturbation `Q` and external density `n` with coupling
//! `alpha`, the mean field is
//! `D_Q = D0 + alpha (rho_Q - n) * 1/|x| - alpha Q(x,y)/|x-y|`
//! and the energy is
//! `E(Q) = tr_v(D0 Q) - alpha D(rho_Q, n) + (alpha/2) D(rho_Q, rho_Q)
//!         - (alpha/2) <Q, R_Q>`,
//! where `tr_v` is the vacuum-relative trace and `R_Q` the unit-coupling
//! exchange operator. The derivative of `E` at `Q` in a Hermitian direction
//! `h` is exactly `tr(D_Q h)` under the discrete conventions fixed in this
//! crate, which the finite-difference tests pin down.

use std::sync::Arc;

use num_complex::Complex;

use crate::density::{coulomb_pairing, density, ChargeDensity};
use crate::kernel::{KernelError, KernelOperator};
use crate::lattice::MomentumLattice;
use crate::potential::{direct_potential, exchange_operator};
use crate::scalar::Real;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum MeanFieldError {
    #[error("gaussian source width must be positive, got {0}")]
    InvalidWidth(f64),
    #[error("coupling must be nonnegative, got {0}")]
    InvalidCoupling(f64),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Time-independent external charge density with its coupling constant.
#[derive(Debug, Clone)]
pub struct ExternalSource<T: Real> {
    n: ChargeDensity<T>,
    coupling: T,
    total_charge: T,
}

impl<T: Real> ExternalSource<T> {
    /// Source with no external density (`n = 0`).
    pub fn vacuum(lattice: &Arc<MomentumLattice<T>>, coupling: T) -> Result<Self, MeanFieldError> {
        Self::from_density(ChargeDensity::zeros(lattice), coupling, T::zero())
    }

    pub fn from_density(
        n: ChargeDensity<T>,
        coupling: T,
        total_charge: T,
    ) -> Result<Self, MeanFieldError> {
        if !(coupling >= T::zero()) {
            return Err(MeanFieldError::InvalidCoupling(coupling.as_f64()));
        }
        debug_assert!(n.is_conjugate_symmetric(T::of(1e-12)));
        Ok(Self {
            n,
            coupling,
            total_charge,
        })
    }

    pub fn density(&self) -> &ChargeDensity<T> {
        &self.n
    }

    pub fn coupling(&self) -> T {
        self.coupling
    }

    pub fn total_charge(&self) -> T {
        self.total_charge
    }

    pub fn lattice(&self) -> &Arc<MomentumLattice<T>> {
        self.n.lattice()
    }

    /// The global-in-time coercivity argument needs `alpha < 4/pi`; larger
    /// couplings stay meaningful locally in time and only warrant a warning.
    pub fn coupling_exceeds_coercivity_range(&self) -> bool {
        self.coupling >= T::of(4.0) / T::PI()
    }
}

/// Smeared-nucleus source `n(k) = Z (2 pi)^{-3/2} exp(-width^2 |k|^2 / 2)`.
pub fn build_gaussian_source<T: Real>(
    total_charge: T,
    width: T,
    coupling: T,
    lattice: &Arc<MomentumLattice<T>>,
) -> Result<ExternalSource<T>, MeanFieldError> {
    if !(width > T::zero()) {
        return Err(MeanFieldError::InvalidWidth(width.as_f64()));
    }
    let mut n = ChargeDensity::zeros(lattice);
    let pref = total_charge * crate::density::density_prefactor::<T>();
    let half = T::of(0.5);
    for idx in 0..lattice.diff_count() {
        let ksq = lattice.norm_sq_of(&lattice.diff_int(idx));
        let amp = pref * (-half * width * width * ksq).exp();
        n.set(idx, Complex::new(amp, T::zero()));
    }
    ExternalSource::from_density(n, coupling, total_charge)
}

/// The assembled mean field `D = D0 + V` with its potential part.
#[derive(Debug, Clone)]
pub struct MeanFieldOperator<T: Real> {
    pub d: KernelOperator<T>,
    pub v: KernelOperator<T>,
}

/// Builds `D_Q` for a Hermitian perturbation `Q`.
pub fn assemble<T: Real>(
    q: &KernelOperator<T>,
    src: &ExternalSource<T>,
) -> Result<MeanFieldOperator<T>, MeanFieldError> {
    let rho = density(q);
    let rho_rel = rho.sub(src.density())?;
    let direct = direct_potential(&rho_rel, src.coupling());
    let exchange = exchange_operator(q, src.coupling());
    let v = direct.sub(&exchange)?;
    let d0 = KernelOperator::free_dirac(q.lattice());
    let d = d0.add(&v)?;
    Ok(MeanFieldOperator { d, v })
}

/// Signed contributions to the BDF energy; they sum to the energy.
#[derive(Debug, Clone, Copy)]
pub struct EnergyTerms<T> {
    pub kinetic: T,
    pub external: T,
    pub direct: T,
    pub exchange: T,
    /// Largest imaginary part encountered across the complex-valued terms;
    /// round-off only for Hermitian input.
    pub imag_residual: T,
}

impl<T: Real> EnergyTerms<T> {
    pub fn total(&self) -> T {
        self.kinetic + self.external + self.direct + self.exchange
    }
}

pub fn bdf_energy_terms<T: Real>(
    q: &KernelOperator<T>,
    src: &ExternalSource<T>,
) -> Result<EnergyTerms<T>, MeanFieldError> {
    let alpha = src.coupling();
    let half = T::of(0.5);

    // kinetic term: only diagonal blocks of D0 Q enter the vacuum trace
    let d0q = KernelOperator::free_dirac(q.lattice()).compose(q)?;
    let kinetic = d0q.vacuum_trace();

    let rho = density(q);
    let ext_pair = coulomb_pairing(&rho, src.density())?;
    let hartree = coulomb_pairing(&rho, &rho)?;
    let xope = exchange_operator(q, T::one());
    let xinner = q.hs_inner(&xope)?;

    let external = -alpha * ext_pair.re;
    let direct = half * alpha * hartree.re;
    let exchange = -half * alpha * xinner.re;
    let imag_residual = ext_pair
        .im
        .abs()
        .max(hartree.im.abs())
        .max(xinner.im.abs());
    Ok(EnergyTerms {
        kinetic,
        external,
        direct,
        exchange,
        imag_residual,
    })
}

/// BDF energy `E(Q)`.
pub fn bdf_energy<T: Real>(
    q: &KernelOperator<T>,
    src: &ExternalSource<T>,
) -> Result<T, MeanFieldError> {
    Ok(bdf_energy_terms(q, src)?.total())
}

/// Both sides of the coercivity bound
/// `E(Q) + (alpha/2) D(n, n) >= (1 - alpha pi/4) tr_v(D0 Q)
///  + (alpha/2) D(rho_Q - n, rho_Q - n)`
/// (Coulomb terms in the pairing normalization `D(f,f) = 4 pi ||f||_C^2`),
/// together with the chain value `||Q||_HS^2` bounded by the kinetic term.
#[derive(Debug, Clone, Copy)]
pub struct CoercivityReport<T> {
    pub lhs: T,
    pub rhs: T,
    pub slack: T,
    pub hs_norm_sq: T,
    pub kinetic: T,
}

pub fn coercivity_report<T: Real>(
    q: &KernelOperator<T>,
    src: &ExternalSource<T>,
) -> Result<CoercivityReport<T>, MeanFieldError> {
    let alpha = src.coupling();
    let half = T::of(0.5);
    let quarter_pi = T::PI() / T::of(4.0);

    let energy = bdf_energy(q, src)?;
    let nn = coulomb_pairing(src.density(), src.density())?.re;
    let lhs = energy + half * alpha * nn;

    let d0q = KernelOperator::free_dirac(q.lattice()).compose(q)?;
    let kinetic = d0q.vacuum_trace();
    let rho_rel = density(q).sub(src.density())?;
    let rel = coulomb_pairing(&rho_rel, &rho_rel)?.re;
    let rhs = (T::one() - alpha * quarter_pi) * kinetic + half * alpha * rel;

    Ok(CoercivityReport {
        lhs,
        rhs,
        slack: lhs - rhs,
        hs_norm_sq: q.hs_norm_sq(),
        kinetic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{unitary_conjugate, SpectralCache};

    fn lat(h: f64, cutoff: f64) -> Arc<MomentumLattice<f64>> {
        Arc::new(MomentumLattice::build(h, cutoff).unwrap())
    }

    #[test]
    fn free_case_assembles_to_free_dirac() {
        let lat = lat(1.0, 1.0);
        let src = ExternalSource::vacuum(&lat, 0.1).unwrap();
        let q = KernelOperator::zeros(&lat);
        let mf = assemble(&q, &src).unwrap();
        assert_eq!(mf.v.hs_norm(), 0.0);
        let d0 = KernelOperator::free_dirac(&lat);
        assert_eq!(mf.d.sub(&d0).unwrap().hs_norm(), 0.0);
        assert_eq!(bdf_energy(&q, &src).unwrap(), 0.0);
    }

    #[test]
    fn external_only_case_has_no_exchange_part() {
        let lat = lat(1.0, 1.5);
        let src = build_gaussian_source(1.0, 1.0, 0.05, &lat).unwrap();
        let q = KernelOperator::zeros(&lat);
        let mf = assemble(&q, &src).unwrap();
        // V = -alpha n * 1/|x| exactly: compare against the direct potential
        let want = direct_potential(&src.density().scaled((-1.0).into()), src.coupling());
        assert!(mf.v.sub(&want).unwrap().hs_norm() < 1e-14);
        assert!(mf.d.hermiticity_residual() < 1e-12);
    }

    #[test]
    fn assemble_is_affine_in_the_perturbation() {
        let lat = lat(1.0, 1.0);
        let src = build_gaussian_source(1.0, 0.8, 0.1, &lat).unwrap();
        let q1 = KernelOperator::random_hermitian(&lat, 1, 0.5);
        let q2 = KernelOperator::random_hermitian(&lat, 2, 0.5);
        let sum = q1.add(&q2).unwrap();
        let lhs = assemble(&sum, &src)
            .unwrap()
            .v
            .sub(&assemble(&q1, &src).unwrap().v)
            .unwrap();
        let vacuum = ExternalSource::vacuum(&lat, src.coupling()).unwrap();
        let rhs = assemble(&q2, &vacuum).unwrap().v;
        assert!(lhs.sub(&rhs).unwrap().hs_norm() < 1e-12);
    }

    #[test]
    fn gaussian_source_shape_and_norm() {
        let lat = lat(0.5, 1.5);
        let z = 2.5;
        let src = build_gaussian_source(z, 0.9, 0.05, &lat).unwrap();
        let zero_mode = src.density().get_mode(&[0, 0, 0]).unwrap();
        let pref = (2.0 * std::f64::consts::PI).powf(-1.5);
        assert!((zero_mode.re - z * pref).abs() < 1e-15);
        assert!(src.density().conjugate_symmetry_residual() == 0.0);
        // independent brute-force Coulomb norm
        let mut acc = 0.0;
        for idx in 0..lat.diff_count() {
            let k = lat.diff_int(idx);
            if k == [0, 0, 0] {
                continue;
            }
            let ksq = lat.norm_sq_of(&k);
            let amp = z * pref * (-0.45 * 0.9 * ksq).exp();
            acc += amp * amp / ksq;
        }
        acc *= lat.cell_volume();
        assert!((src.density().coulomb_norm_sq() - acc).abs() < 1e-12);
        // zero-charge source vanishes
        let empty = build_gaussian_source(0.0, 0.9, 0.05, &lat).unwrap();
        assert_eq!(empty.density().coulomb_norm(), 0.0);
        assert!(build_gaussian_source(1.0, 0.0, 0.05, &lat).is_err());
    }

    #[test]
    fn kinetic_term_is_nonnegative_on_projector_differences() {
        let lat = lat(1.0, 1.0);
        let src = ExternalSource::vacuum(&lat, 0.0).unwrap();
        let p0 = KernelOperator::vacuum_projector(&lat);
        let mut cache = SpectralCache::new();
        for seed in 1..5u64 {
            let g = KernelOperator::random_hermitian(&lat, seed, 0.6);
            let p = unitary_conjugate(&p0, &g, 1.0, &mut cache).unwrap();
            let q = p.sub(&p0).unwrap();
            let e = bdf_energy(&q, &src).unwrap();
            assert!(e >= -1e-11, "kinetic energy {e} must be nonnegative");
            // identity tr_v(D0 Q) = tr(|D0| Q^2)
            let absd = KernelOperator::abs_free_dirac(&lat);
            let q2 = q.compose(&q).unwrap();
            let alt = absd.trace_product(&q2).unwrap().re;
            assert!((e - alt).abs() <= 1e-9 * (1.0 + alt.abs()));
            assert!(alt + 1e-10 >= q.hs_norm_sq());
        }
    }

    /// Central finite differences of the energy against `tr(D_Q h)`.
    #[test]
    fn gradient_matches_mean_field() {
        let lat = lat(1.0, 1.0);
        let src = build_gaussian_source(1.0, 1.0, 0.1, &lat).unwrap();
        let q = KernelOperator::random_hermitian(&lat, 40, 0.4);
        let mf = assemble(&q, &src).unwrap();
        let eps = 1e-4;
        for seed in 50..60u64 {
            let h = KernelOperator::random_hermitian(&lat, seed, 1.0);
            let qp = q.add(&h.scaled(eps.into())).unwrap();
            let qm = q.sub(&h.scaled(eps.into())).unwrap();
            let fd = (bdf_energy(&qp, &src).unwrap() - bdf_energy(&qm, &src).unwrap())
                / (2.0 * eps);
            let grad = mf.d.trace_product(&h).unwrap().re;
            assert!(
                (fd - grad).abs() <= 1e-6 * (1.0 + grad.abs()),
                "fd {fd} vs grad {grad}"
            );
        }
    }

    #[test]
    fn energy_terms_are_real_to_roundoff() {
        let lat = lat(1.0, 1.5);
        let src = build_gaussian_source(1.5, 0.7, 0.2, &lat).unwrap();
        let q = KernelOperator::random_hermitian(&lat, 71, 0.5);
        let terms = bdf_energy_terms(&q, &src).unwrap();
        let scale = terms.total().abs().max(1.0);
        assert!(terms.imag_residual <= 1e-12 * scale);
    }

    #[test]
    fn coercivity_trivial_and_alpha_zero_cases() {
        let lat = lat(1.0, 1.0);
        let vac = ExternalSource::vacuum(&lat, 0.0).unwrap();
        let zero = KernelOperator::zeros(&lat);
        let rep = coercivity_report(&zero, &vac).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert_eq!(rep.rhs, 0.0);
        assert_eq!(rep.slack, 0.0);

        // alpha = 0: both sides reduce to the kinetic term for any Q
        let p0 = KernelOperator::vacuum_projector(&lat);
        let mut cache = SpectralCache::new();
        let g = KernelOperator::random_hermitian(&lat, 5, 0.3);
        let p = unitary_conjugate(&p0, &g, 1.0, &mut cache).unwrap();
        let q = p.sub(&p0).unwrap();
        let rep = coercivity_report(&q, &vac).unwrap();
        assert!(rep.slack.abs() < 1e-10 * (1.0 + rep.lhs.abs()));
        assert!(rep.hs_norm_sq <= rep.kinetic + 1e-10);
    }

    #[test]
    fn coupling_warning_threshold() {
        let lat = lat(1.0, 1.0);
        let below = ExternalSource::vacuum(&lat, 1.2).unwrap();
        assert!(!below.coupling_exceeds_coercivity_range());
        let above = ExternalSource::vacuum(&lat, 1.3).unwrap();
        assert!(above.coupling_exceeds_coercivity_range());
        assert!(ExternalSource::vacuum(&lat, -0.1).is_err());
    }
}
