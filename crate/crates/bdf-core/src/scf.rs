//! Self-consistent stationary states.
//!
//! The vacuum solution is the fixed point `P = X_{(-inf, 0)}(D_{P - P0})`;
//! charge sectors use a chemical potential `lambda` inside the mean-field
//! gap, `P = X_{(-inf, lambda)}(D_{P - P0})`. The iteration damps the
//! mean-field input by linear mixing of successive perturbations (mixed
//! projectors would not be projectors; mixed perturbations are always
//! admissible inputs to the mean field).

use num_complex::Complex;

use crate::kernel::{KernelError, KernelOperator};
use crate::mean_field::{assemble, bdf_energy, ExternalSource, MeanFieldError};
use crate::scalar::Real;

#[derive(thiserror::Error, Debug)]
pub enum ScfError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    MeanField(#[from] MeanFieldError),
    #[error(
        "chemical potential {lambda} lies within {gap_tol:e} of eigenvalue {eigenvalue}; filling is ambiguous"
    )]
    AmbiguousFilling {
        lambda: f64,
        eigenvalue: f64,
        gap_tol: f64,
    },
    #[error("damping must lie in (0, 1], got {0}")]
    InvalidDamping(f64),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("no chemical potential in the gap reaches charge {target}; closest charge found {reached}")]
    ChargeUnreachable { target: i64, reached: i64 },
}

#[derive(Debug, Clone, Copy)]
pub struct ScfSettings<T> {
    pub max_iter: usize,
    /// Fixed-point residual `||P_{n+1} - P_n||_HS` declaring convergence.
    pub tol: T,
    /// Linear mixing weight on the newest perturbation, in (0, 1].
    pub damping: T,
    /// Chemical potential; 0 selects the vacuum sector.
    pub chemical_potential: T,
    /// Refuse to fill when an eigenvalue sits this close to the potential.
    pub gap_tol: T,
}

impl<T: Real> ScfSettings<T> {
    pub fn vacuum_defaults(lattice_cutoff: T) -> Self {
        let e_cut = (T::one() + lattice_cutoff * lattice_cutoff).sqrt();
        Self {
            max_iter: 200,
            tol: T::of(1e-11),
            damping: T::one(),
            chemical_potential: T::zero(),
            gap_tol: T::of(1e-10) * e_cut,
        }
    }

    fn validate(&self) -> Result<(), ScfError> {
        if !(self.damping > T::zero() && self.damping <= T::one()) {
            return Err(ScfError::InvalidDamping(self.damping.as_f64()));
        }
        if !(self.tol > T::zero()) {
            return Err(ScfError::InvalidTolerance(self.tol.as_f64()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ScfResult<T: Real> {
    pub projector: KernelOperator<T>,
    pub converged: bool,
    pub iterations: usize,
    /// Final fixed-point residual `||P_{n+1} - P_n||_HS`.
    pub residual: T,
    /// `||[D_Q, P]||_HS` at the returned iterate.
    pub commutator_norm: T,
    pub energy: T,
    pub charge: T,
    /// Distance from the chemical potential to the nearest eigenvalue of
    /// the converged mean field.
    pub gap: T,
    pub chemical_potential: T,
}

/// Spectral projector `X_{(-inf, lambda)}(D)` of a Hermitian kernel.
///
/// Errors out when an eigenvalue sits within `gap_tol` of `lambda`;
/// degenerate filling must fail loudly.
pub fn spectral_projector<T: Real>(
    d: &KernelOperator<T>,
    lambda: T,
    gap_tol: T,
) -> Result<KernelOperator<T>, ScfError> {
    let eig = d.spectrum()?;
    for &v in &eig.values {
        if (v - lambda).abs() < gap_tol {
            return Err(ScfError::AmbiguousFilling {
                lambda: lambda.as_f64(),
                eigenvalue: v.as_f64(),
                gap_tol: gap_tol.as_f64(),
            });
        }
    }
    let filled = eig.values.iter().filter(|&&v| v < lambda).count();
    let dim = eig.vectors.nrows();
    let mut data = ndarray::Array2::<Complex<T>>::zeros((dim, dim));
    if filled > 0 {
        let sel = eig.vectors.slice(ndarray::s![.., 0..filled]);
        let seld = sel.t().mapv(|z| z.conj());
        data = sel.dot(&seld);
    }
    // matrix projector back to kernel normalization
    let inv_cell = Complex::new(d.lattice().cell_volume().recip(), T::zero());
    let data = data.mapv(|z| z * inv_cell);
    let mut p = KernelOperator::from_matrix(d.lattice(), data, true);
    p.hermitize();
    Ok(p)
}

/// Damped fixed-point iteration `P_{n+1} = X_{(-inf, lambda)}(D_{Q_mix})`
/// with `Q_mix = damping * Q_n + (1 - damping) * Q_{n-1}`.
///
/// Non-convergence within `max_iter` is not an error: the best iterate is
/// returned with `converged = false`.
pub fn scf_solve<T: Real>(
    src: &ExternalSource<T>,
    settings: &ScfSettings<T>,
    start: Option<&KernelOperator<T>>,
) -> Result<ScfResult<T>, ScfError> {
    settings.validate()?;
    let lattice = src.lattice();
    let p0 = KernelOperator::vacuum_projector(lattice);
    let mut p_curr = match start {
        Some(p) => p.clone(),
        None => p0.clone(),
    };
    let mut q_curr = perturbation_of(&p_curr, &p0)?;
    let mut q_prev = q_curr.clone();

    let mut iterations = 0;
    let mut residual = T::infinity();
    let mut converged = false;
    let theta = settings.damping;

    while iterations < settings.max_iter {
        iterations += 1;
        let mixed = q_curr
            .scaled(Complex::new(theta, T::zero()))
            .add(&q_prev.scaled(Complex::new(T::one() - theta, T::zero())))?;
        let mf = assemble(&with_flag(mixed), src)?;
        let p_next = spectral_projector(&mf.d, settings.chemical_potential, settings.gap_tol)?;
        residual = p_next.sub(&p_curr)?.hs_norm();
        q_prev = q_curr;
        p_curr = p_next;
        q_curr = perturbation_of(&p_curr, &p0)?;
        if residual <= settings.tol {
            converged = true;
            break;
        }
    }

    let mf = assemble(&q_curr, src)?;
    let commutator_norm = mf.d.commutator(&p_curr)?.hs_norm();
    let energy = bdf_energy(&q_curr, src)?;
    let charge = q_curr.vacuum_trace();
    let spectrum = mf.d.spectrum()?;
    let gap = spectrum
        .values
        .iter()
        .map(|&v| (v - settings.chemical_potential).abs())
        .fold(T::infinity(), T::min);

    Ok(ScfResult {
        projector: p_curr,
        converged,
        iterations,
        residual,
        commutator_norm,
        energy,
        charge,
        gap,
        chemical_potential: settings.chemical_potential,
    })
}

fn perturbation_of<T: Real>(
    p: &KernelOperator<T>,
    p0: &KernelOperator<T>,
) -> Result<KernelOperator<T>, ScfError> {
    let mut q = p.sub(p0)?;
    q.set_hermitian_flag(true);
    Ok(q)
}

fn with_flag<T: Real>(mut q: KernelOperator<T>) -> KernelOperator<T> {
    q.set_hermitian_flag(true);
    q
}

/// Finds a chemical potential inside the mean-field gap whose converged
/// stationary state carries exactly `target` electrons, by bisection over
/// `lambda` between the vacuum sector and the upper gap edge.
pub fn charge_target_solve<T: Real>(
    src: &ExternalSource<T>,
    target: i64,
    settings: &ScfSettings<T>,
) -> Result<ScfResult<T>, ScfError> {
    settings.validate()?;
    let solve_at = |lambda: T| -> Result<ScfResult<T>, ScfError> {
        let mut s = *settings;
        s.chemical_potential = lambda;
        // nudge off eigenvalue collisions rather than failing the search
        let mut shift = T::zero();
        loop {
            s.chemical_potential = lambda + shift;
            match scf_solve(src, &s, None) {
                Err(ScfError::AmbiguousFilling { .. }) if shift < settings.gap_tol * T::of(64.0) => {
                    shift = if shift == T::zero() {
                        settings.gap_tol * T::of(2.0)
                    } else {
                        shift * T::of(2.0)
                    };
                }
                other => return other,
            }
        }
    };

    let rounded = |x: T| -> i64 { x.as_f64().round() as i64 };

    let mut lo = T::zero();
    let result = solve_at(lo)?;
    let c_lo = rounded(result.charge);
    if c_lo == target {
        return Ok(result);
    }
    if c_lo > target {
        return Err(ScfError::ChargeUnreachable {
            target,
            reached: c_lo,
        });
    }

    // upper edge of the free gap; bound states live below the continuum
    let mut hi = T::one() - settings.gap_tol * T::of(2.0);
    let result_hi = solve_at(hi)?;
    let c_hi = rounded(result_hi.charge);
    if c_hi == target {
        return Ok(result_hi);
    }
    if c_hi < target {
        return Err(ScfError::ChargeUnreachable {
            target,
            reached: c_hi,
        });
    }

    let mut best = result_hi;
    for _ in 0..200 {
        let mid = (lo + hi) * T::of(0.5);
        let r = solve_at(mid)?;
        let c = rounded(r.charge);
        if c == target {
            return Ok(r);
        }
        if c < target {
            lo = mid;
        } else {
            hi = mid;
            best = r;
        }
        if hi - lo < settings.gap_tol {
            break;
        }
    }
    Err(ScfError::ChargeUnreachable {
        target,
        reached: rounded(best.charge),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{unitary_conjugate, SpectralCache};
    use crate::lattice::MomentumLattice;
    use crate::mean_field::build_gaussian_source;
    use std::sync::Arc;

    fn lat(h: f64, cutoff: f64) -> Arc<MomentumLattice<f64>> {
        Arc::new(MomentumLattice::build(h, cutoff).unwrap())
    }

    fn settings(lat: &MomentumLattice<f64>) -> ScfSettings<f64> {
        ScfSettings::vacuum_defaults(lat.cutoff())
    }

    #[test]
    fn spectral_projector_of_free_dirac_is_vacuum() {
        let lat = lat(1.0, 1.5);
        let d0 = KernelOperator::free_dirac(&lat);
        let p = spectral_projector(&d0, 0.0, 1e-10).unwrap();
        let p0 = KernelOperator::vacuum_projector(&lat);
        assert!(p.sub(&p0).unwrap().hs_norm() < 1e-10);
        // any potential inside the free gap selects the same projector
        let p_half = spectral_projector(&d0, 0.5, 1e-10).unwrap();
        assert!(p_half.sub(&p0).unwrap().hs_norm() < 1e-10);
        // below the whole spectrum: zero projector
        let none = spectral_projector(&d0, -1e3, 1e-10).unwrap();
        assert_eq!(none.hs_norm(), 0.0);
        // a potential on an eigenvalue is refused
        assert!(matches!(
            spectral_projector(&d0, 1.0, 1e-6),
            Err(ScfError::AmbiguousFilling { .. })
        ));
    }

    #[test]
    fn vacuum_source_converges_immediately() {
        let lat = lat(1.0, 1.0);
        let src = ExternalSource::vacuum(&lat, 0.1).unwrap();
        let r = scf_solve(&src, &settings(&lat), None).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert!(r.residual < 1e-12);
        assert!(r.charge.abs() < 1e-10);
        assert!(r.energy.abs() < 1e-12);
        let p0 = KernelOperator::vacuum_projector(&lat);
        assert!(r.projector.sub(&p0).unwrap().hs_norm() < 1e-10);
    }

    #[test]
    fn weak_gaussian_source_polarizes_vacuum() {
        let lat = lat(1.0, 1.5);
        let src = build_gaussian_source(1.0, 1.0, 0.05, &lat).unwrap();
        let r = scf_solve(&src, &settings(&lat), None).unwrap();
        assert!(r.converged, "iterations {}", r.iterations);
        assert!(r.commutator_norm < 1e-9, "commutator {}", r.commutator_norm);
        // weak coupling binds nothing: vacuum sector stays neutral
        assert!(r.charge.abs() < 1e-8);
        // but the vacuum is genuinely polarized
        let p0 = KernelOperator::vacuum_projector(&lat);
        assert!(r.projector.sub(&p0).unwrap().hs_norm() > 1e-4);
        // fixed-point consistency
        let q = r.projector.sub(&p0).unwrap();
        let mf = assemble(&with_flag(q), &src).unwrap();
        let again = spectral_projector(&mf.d, 0.0, settings(&lat).gap_tol).unwrap();
        assert!(again.sub(&r.projector).unwrap().hs_norm() < 10.0 * settings(&lat).tol);
    }

    #[test]
    fn charge_quantized_along_iterates() {
        let lat = lat(1.0, 1.5);
        let src = build_gaussian_source(2.0, 1.0, 0.08, &lat).unwrap();
        let mut s = settings(&lat);
        s.max_iter = 5; // observe early iterates
        let r = scf_solve(&src, &s, None).unwrap();
        let c = r.charge;
        assert!((c - c.round()).abs() < 1e-8, "charge {c} not quantized");
    }

    #[test]
    fn energy_local_minimum_spot_check() {
        let lat = lat(1.0, 1.0);
        let src = build_gaussian_source(1.0, 1.0, 0.05, &lat).unwrap();
        let r = scf_solve(&src, &settings(&lat), None).unwrap();
        assert!(r.converged);
        let p0 = KernelOperator::vacuum_projector(&lat);
        let q_bar = r.projector.sub(&p0).unwrap();
        let mut cache = SpectralCache::new();
        for seed in 0..20u64 {
            let g = KernelOperator::random_hermitian(&lat, 100 + seed, 0.02);
            // shrink the rotation until the perturbation is within 0.1 in HS
            let mut angle = 1.0;
            let q = loop {
                let perturbed = unitary_conjugate(&r.projector, &g, angle, &mut cache).unwrap();
                let q = with_flag(perturbed.sub(&p0).unwrap());
                let diff = q.sub(&q_bar).unwrap().hs_norm();
                if diff <= 0.1 {
                    assert!(diff > 1e-6, "perturbation degenerated to zero");
                    break q;
                }
                angle *= 0.5;
            };
            let e = bdf_energy(&q, &src).unwrap();
            assert!(
                e + 1e-10 >= r.energy,
                "perturbed energy {e} below minimum {}",
                r.energy
            );
        }
    }

    #[test]
    fn damped_iteration_converges_too() {
        let lat = lat(1.0, 1.5);
        let src = build_gaussian_source(1.0, 1.0, 0.05, &lat).unwrap();
        let mut s = settings(&lat);
        s.damping = 0.6;
        let r = scf_solve(&src, &s, None).unwrap();
        assert!(r.converged);
        assert!(r.commutator_norm < 1e-9);
        assert!(matches!(
            scf_solve(&src, &ScfSettings { damping: 0.0, ..s }, None),
            Err(ScfError::InvalidDamping(_))
        ));
    }

    #[test]
    fn charge_target_neutral_case() {
        let lat = lat(1.0, 1.0);
        let src = ExternalSource::vacuum(&lat, 0.05).unwrap();
        let r = charge_target_solve(&src, 0, &settings(&lat)).unwrap();
        assert_eq!(r.charge.round() as i64, 0);
        assert_eq!(r.chemical_potential, 0.0);
    }

    #[test]
    fn charge_target_fills_bound_kramers_pair() {
        let lat = lat(1.0, 1.5);
        // strong enough attractive source to pull states into the gap
        let src = build_gaussian_source(10.0, 1.0, 0.08, &lat).unwrap();
        let r = charge_target_solve(&src, 2, &settings(&lat)).unwrap();
        assert!(r.converged);
        assert!((r.charge - 2.0).abs() < 1e-8);
        assert!(r.chemical_potential > 0.0 && r.chemical_potential < 1.0);
        // sea + rank-two orbital part: eigenvalue counts of D below lambda
        // and below 0 differ by the charge
        let mf = assemble(
            &with_flag(
                r.projector
                    .sub(&KernelOperator::vacuum_projector(&lat))
                    .unwrap(),
            ),
            &src,
        )
        .unwrap();
        let eig = mf.d.spectrum().unwrap();
        let below_zero = eig.values.iter().filter(|&&v| v < 0.0).count();
        let below_lambda = eig
            .values
            .iter()
            .filter(|&&v| v < r.chemical_potential)
            .count();
        assert_eq!(below_lambda - below_zero, 2);

        // A spin-scalar source leaves every mean-field level twofold
        // degenerate (time-reversal pairing), so odd sectors cannot be
        // selected by a chemical potential alone.
        assert!(matches!(
            charge_target_solve(&src, 1, &settings(&lat)),
            Err(ScfError::ChargeUnreachable { .. })
        ));
    }

    #[test]
    fn unreachable_charge_is_reported() {
        let lat = lat(1.0, 1.0);
        let src = ExternalSource::vacuum(&lat, 0.05).unwrap();
        // no external attraction, no bound states: charge 1 is unreachable
        assert!(matches!(
            charge_target_solve(&src, 1, &settings(&lat)),
            Err(ScfError::ChargeUnreachable { .. })
        ));
    }
}
