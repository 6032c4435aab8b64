//! Time evolution of the vacuum perturbation.
//!
//! The equation of motion is `i dP/dt = [D_Q, P]` with `Q = P - P0`;
//! equivalently `i dQ/dt = F(Q) = [D_Q, Q] + [V_Q, P0]`. The production
//! integrator conjugates the projector by mean-field propagators (a
//! predictor half step fixes the midpoint generator), which preserves
//! Hermiticity, idempotence and the spectrum structurally. A classical
//! four-stage explicit scheme on `Q` serves as the cross-validation path.

use std::sync::Arc;

use num_complex::Complex;

use crate::density::density;
use crate::kernel::{unitary_conjugate, KernelError, KernelOperator, SpectralCache};
use crate::lattice::MomentumLattice;
use crate::mean_field::{assemble, bdf_energy, ExternalSource, MeanFieldError};
use crate::scalar::Real;
use crate::scf::{charge_target_solve, ScfError, ScfSettings};
use crate::spinor;

#[derive(thiserror::Error, Debug)]
pub enum DynamicsError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    MeanField(#[from] MeanFieldError),
    #[error(transparent)]
    Scf(#[from] ScfError),
    #[error("time step must be positive, got {0}")]
    InvalidTimeStep(f64),
    #[error(
        "idempotence residual {residual:e} exceeded the hard limit {limit:e} at step {step}"
    )]
    IdempotenceBlowup { residual: f64, limit: f64, step: u64 },
    #[error("initial state wants {requested} orbitals but only {available} positive-energy states exist")]
    TooManyOrbitals { requested: usize, available: usize },
    #[error("observable sink failed: {0}")]
    Sink(String),
}

/// Projector state of the evolution; `Q = P - P0` is recomputed from the
/// stored projector, never integrated separately.
#[derive(Debug, Clone)]
pub struct EvolutionState<T: Real> {
    pub time: T,
    pub step_index: u64,
    projector: KernelOperator<T>,
    perturbation: KernelOperator<T>,
}

impl<T: Real> EvolutionState<T> {
    pub fn from_projector(
        projector: KernelOperator<T>,
        time: T,
        step_index: u64,
    ) -> Result<Self, DynamicsError> {
        let p0 = KernelOperator::vacuum_projector(projector.lattice());
        let mut perturbation = projector.sub(&p0)?;
        perturbation.set_hermitian_flag(true);
        Ok(Self {
            time,
            step_index,
            projector,
            perturbation,
        })
    }

    pub fn projector(&self) -> &KernelOperator<T> {
        &self.projector
    }

    pub fn perturbation(&self) -> &KernelOperator<T> {
        &self.perturbation
    }

    pub fn lattice(&self) -> &Arc<MomentumLattice<T>> {
        self.projector.lattice()
    }

    /// `||P^2 - P||_HS`.
    pub fn idempotence_residual(&self) -> Result<T, DynamicsError> {
        let sq = self.projector.compose(&self.projector)?;
        Ok(sq.sub(&self.projector)?.hs_norm())
    }
}

/// Per-step scalar observables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableRecord<T> {
    pub time: T,
    /// Vacuum-relative trace of `Q`, the conserved total charge.
    pub charge: T,
    pub energy: T,
    pub hs_norm_q: T,
    pub coulomb_norm_rho_minus_n: T,
    pub idempotence_residual: T,
    /// `||[D_Q, P]||_HS`, zero exactly on stationary states.
    pub commutator_norm: T,
}

/// Receives observable records (and, if interested, full states for
/// checkpointing) in step order.
pub trait ObservableSink<T: Real> {
    fn record(&mut self, record: &ObservableRecord<T>) -> Result<(), DynamicsError>;

    /// Called after every step with the fresh state; the default ignores it.
    fn checkpoint(&mut self, _state: &EvolutionState<T>) -> Result<(), DynamicsError> {
        Ok(())
    }
}

/// Collects records in memory.
#[derive(Debug, Default)]
pub struct MemorySink<T> {
    pub records: Vec<ObservableRecord<T>>,
}

impl<T: Real> ObservableSink<T> for MemorySink<T> {
    fn record(&mut self, record: &ObservableRecord<T>) -> Result<(), DynamicsError> {
        self.records.push(*record);
        Ok(())
    }
}

/// Right-hand side `F(Q) = [D_Q, Q] + [V_Q, P0]` of `i dQ/dt = F(Q)`.
///
/// Since `[D0, P0] = 0` this equals `[D_Q, P]`; as a commutator of two
/// Hermitian operators it is anti-Hermitian, `F(Q)^dagger = -F(Q)`.
pub fn rhs<T: Real>(
    q: &KernelOperator<T>,
    src: &ExternalSource<T>,
) -> Result<KernelOperator<T>, DynamicsError> {
    let mf = assemble(q, src)?;
    let p0 = KernelOperator::vacuum_projector(q.lattice());
    let dq = mf.d.commutator(q)?;
    let vp = mf.v.commutator(&p0)?;
    Ok(dq.add(&vp)?)
}

/// Evaluates the full observable record of a state.
pub fn observe<T: Real>(
    state: &EvolutionState<T>,
    src: &ExternalSource<T>,
) -> Result<ObservableRecord<T>, DynamicsError> {
    let q = state.perturbation();
    let mf = assemble(q, src)?;
    let rho_rel = density(q).sub(src.density())?;
    let comm = mf.d.commutator(state.projector())?;
    Ok(ObservableRecord {
        time: state.time,
        charge: q.vacuum_trace(),
        energy: bdf_energy(q, src)?,
        hs_norm_q: q.hs_norm(),
        coulomb_norm_rho_minus_n: rho_rel.coulomb_norm(),
        idempotence_residual: state.idempotence_residual()?,
        commutator_norm: comm.hs_norm(),
    })
}

/// One step of the structure-preserving integrator.
///
/// Predictor: `P_half = exp(-i dt/2 D1) P exp(+i dt/2 D1)` with
/// `D1 = D(Q(t))`; corrector: `P(t+dt) = exp(-i dt D2) P exp(+i dt D2)`
/// with `D2 = D(Q_half)`. Exponentials go through the Hermitian
/// eigendecomposition of the generator. Unitary conjugation preserves the
/// spectrum, so idempotence and the integer charge survive to round-off;
/// a final retraction onto the projector manifold (`P <- 3P^2 - 2P^3`)
/// keeps the per-step rounding noise from accumulating in the spectrum
/// over long trajectories.
pub fn step_unitary<T: Real>(
    state: &EvolutionState<T>,
    dt: T,
    src: &ExternalSource<T>,
) -> Result<EvolutionState<T>, DynamicsError> {
    let mut cache = SpectralCache::new();
    step_unitary_cached(state, dt, src, &mut cache)
}

pub fn step_unitary_cached<T: Real>(
    state: &EvolutionState<T>,
    dt: T,
    src: &ExternalSource<T>,
    cache: &mut SpectralCache<T>,
) -> Result<EvolutionState<T>, DynamicsError> {
    if !(dt > T::zero()) {
        return Err(DynamicsError::InvalidTimeStep(dt.as_f64()));
    }
    let half = T::of(0.5);
    let d1 = assemble(state.perturbation(), src)?.d;
    let p_half = unitary_conjugate(state.projector(), &d1, half * dt, cache)?;
    let p0 = KernelOperator::vacuum_projector(state.lattice());
    let mut q_half = p_half.sub(&p0)?;
    q_half.set_hermitian_flag(true);
    let d2 = assemble(&q_half, src)?.d;
    let p_next = unitary_conjugate(state.projector(), &d2, dt, cache)?;
    let p_next = projector_retraction(&p_next)?;
    EvolutionState::from_projector(
        p_next,
        state.time + dt,
        state.step_index + 1,
    )
}

/// Retraction onto the projector manifold: `3P^2 - 2P^3` fixes exact
/// projectors and contracts eigenvalue deviations from {0, 1}
/// quadratically.
fn projector_retraction<T: Real>(p: &KernelOperator<T>) -> Result<KernelOperator<T>, DynamicsError> {
    let sq = p.compose(p)?;
    let cube = sq.compose(p)?;
    let three = Complex::new(T::of(3.0), T::zero());
    let two = Complex::new(T::of(2.0), T::zero());
    let mut out = sq.scaled(three).sub(&cube.scaled(two))?;
    out.hermitize();
    Ok(out)
}

/// One classical four-stage explicit step on `dQ/dt = -i F(Q)`.
///
/// Does not preserve idempotence exactly; reference integrator for
/// cross-validation only.
pub fn step_rk4<T: Real>(
    state: &EvolutionState<T>,
    dt: T,
    src: &ExternalSource<T>,
) -> Result<EvolutionState<T>, DynamicsError> {
    if !(dt > T::zero()) {
        return Err(DynamicsError::InvalidTimeStep(dt.as_f64()));
    }
    let minus_i = Complex::new(T::zero(), -T::one());
    let deriv = |q: &KernelOperator<T>| -> Result<KernelOperator<T>, DynamicsError> {
        Ok(rhs(q, src)?.scaled(minus_i))
    };
    let q0 = state.perturbation();
    let half = Complex::new(T::of(0.5), T::zero());
    let sixth = Complex::new(T::of(1.0 / 6.0), T::zero());
    let dtc = Complex::new(dt, T::zero());

    let k1 = deriv(q0)?;
    let q1 = q0.add(&k1.scaled(half * dtc))?;
    let k2 = deriv(&with_hermitian_flag(q1))?;
    let q2 = q0.add(&k2.scaled(half * dtc))?;
    let k3 = deriv(&with_hermitian_flag(q2))?;
    let q3 = q0.add(&k3.scaled(dtc))?;
    let k4 = deriv(&with_hermitian_flag(q3))?;

    let two = Complex::new(T::of(2.0), T::zero());
    let incr = k1
        .add(&k2.scaled(two))?
        .add(&k3.scaled(two))?
        .add(&k4)?
        .scaled(sixth * dtc);
    let mut q_next = q0.add(&incr)?;
    q_next.set_hermitian_flag(true);
    let p0 = KernelOperator::vacuum_projector(state.lattice());
    let p_next = p0.add(&q_next)?;
    EvolutionState::from_projector(p_next, state.time + dt, state.step_index + 1)
}

fn with_hermitian_flag<T: Real>(mut q: KernelOperator<T>) -> KernelOperator<T> {
    q.set_hermitian_flag(true);
    q
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Unitary,
    Rk4,
}

/// How an initial projector is filled on top of the Dirac sea.
#[derive(Debug, Clone)]
pub enum InitialMode<T: Real> {
    /// `P0` plus the lowest free positive-energy orbitals.
    FreeOrbitals,
    /// Charge-constrained self-consistent stationary state.
    ScfOrbitals(ScfSettings<T>),
}

/// `P_I = P0` plus `n_electrons` filled positive-energy states.
///
/// Free orbitals are exact eigenspinors of `D0`, filled in ascending
/// `(E(p), p, spin slot)` order, hence deterministic. The SCF mode solves
/// the charge-constrained stationary problem and uses its projector.
pub fn build_initial_state<T: Real>(
    lattice: &Arc<MomentumLattice<T>>,
    n_electrons: usize,
    src: &ExternalSource<T>,
    mode: InitialMode<T>,
) -> Result<EvolutionState<T>, DynamicsError> {
    match mode {
        InitialMode::FreeOrbitals => {
            let available = 2 * lattice.point_count();
            if n_electrons > available {
                return Err(DynamicsError::TooManyOrbitals {
                    requested: n_electrons,
                    available,
                });
            }
            // (E, lexicographic point, slot) ordering
            let mut order: Vec<(T, usize)> = (0..lattice.point_count())
                .map(|i| (spinor::energy(lattice.point(i)), i))
                .collect();
            order.sort_by(|a, b| {
                a.0.partial_cmp(&b.0)
                    .unwrap()
                    .then_with(|| lattice.point_int(a.1).cmp(&lattice.point_int(b.1)))
            });
            let mut p = KernelOperator::vacuum_projector(lattice);
            let inv_cell = lattice.cell_volume().recip();
            let mut filled = 0usize;
            'outer: for (_, idx) in order {
                for slot in 0..2 {
                    if filled == n_electrons {
                        break 'outer;
                    }
                    let u = spinor::positive_orbital(lattice.point(idx), slot);
                    let mut block = p.block(idx, idx);
                    for a in 0..4 {
                        for b in 0..4 {
                            block.e[a][b] += u[a] * u[b].conj() * Complex::new(inv_cell, T::zero());
                        }
                    }
                    p.set_block(idx, idx, &block);
                    filled += 1;
                }
            }
            EvolutionState::from_projector(p, T::zero(), 0)
        }
        InitialMode::ScfOrbitals(settings) => {
            let result = charge_target_solve(src, n_electrons as i64, &settings)?;
            EvolutionState::from_projector(result.projector, T::zero(), 0)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunSettings<T> {
    pub dt: T,
    pub n_steps: u64,
    /// Emit a record every this many steps (the initial and final states are
    /// always recorded).
    pub record_interval: u64,
    pub integrator: Integrator,
    /// Aborts the run when `||P^2 - P||_HS` exceeds this; signals integrator
    /// misuse rather than physics.
    pub idempotence_hard_limit: T,
}

/// Advances `n_steps` from `state`, emitting records to the sink.
///
/// Records are emitted at step indices divisible by `record_interval` and at
/// the final step, so a resumed run reproduces the record schedule of an
/// uninterrupted one. Deterministic for fixed inputs.
pub fn run<T: Real, S: ObservableSink<T>>(
    state: EvolutionState<T>,
    settings: &RunSettings<T>,
    src: &ExternalSource<T>,
    sink: &mut S,
) -> Result<EvolutionState<T>, DynamicsError> {
    if !(settings.dt > T::zero()) {
        return Err(DynamicsError::InvalidTimeStep(settings.dt.as_f64()));
    }
    let interval = settings.record_interval.max(1);
    let final_index = state.step_index + settings.n_steps;
    let mut cache = SpectralCache::new();
    let mut current = state;

    let should_record =
        |idx: u64| -> bool { idx % interval == 0 || idx == final_index };

    let guard = |st: &EvolutionState<T>| -> Result<T, DynamicsError> {
        let residual = st.idempotence_residual()?;
        if residual > settings.idempotence_hard_limit {
            return Err(DynamicsError::IdempotenceBlowup {
                residual: residual.as_f64(),
                limit: settings.idempotence_hard_limit.as_f64(),
                step: st.step_index,
            });
        }
        Ok(residual)
    };

    guard(&current)?;
    if should_record(current.step_index) {
        let record = observe(&current, src)?;
        sink.record(&record)?;
    }

    for _ in 0..settings.n_steps {
        let next = match settings.integrator {
            Integrator::Unitary => step_unitary_cached(&current, settings.dt, src, &mut cache)?,
            Integrator::Rk4 => step_rk4(&current, settings.dt, src)?,
        };
        current = next;
        guard(&current)?;
        if should_record(current.step_index) {
            let record = observe(&current, src)?;
            sink.record(&record)?;
        }
        sink.checkpoint(&current)?;
    }
    Ok(current)
}
