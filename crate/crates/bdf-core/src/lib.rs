//! Spectral simulator core for the self-consistent evolution of a Dirac-sea
//! projector under an ultraviolet momentum cutoff.
//!
//! The state of the system is an orthogonal projector `P` on the cutoff
//! one-particle space whose deviation `Q = P - P0` from the free vacuum is
//! Hilbert-Schmidt. The crate provides, in layers:
//!
//! * [`lattice`] / [`spinor`] — the momentum grid and the Dirac algebra;
//! * [`kernel`] — dense kernel-operator algebra and vacuum-relative traces;
//! * [`density`] / [`potential`] — charge densities, Coulomb functionals,
//!   direct and exchange potentials;
//! * [`mean_field`] — the mean-field operator and the conserved energy;
//! * [`dynamics`] — structure-preserving unitary time stepping plus a
//!   reference explicit integrator;
//! * [`scf`] — stationary states via damped spectral fixed-point iteration.
//!
//! Everything is generic over the real scalar through [`scalar::Real`];
//! `f64` is the production type, `f32` exists for quick experiments. The
//! concrete aliases below pin the common instantiations.

use openblas_src as _;

pub mod density;
pub mod dynamics;
pub mod kernel;
pub mod lattice;
mod linalg;
pub mod mean_field;
pub mod potential;
mod rng;
pub mod scalar;
pub mod scf;
pub mod spinor;

pub use density::{coulomb_pairing, density, density_prefactor, ChargeDensity};
pub use dynamics::{
    build_initial_state, observe, rhs, run, step_rk4, step_unitary, DynamicsError, EvolutionState,
    InitialMode, Integrator, MemorySink, ObservableRecord, ObservableSink, RunSettings,
};
pub use kernel::{unitary_conjugate, KernelError, KernelOperator, SpectralCache, VacuumBlocks};
pub use lattice::{LatticeError, MomentumLattice};
pub use mean_field::{
    assemble, bdf_energy, bdf_energy_terms, build_gaussian_source, coercivity_report,
    CoercivityReport, EnergyTerms, ExternalSource, MeanFieldError, MeanFieldOperator,
};
pub use potential::{direct_potential, exchange_operator, exchange_operator_reference};
pub use scalar::{EigenError, HermitianEigen, Real};
pub use scf::{charge_target_solve, scf_solve, spectral_projector, ScfError, ScfResult, ScfSettings};
pub use spinor::SpinorMatrix;

pub type Lattice64 = MomentumLattice<f64>;
pub type Lattice32 = MomentumLattice<f32>;
pub type Kernel64 = KernelOperator<f64>;
pub type Kernel32 = KernelOperator<f32>;
pub type Density64 = ChargeDensity<f64>;
pub type Density32 = ChargeDensity<f32>;
pub type State64 = EvolutionState<f64>;
pub type Source64 = ExternalSource<f64>;

#[cfg(test)]
mod smoke {
    use super::*;
    use std::sync::Arc;

    // the whole stack instantiates at f32 as well
    #[test]
    fn f32_instantiation_round_trip() {
        let lat: Arc<Lattice32> = Arc::new(MomentumLattice::build(1.0f32, 1.0).unwrap());
        let src = ExternalSource::vacuum(&lat, 0.1f32).unwrap();
        let state =
            build_initial_state(&lat, 1, &src, InitialMode::FreeOrbitals).unwrap();
        let next = step_unitary(&state, 0.1f32, &src).unwrap();
        let charge = next.perturbation().vacuum_trace();
        assert!((charge - 1.0).abs() < 1e-4);
        assert!(next.idempotence_residual().unwrap() < 1e-5);
    }
}
