// Temporary timing/drift probe (not part of the deliverable test suite).
use std::sync::Arc;
use std::time::Instant;

use bdf_core::*;

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "step".into());
    let lat: Arc<Lattice64> = Arc::new(MomentumLattice::build(0.5, 1.5).unwrap());
    eprintln!("lattice: {} points, dim {}", lat.point_count(), lat.spinor_dim());

    match mode.as_str() {
        // wall time per unitary step at acceptance scale
        "step" => {
            let src = build_gaussian_source(1.0, 1.0, 0.05, &lat).unwrap();
            let st = build_initial_state(&lat, 1, &src, InitialMode::FreeOrbitals).unwrap();
            let mut cache = SpectralCache::new();
            let t0 = Instant::now();
            let mut cur = st;
            let n = 5;
            for _ in 0..n {
                cur = bdf_core::dynamics::step_unitary_cached(&cur, 0.02, &src, &mut cache).unwrap();
            }
            eprintln!("unitary step: {:?} per step", t0.elapsed() / n);
            let t0 = Instant::now();
            let _rec = observe(&cur, &src).unwrap();
            eprintln!("observe: {:?}", t0.elapsed());
        }
        // free-vacuum stationarity drift over many steps (criterion-1 risk)
        "vacuum" => {
            let steps: u64 = std::env::args()
                .nth(2)
                .and_then(|s| s.parse().ok())
                .unwrap_or(1000);
            let src = ExternalSource::vacuum(&lat, 0.1).unwrap();
            let st = build_initial_state(&lat, 0, &src, InitialMode::FreeOrbitals).unwrap();
            let mut cache = SpectralCache::new();
            let mut cur = st;
            let t0 = Instant::now();
            let mut worst_q = 0.0f64;
            for k in 0..steps {
                cur = bdf_core::dynamics::step_unitary_cached(&cur, 0.05, &src, &mut cache).unwrap();
                let qn = cur.perturbation().hs_norm();
                worst_q = worst_q.max(qn);
                if (k + 1) % 200 == 0 {
                    eprintln!(
                        "step {:4}: |Q| = {qn:.3e}, idem = {:.3e}  ({:?} elapsed)",
                        k + 1,
                        cur.idempotence_residual().unwrap(),
                        t0.elapsed()
                    );
                }
            }
            let rec = observe(&cur, &src).unwrap();
            eprintln!("final record: {rec:?}");
            eprintln!("worst |Q| along run: {worst_q:.3e}");
        }
        // energy drift vs dt (criterion-3 order check)
        "order" => {
            let src = build_gaussian_source(1.0, 1.0, 0.05, &lat).unwrap();
            let st = build_initial_state(&lat, 1, &src, InitialMode::FreeOrbitals).unwrap();
            let e0 = bdf_energy(st.perturbation(), &src).unwrap();
            eprintln!("initial energy: {e0:.12}");
            for dt in [0.02f64, 0.01] {
                let steps = (5.0 / dt).round() as u64;
                let mut cache = SpectralCache::new();
                let mut cur = st.clone();
                let mut drift = 0.0f64;
                let t0 = Instant::now();
                for _ in 0..steps {
                    cur = bdf_core::dynamics::step_unitary_cached(&cur, dt, &src, &mut cache)
                        .unwrap();
                    let e = bdf_energy(cur.perturbation(), &src).unwrap();
                    drift = drift.max((e - e0).abs());
                }
                eprintln!(
                    "dt = {dt}: steps {steps}, max energy drift {drift:.6e}  ({:?})",
                    t0.elapsed()
                );
            }
        }
        _ => eprintln!("unknown mode"),
    }
}
