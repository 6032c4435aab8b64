//! Coulomb mean-field building blocks: the direct (Hartree) potential of a
//! charge density and the exchange (Fock) operator of a kernel.
//!
//! Both are momentum-space convolutions against the Coulomb multiplier
//! `4 pi / |k|^2` with the `k = 0` mode omitted.

use num_complex::Complex;

use crate::density::{density_prefactor, ChargeDensity};
use crate::kernel::KernelOperator;
use crate::scalar::Real;
use crate::spinor::SpinorMatrix;

/// Multiplication operator by `coupling * rho * 1/|x|`, as a kernel:
/// `V(p, q) = coupling * 4 pi (2 pi)^{-3/2} rho(p - q) / |p - q|^2 * I4`,
/// zero on the diagonal (omitted `k = 0` mode).
///
/// Hermitian exactly when `rho` is conjugate symmetric.
pub fn direct_potential<T: Real>(rho: &ChargeDensity<T>, coupling: T) -> KernelOperator<T> {
    let lat = rho.lattice();
    let m = lat.point_count();
    let mut out = KernelOperator::zeros(lat);
    let pref = coupling * T::of(4.0) * T::PI() * density_prefactor::<T>();
    for p in 0..m {
        let np = lat.point_int(p);
        for q in 0..m {
            if p == q {
                continue;
            }
            let nq = lat.point_int(q);
            let k = [np[0] - nq[0], np[1] - nq[1], np[2] - nq[2]];
            let idx = lat.diff_index_of(&k).expect("difference of lattice points");
            let v = rho.get(idx) * Complex::new(pref / lat.norm_sq_of(&k), T::zero());
            let block = SpinorMatrix::identity().scale(v);
            out.set_block(p, q, &block);
        }
    }
    let herm = rho.is_conjugate_symmetric(T::of(1e-12));
    out.set_hermitian_flag(herm);
    out
}

/// Exchange operator `R(p, q) = coupling (2 pi)^{-3} sum_{k != 0}
/// (4 pi / |k|^2) Q(p - k, q - k) h^3`, the sum running over shifts that stay
/// on the lattice.
///
/// Evaluated per diagonal `d = p - q`: kernel entries at fixed `d` form a
/// vector over the center point, convolved against the Coulomb weight.
pub fn exchange_operator<T: Real>(q: &KernelOperator<T>, coupling: T) -> KernelOperator<T> {
    let lat = q.lattice();
    let m = lat.point_count();
    let two_pi = T::of(2.0) * T::PI();
    let pref = coupling * T::of(4.0) * T::PI() / (two_pi * two_pi * two_pi) * lat.cell_volume();
    let mut out = KernelOperator::zeros(lat);
    for d_idx in 0..lat.diff_count() {
        let d = lat.diff_int(d_idx);
        // centers u with both u and u - d on the lattice
        let mut centers: Vec<(usize, usize)> = Vec::new();
        for u in 0..m {
            let nu = lat.point_int(u);
            let shifted = [nu[0] - d[0], nu[1] - d[1], nu[2] - d[2]];
            if let Some(v) = lat.index_of(&shifted) {
                centers.push((u, v));
            }
        }
        for &(u, u2) in &centers {
            let nu = lat.point_int(u);
            let mut acc = SpinorMatrix::zero();
            for &(w, w2) in &centers {
                if w == u {
                    continue; // k = 0 omitted
                }
                let nw = lat.point_int(w);
                let k = [nu[0] - nw[0], nu[1] - nw[1], nu[2] - nw[2]];
                let weight = pref / lat.norm_sq_of(&k);
                acc = acc.add(&q.block(w, w2).scale_re(weight));
            }
            out.set_block(u, u2, &acc);
        }
    }
    out.set_hermitian_flag(q.hermitian_flag());
    out
}

/// Reference evaluation of the exchange operator: a plain double loop over
/// kernel entries with an inner scan over Coulomb modes. Same arithmetic as
/// [`exchange_operator`], different traversal order; the two must agree to
/// round-off and serve as each other's oracle.
pub fn exchange_operator_reference<T: Real>(
    q: &KernelOperator<T>,
    coupling: T,
) -> KernelOperator<T> {
    let lat = q.lattice();
    let m = lat.point_count();
    let two_pi = T::of(2.0) * T::PI();
    let pref = coupling * T::of(4.0) * T::PI() / (two_pi * two_pi * two_pi) * lat.cell_volume();
    let mut out = KernelOperator::zeros(lat);
    for p in 0..m {
        let np = lat.point_int(p);
        for qq in 0..m {
            let nq = lat.point_int(qq);
            let mut acc = SpinorMatrix::zero();
            for k_idx in 0..lat.diff_count() {
                let k = lat.diff_int(k_idx);
                if k == [0, 0, 0] {
                    continue;
                }
                let a = [np[0] - k[0], np[1] - k[1], np[2] - k[2]];
                let b = [nq[0] - k[0], nq[1] - k[1], nq[2] - k[2]];
                if let (Some(i), Some(j)) = (lat.index_of(&a), lat.index_of(&b)) {
                    let weight = pref / lat.norm_sq_of(&k);
                    acc = acc.add(&q.block(i, j).scale_re(weight));
                }
            }
            out.set_block(p, qq, &acc);
        }
    }
    out.set_hermitian_flag(q.hermitian_flag());
    out
}
