//! Hilbert-Schmidt kernel operators on the cutoff lattice.
//!
//! An operator is stored through its momentum kernel: a 4x4 complex block
//! `A(p, q)` per ordered pair of lattice points, flattened into a dense
//! `(4M, 4M)` matrix with entry `(4p + a, 4q + b)`. The discrete calculus is
//! fixed once here and used everywhere:
//!
//! * products contract with the quadrature weight `h^3`,
//! * `tr A = sum_p Tr A(p,p) h^3`,
//! * `<A, B> = sum_{p,q} Tr(A(p,q)^* B(p,q)) h^6`,
//! * multiplication operators have smooth kernels, while diagonal
//!   (momentum-multiplier) kernels carry `delta_{pq} / h^3`.
//!
//! Under the rescaling `A -> h^3 A` this algebra is plainly matrix algebra,
//! which is what the spectral routines use.
//!
//! All reductions run in ascending index order (row-major over `(p, q)`
//! pairs, single accumulator); reruns on identical inputs are bit-identical.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex;

use crate::lattice::MomentumLattice;
use crate::rng::SplitMix64;
use crate::scalar::{EigenError, HermitianEigen, Real};
use crate::spinor::{self, SpinorMatrix};

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum KernelError {
    #[error("operands live on different lattices ({left} vs {right} points)")]
    LatticeMismatch { left: usize, right: usize },
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

/// Dense kernel operator on the cutoff one-particle space.
#[derive(Debug, Clone)]
pub struct KernelOperator<T: Real> {
    lattice: Arc<MomentumLattice<T>>,
    data: Array2<Complex<T>>,
    hermitian: bool,
}

impl<T: Real> KernelOperator<T> {
    pub fn zeros(lattice: &Arc<MomentumLattice<T>>) -> Self {
        let dim = lattice.spinor_dim();
        Self {
            lattice: Arc::clone(lattice),
            data: Array2::zeros((dim, dim)),
            hermitian: true,
        }
    }

    /// Builds a diagonal (momentum-multiplier) kernel from a symbol; blocks
    /// are `f(p) delta_{pq} / h^3`.
    pub fn diagonal(
        lattice: &Arc<MomentumLattice<T>>,
        f: impl Fn([T; 3]) -> SpinorMatrix<T>,
        hermitian: bool,
    ) -> Self {
        let mut op = Self::zeros(lattice);
        let inv_cell = lattice.cell_volume().recip();
        for idx in 0..lattice.point_count() {
            let block = f(lattice.point(idx)).scale_re(inv_cell);
            op.set_block(idx, idx, &block);
        }
        op.hermitian = hermitian;
        op
    }

    /// Identity operator (kernel `delta_{pq} I / h^3`).
    pub fn identity(lattice: &Arc<MomentumLattice<T>>) -> Self {
        Self::diagonal(lattice, |_| SpinorMatrix::identity(), true)
    }

    /// Free Dirac operator `D0` with symbol `alpha . p + beta`.
    pub fn free_dirac(lattice: &Arc<MomentumLattice<T>>) -> Self {
        Self::diagonal(lattice, spinor::dirac_symbol, true)
    }

    /// `|D0|`, symbol `E(p) I`.
    pub fn abs_free_dirac(lattice: &Arc<MomentumLattice<T>>) -> Self {
        Self::diagonal(
            lattice,
            |p| SpinorMatrix::identity().scale_re(spinor::energy(p)),
            true,
        )
    }

    /// Free vacuum projector `P0`, symbol `(I - (alpha.p + beta)/E(p)) / 2`.
    pub fn vacuum_projector(lattice: &Arc<MomentumLattice<T>>) -> Self {
        Self::diagonal(lattice, spinor::negative_projector, true)
    }

    /// Deterministic pseudorandom Hermitian kernel with entries of size
    /// `~scale`; used by self tests and property checks.
    pub fn random_hermitian(lattice: &Arc<MomentumLattice<T>>, seed: u64, scale: T) -> Self {
        let mut rng = SplitMix64::new(seed);
        let dim = lattice.spinor_dim();
        let mut op = Self::zeros(lattice);
        for i in 0..dim {
            for j in 0..dim {
                let re = T::of(rng.uniform_symmetric()) * scale;
                let im = T::of(rng.uniform_symmetric()) * scale;
                op.data[(i, j)] = Complex::new(re, im);
            }
        }
        let adj = op.data.t().mapv(|z| z.conj());
        let half = Complex::new(T::of(0.5), T::zero());
        op.data = (&op.data + &adj).mapv(|z| z * half);
        op.hermitian = true;
        op
    }

    /// Deterministic pseudorandom Hermitian kernel supported on `blocks`
    /// random block pairs (plus their adjoints).
    pub fn random_hermitian_sparse(
        lattice: &Arc<MomentumLattice<T>>,
        seed: u64,
        scale: T,
        blocks: usize,
    ) -> Self {
        let mut rng = SplitMix64::new(seed);
        let m = lattice.point_count();
        let mut op = Self::zeros(lattice);
        op.hermitian = true;
        for _ in 0..blocks {
            let p = (rng.next_u64() % m as u64) as usize;
            let q = (rng.next_u64() % m as u64) as usize;
            let mut b = SpinorMatrix::zero();
            for i in 0..4 {
                for j in 0..4 {
                    b.e[i][j] = Complex::new(
                        T::of(rng.uniform_symmetric()) * scale,
                        T::of(rng.uniform_symmetric()) * scale,
                    );
                }
            }
            let mut cur = op.block(p, q);
            cur = cur.add(&b);
            op.set_block(p, q, &cur);
            let mut mirror = op.block(q, p);
            mirror = mirror.add(&b.adjoint());
            op.set_block(q, p, &mirror);
        }
        // exact Hermitian symmetrization of the diagonal blocks
        let sym = {
            let adj = op.data.t().mapv(|z| z.conj());
            let half = Complex::new(T::of(0.5), T::zero());
            (&op.data + &adj).mapv(|z| z * half)
        };
        op.data = sym;
        op
    }

    pub fn lattice(&self) -> &Arc<MomentumLattice<T>> {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &Array2<Complex<T>> {
        &self.data
    }

    pub fn matrix_mut(&mut self) -> &mut Array2<Complex<T>> {
        &mut self.data
    }

    pub fn from_matrix(
        lattice: &Arc<MomentumLattice<T>>,
        data: Array2<Complex<T>>,
        hermitian: bool,
    ) -> Self {
        assert_eq!(data.nrows(), lattice.spinor_dim());
        assert_eq!(data.ncols(), lattice.spinor_dim());
        Self {
            lattice: Arc::clone(lattice),
            data,
            hermitian,
        }
    }

    pub fn hermitian_flag(&self) -> bool {
        self.hermitian
    }

    pub fn set_hermitian_flag(&mut self, flag: bool) {
        self.hermitian = flag;
    }

    pub fn block(&self, p: usize, q: usize) -> SpinorMatrix<T> {
        let mut b = SpinorMatrix::zero();
        for a in 0..4 {
            for c in 0..4 {
                b.e[a][c] = self.data[(4 * p + a, 4 * q + c)];
            }
        }
        b
    }

    pub fn set_block(&mut self, p: usize, q: usize, block: &SpinorMatrix<T>) {
        for a in 0..4 {
            for c in 0..4 {
                self.data[(4 * p + a, 4 * q + c)] = block.e[a][c];
            }
        }
    }

    fn check_same_lattice(&self, other: &Self) -> Result<(), KernelError> {
        if Arc::ptr_eq(&self.lattice, &other.lattice) || self.lattice.compatible(&other.lattice) {
            Ok(())
        } else {
            Err(KernelError::LatticeMismatch {
                left: self.lattice.point_count(),
                right: other.lattice.point_count(),
            })
        }
    }

    /// Hilbert-Schmidt inner product `tr(A^* B)` with the `h^6` weight.
    pub fn hs_inner(&self, other: &Self) -> Result<Complex<T>, KernelError> {
        self.check_same_lattice(other)?;
        let mut acc = Complex::new(T::zero(), T::zero());
        for (a, b) in self.data.iter().zip(other.data.iter()) {
            acc += a.conj() * *b;
        }
        let h3 = self.lattice.cell_volume();
        Ok(acc * Complex::new(h3 * h3, T::zero()))
    }

    pub fn hs_norm_sq(&self) -> T {
        let mut acc = T::zero();
        for a in self.data.iter() {
            acc += a.norm_sqr();
        }
        let h3 = self.lattice.cell_volume();
        acc * h3 * h3
    }

    pub fn hs_norm(&self) -> T {
        self.hs_norm_sq().sqrt()
    }

    /// Operator trace `sum_p Tr A(p,p) h^3`.
    pub fn trace(&self) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in 0..self.dim() {
            acc += self.data[(i, i)];
        }
        acc * Complex::new(self.lattice.cell_volume(), T::zero())
    }

    pub fn adjoint(&self) -> Self {
        Self {
            lattice: Arc::clone(&self.lattice),
            data: self.data.t().mapv(|z| z.conj()),
            hermitian: self.hermitian,
        }
    }

    /// `||A - A^dagger||_HS`; zero for an exactly Hermitian kernel.
    pub fn hermiticity_residual(&self) -> T {
        let mut acc = T::zero();
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                acc += (self.data[(i, j)] - self.data[(j, i)].conj()).norm_sqr();
            }
        }
        let h3 = self.lattice.cell_volume();
        (acc * h3 * h3).sqrt()
    }

    /// Replaces the kernel by its Hermitian part `(A + A^dagger)/2`.
    pub fn hermitize(&mut self) {
        let adj = self.data.t().mapv(|z| z.conj());
        let half = Complex::new(T::of(0.5), T::zero());
        self.data = (&self.data + &adj).mapv(|z| z * half);
        self.hermitian = true;
    }

    pub fn scaled(&self, s: Complex<T>) -> Self {
        Self {
            lattice: Arc::clone(&self.lattice),
            data: self.data.mapv(|z| z * s),
            hermitian: self.hermitian && s.im == T::zero(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, KernelError> {
        self.check_same_lattice(other)?;
        Ok(Self {
            lattice: Arc::clone(&self.lattice),
            data: &self.data + &other.data,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, KernelError> {
        self.check_same_lattice(other)?;
        Ok(Self {
            lattice: Arc::clone(&self.lattice),
            data: &self.data - &other.data,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    /// Operator product `(AB)(p,q) = sum_s A(p,s) B(s,q) h^3`.
    pub fn compose(&self, other: &Self) -> Result<Self, KernelError> {
        self.check_same_lattice(other)?;
        let h3 = Complex::new(self.lattice.cell_volume(), T::zero());
        let data = self.data.dot(&other.data).mapv(|z| z * h3);
        Ok(Self {
            lattice: Arc::clone(&self.lattice),
            data,
            hermitian: false,
        })
    }

    /// Commutator `AB - BA`.
    pub fn commutator(&self, other: &Self) -> Result<Self, KernelError> {
        let ab = self.compose(other)?;
        let ba = other.compose(self)?;
        let mut out = ab.sub(&ba)?;
        out.hermitian = false;
        Ok(out)
    }

    /// `tr(A B)` without materializing the product: contraction with the
    /// `h^6` weight over the shared lattice.
    pub fn trace_product(&self, other: &Self) -> Result<Complex<T>, KernelError> {
        self.check_same_lattice(other)?;
        let dim = self.dim();
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in 0..dim {
            for j in 0..dim {
                acc += self.data[(i, j)] * other.data[(j, i)];
            }
        }
        let h3 = self.lattice.cell_volume();
        Ok(acc * Complex::new(h3 * h3, T::zero()))
    }

    /// `tr(Q^3)`; for a difference of two orthogonal projectors this is the
    /// integer vacuum-relative charge.
    pub fn trace_cube(&self) -> Result<Complex<T>, KernelError> {
        let sq = self.compose(self)?;
        sq.trace_product(self)
    }
}

/// The four vacuum-relative blocks of an operator:
/// `A++ = (1-P0) A (1-P0)`, `A-- = P0 A P0`, and the two cross blocks.
pub struct VacuumBlocks<T: Real> {
    pub pp: KernelOperator<T>,
    pub mm: KernelOperator<T>,
    pub pm: KernelOperator<T>,
    pub mp: KernelOperator<T>,
}

impl<T: Real> KernelOperator<T> {
    /// Splits the operator along the free vacuum. `P0` is diagonal, so the
    /// split acts per block pair and costs `O(M^2)` 4x4 products.
    pub fn vacuum_blocks(&self) -> VacuumBlocks<T> {
        let lat = &self.lattice;
        let m = lat.point_count();
        let neg: Vec<SpinorMatrix<T>> = (0..m)
            .map(|i| spinor::negative_projector(lat.point(i)))
            .collect();
        let pos: Vec<SpinorMatrix<T>> = (0..m)
            .map(|i| spinor::positive_projector(lat.point(i)))
            .collect();
        let mut pp = Self::zeros(lat);
        let mut mm = Self::zeros(lat);
        let mut pm = Self::zeros(lat);
        let mut mp = Self::zeros(lat);
        for p in 0..m {
            for q in 0..m {
                let a = self.block(p, q);
                pp.set_block(p, q, &pos[p].mul(&a).mul(&pos[q]));
                mm.set_block(p, q, &neg[p].mul(&a).mul(&neg[q]));
                pm.set_block(p, q, &pos[p].mul(&a).mul(&neg[q]));
                mp.set_block(p, q, &neg[p].mul(&a).mul(&pos[q]));
            }
        }
        pp.hermitian = self.hermitian;
        mm.hermitian = self.hermitian;
        pm.hermitian = false;
        mp.hermitian = false;
        VacuumBlocks { pp, mm, pm, mp }
    }

    /// Vacuum-relative trace `tr A++ + tr A--`; only diagonal blocks
    /// contribute, so this is `O(M)`.
    ///
    /// Intended for observables whose trace is real (Hermitian kernels, or
    /// products of Hermitians such as `D0 Q`); the imaginary part is
    /// round-off and discarded.
    pub fn vacuum_trace(&self) -> T {
        let lat = &self.lattice;
        let mut acc = T::zero();
        for p in 0..lat.point_count() {
            let point = lat.point(p);
            let neg = spinor::negative_projector(point);
            let pos = spinor::positive_projector(point);
            let a = self.block(p, p);
            acc += pos.mul(&a).mul(&pos).trace().re + neg.mul(&a).mul(&neg).trace().re;
        }
        acc * lat.cell_volume()
    }

    /// Eigendecomposition of the operator (i.e. of the rescaled matrix
    /// `h^3 A`, whose spectrum is the operator spectrum).
    pub fn spectrum(&self) -> Result<HermitianEigen<T>, KernelError> {
        let h3 = Complex::new(self.lattice.cell_volume(), T::zero());
        let scaled = self.data.mapv(|z| z * h3);
        Ok(T::hermitian_eigen(scaled.view())?)
    }
}

/// One-deep memo for operator eigendecompositions.
///
/// Along stationary trajectories the mean-field matrix repeats bit-exactly
/// step after step; reusing the factorization is then exact.
#[derive(Default)]
pub struct SpectralCache<T: Real> {
    entry: Option<(Array2<Complex<T>>, HermitianEigen<T>)>,
}

impl<T: Real> SpectralCache<T> {
    pub fn new() -> Self {
        Self { entry: None }
    }

    fn bits_equal(a: &Array2<Complex<T>>, b: &Array2<Complex<T>>) -> bool {
        a.dim() == b.dim()
            && a.iter().zip(b.iter()).all(|(x, y)| {
                x.re.bit_pattern() == y.re.bit_pattern()
                    && x.im.bit_pattern() == y.im.bit_pattern()
            })
    }

    pub fn spectrum_of(
        &mut self,
        op: &KernelOperator<T>,
    ) -> Result<&HermitianEigen<T>, KernelError> {
        let h3 = Complex::new(op.lattice().cell_volume(), T::zero());
        let scaled = op.matrix().mapv(|z| z * h3);
        let hit = matches!(&self.entry, Some((key, _)) if Self::bits_equal(key, &scaled));
        if !hit {
            let eig = T::hermitian_eigen(scaled.view())?;
            self.entry = Some((scaled, eig));
        }
        Ok(&self.entry.as_ref().unwrap().1)
    }
}

/// Conjugates `base` by the propagator of `generator`:
/// `exp(-i t G) base exp(+i t G)`, with the exponential taken through the
/// Hermitian eigendecomposition of `G`.
pub fn unitary_conjugate<T: Real>(
    base: &KernelOperator<T>,
    generator: &KernelOperator<T>,
    t: T,
    cache: &mut SpectralCache<T>,
) -> Result<KernelOperator<T>, KernelError> {
    let eig = cache.spectrum_of(generator)?;
    let dim = eig.vectors.nrows();
    // E = V diag(exp(-i t lambda)) V^dagger
    let mut phased = eig.vectors.clone();
    for (j, lam) in eig.values.iter().enumerate() {
        let phase = Complex::new(T::zero(), -t * *lam).exp();
        for i in 0..dim {
            phased[(i, j)] *= phase;
        }
    }
    let vdag = eig.vectors.t().mapv(|z| z.conj());
    let prop = phased.dot(&vdag);
    let propdag = prop.t().mapv(|z| z.conj());
    let data = prop.dot(base.matrix()).dot(&propdag);
    let mut out = KernelOperator::from_matrix(base.lattice(), data, false);
    if base.hermitian_flag() {
        out.hermitize();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn lat(h: f64, cutoff: f64) -> Arc<MomentumLattice<f64>> {
        Arc::new(MomentumLattice::build(h, cutoff).unwrap())
    }

    #[test]
    fn hs_inner_unit_block_is_h6() {
        let lat = lat(0.5, 1.0);
        let mut a = KernelOperator::zeros(&lat);
        let mut b = SpinorMatrix::zero();
        b.e[2][1] = Complex64::new(1.0, 0.0);
        a.set_block(3, 3, &b);
        let h6 = 0.5f64.powi(6);
        assert_eq!(a.hs_inner(&a).unwrap(), Complex64::new(h6, 0.0));
        assert_eq!(a.hs_norm_sq(), h6);
        let z = KernelOperator::zeros(&lat);
        assert_eq!(z.hs_inner(&a).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn hs_inner_is_conjugate_symmetric() {
        let lat = lat(1.0, 1.0);
        let a = KernelOperator::random_hermitian(&lat, 7, 1.0);
        let b = KernelOperator::random_hermitian(&lat, 8, 1.0);
        let ab = a.hs_inner(&b).unwrap();
        let ba = b.hs_inner(&a).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-13);
        assert!(a.hs_inner(&a).unwrap().re > 0.0);
    }

    #[test]
    fn lattice_mismatch_is_reported() {
        let a = KernelOperator::zeros(&lat(1.0, 1.0));
        let b = KernelOperator::zeros(&lat(1.0, 1.5));
        assert!(matches!(
            a.hs_inner(&b),
            Err(KernelError::LatticeMismatch { .. })
        ));
        assert!(a.commutator(&b).is_err());
    }

    #[test]
    fn identity_is_neutral_for_compose() {
        let lat = lat(1.0, 1.0);
        let id = KernelOperator::identity(&lat);
        let a = KernelOperator::random_hermitian(&lat, 3, 1.0);
        let ia = id.compose(&a).unwrap();
        let ai = a.compose(&id).unwrap();
        assert!(ia.sub(&a).unwrap().hs_norm() < 1e-13);
        assert!(ai.sub(&a).unwrap().hs_norm() < 1e-13);
    }

    #[test]
    fn commutator_basics() {
        let lat = lat(1.0, 1.5);
        let a = KernelOperator::random_hermitian(&lat, 11, 1.0);
        let b = KernelOperator::random_hermitian(&lat, 12, 1.0);
        assert!(a.commutator(&a).unwrap().hs_norm() < 1e-12);
        // commutator of two diagonal kernels vanishes
        let d0 = KernelOperator::free_dirac(&lat);
        let p0 = KernelOperator::vacuum_projector(&lat);
        assert!(d0.commutator(&p0).unwrap().hs_norm() < 1e-14);
        // cyclicity: tr [A, B] = 0
        assert!(a.commutator(&b).unwrap().trace().norm() < 1e-12);
        // anti-Hermitian for Hermitian inputs
        let c = a.commutator(&b).unwrap();
        let minus_cdag = c.adjoint().scaled(Complex64::new(-1.0, 0.0));
        assert!(c.sub(&minus_cdag).unwrap().hs_norm() < 1e-12);
    }

    #[test]
    fn vacuum_projector_is_projector() {
        let lat = lat(0.5, 1.0);
        let p0 = KernelOperator::vacuum_projector(&lat);
        let p0sq = p0.compose(&p0).unwrap();
        assert!(p0sq.sub(&p0).unwrap().hs_norm() < 1e-13);
        assert!(p0.hermiticity_residual() < 1e-14);
        // trace: two filled spinor states per mode
        let expected = 2.0 * lat.point_count() as f64;
        assert!((p0.trace().re - expected).abs() < 1e-10);
    }

    #[test]
    fn vacuum_blocks_sum_and_project() {
        let lat = lat(1.0, 1.0);
        let a = KernelOperator::random_hermitian(&lat, 5, 1.0);
        let blocks = a.vacuum_blocks();
        let sum = blocks
            .pp
            .add(&blocks.mm)
            .unwrap()
            .add(&blocks.pm)
            .unwrap()
            .add(&blocks.mp)
            .unwrap();
        assert!(sum.sub(&a).unwrap().hs_norm() < 1e-13);
        // projecting twice is idempotent
        let twice = blocks.pp.vacuum_blocks();
        assert!(twice.pp.sub(&blocks.pp).unwrap().hs_norm() < 1e-13);
        assert!(twice.mm.hs_norm() < 1e-14);
        // (A+-)^dagger = A-+ for Hermitian A
        assert!(blocks.pm.adjoint().sub(&blocks.mp).unwrap().hs_norm() < 1e-13);
        // P0 itself sits in the -- block
        let p0 = KernelOperator::vacuum_projector(&lat);
        let pb = p0.vacuum_blocks();
        assert!(pb.pp.hs_norm() < 1e-13);
        assert!(pb.mm.sub(&p0).unwrap().hs_norm() < 1e-13);
    }

    #[test]
    fn vacuum_trace_matches_plain_trace_and_block_route() {
        let lat = lat(1.0, 1.5);
        let a = KernelOperator::random_hermitian(&lat, 21, 1.0);
        // at finite M the vacuum-relative trace equals the full trace
        assert!((a.vacuum_trace() - a.trace().re).abs() < 1e-11);
        let blocks = a.vacuum_blocks();
        let via_blocks = blocks.pp.trace().re + blocks.mm.trace().re;
        assert!((a.vacuum_trace() - via_blocks).abs() < 1e-11);
        assert_eq!(KernelOperator::zeros(&lat).vacuum_trace(), 0.0);
    }

    #[test]
    fn spectrum_of_free_dirac_is_dispersion() {
        let lat = lat(1.0, 1.0);
        let d0 = KernelOperator::free_dirac(&lat);
        let eig = d0.spectrum().unwrap();
        // eigenvalues come in +-E(p) pairs, two per mode
        let mut expected: Vec<f64> = Vec::new();
        for i in 0..lat.point_count() {
            let e = spinor::energy(lat.point(i));
            expected.extend_from_slice(&[-e, -e, e, e]);
        }
        expected.sort_by(f64::total_cmp);
        for (got, want) in eig.values.iter().zip(expected.iter()) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn unitary_conjugation_preserves_projector_spectrum() {
        let lat = lat(1.0, 1.0);
        let p0 = KernelOperator::vacuum_projector(&lat);
        let gen = KernelOperator::random_hermitian(&lat, 9, 0.5);
        let mut cache = SpectralCache::new();
        let moved = unitary_conjugate(&p0, &gen, 0.3, &mut cache).unwrap();
        let sq = moved.compose(&moved).unwrap();
        assert!(sq.sub(&moved).unwrap().hs_norm() < 1e-12);
        assert!((moved.trace().re - p0.trace().re).abs() < 1e-9);
        // t = 0 is the identity map
        let same = unitary_conjugate(&p0, &gen, 0.0, &mut cache).unwrap();
        assert!(same.sub(&p0).unwrap().hs_norm() < 1e-12);
    }

    #[test]
    fn trace_cube_equals_charge_for_projector_difference() {
        let lat = lat(1.0, 1.0);
        let p0 = KernelOperator::vacuum_projector(&lat);
        let gen = KernelOperator::random_hermitian(&lat, 33, 0.4);
        let mut cache = SpectralCache::new();
        let p = unitary_conjugate(&p0, &gen, 1.0, &mut cache).unwrap();
        let q = p.sub(&p0).unwrap();
        let charge = q.vacuum_trace();
        let cube = q.trace_cube().unwrap();
        assert!(cube.im.abs() < 1e-10);
        assert!((charge - cube.re).abs() < 1e-9);
        assert!((charge - charge.round()).abs() < 1e-9);
    }
}
