//! Cutoff momentum lattice.
//!
//! The one-particle space is spanned by plane-wave modes on the cubic grid
//! `h * Z^3` restricted to the closed ball `|p| <= cutoff`. Densities and
//! convolution kernels live on the difference lattice `{p - q}`. Momentum
//! integrals are uniform Riemann sums with weight `h^3` throughout the crate.

use std::collections::HashMap;

use crate::scalar::Real;

pub type IntVec = [i64; 3];

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum LatticeError {
    #[error("lattice spacing must be positive, got {0}")]
    InvalidSpacing(f64),
    #[error("momentum cutoff must be nonnegative, got {0}")]
    InvalidCutoff(f64),
}

/// Finite momentum grid `{p in h*Z^3 : |p| <= cutoff}` with its difference
/// lattice and index maps.
///
/// Points are stored as integer triples `n` (so `p = h * n`) in ascending
/// lexicographic order; all index maps are exact integer lookups.
#[derive(Debug, Clone)]
pub struct MomentumLattice<T: Real> {
    spacing: T,
    cutoff: T,
    points: Vec<IntVec>,
    point_index: HashMap<IntVec, usize>,
    diff_points: Vec<IntVec>,
    diff_index: HashMap<IntVec, usize>,
}

impl<T: Real> MomentumLattice<T> {
    /// Builds the lattice. A cutoff below the spacing still admits the
    /// origin, so the smallest valid lattice has a single point.
    pub fn build(spacing: T, cutoff: T) -> Result<Self, LatticeError> {
        if !(spacing > T::zero()) || !spacing.is_finite() {
            return Err(LatticeError::InvalidSpacing(spacing.as_f64()));
        }
        if !(cutoff >= T::zero()) || !cutoff.is_finite() {
            return Err(LatticeError::InvalidCutoff(cutoff.as_f64()));
        }
        let h2 = spacing * spacing;
        let c2 = cutoff * cutoff;
        let reach = (cutoff / spacing).as_f64().floor() as i64 + 1;

        let inside = |n: &IntVec| {
            let nsq = T::of((n[0] * n[0] + n[1] * n[1] + n[2] * n[2]) as f64);
            nsq * h2 <= c2
        };

        let mut points = Vec::new();
        for nx in -reach..=reach {
            for ny in -reach..=reach {
                for nz in -reach..=reach {
                    let n = [nx, ny, nz];
                    if inside(&n) {
                        points.push(n);
                    }
                }
            }
        }
        points.sort_unstable();
        let point_index: HashMap<IntVec, usize> =
            points.iter().enumerate().map(|(i, &n)| (n, i)).collect();

        let mut diff_set: HashMap<IntVec, ()> = HashMap::new();
        for a in &points {
            for b in &points {
                diff_set.insert([a[0] - b[0], a[1] - b[1], a[2] - b[2]], ());
            }
        }
        let mut diff_points: Vec<IntVec> = diff_set.into_keys().collect();
        diff_points.sort_unstable();
        let diff_index: HashMap<IntVec, usize> =
            diff_points.iter().enumerate().map(|(i, &n)| (n, i)).collect();

        Ok(Self {
            spacing,
            cutoff,
            points,
            point_index,
            diff_points,
            diff_index,
        })
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn cutoff(&self) -> T {
        self.cutoff
    }

    /// Quadrature weight of a single mode, `h^3`.
    pub fn cell_volume(&self) -> T {
        self.spacing * self.spacing * self.spacing
    }

    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    /// Dimension of the discretized one-particle space, `4 * point_count`.
    pub fn spinor_dim(&self) -> usize {
        4 * self.points.len()
    }

    pub fn point_int(&self, idx: usize) -> IntVec {
        self.points[idx]
    }

    pub fn point(&self, idx: usize) -> [T; 3] {
        let n = self.points[idx];
        [
            self.spacing * T::of(n[0] as f64),
            self.spacing * T::of(n[1] as f64),
            self.spacing * T::of(n[2] as f64),
        ]
    }

    pub fn points_int(&self) -> &[IntVec] {
        &self.points
    }

    pub fn index_of(&self, n: &IntVec) -> Option<usize> {
        self.point_index.get(n).copied()
    }

    pub fn contains(&self, n: &IntVec) -> bool {
        self.point_index.contains_key(n)
    }

    pub fn diff_count(&self) -> usize {
        self.diff_points.len()
    }

    pub fn diff_int(&self, idx: usize) -> IntVec {
        self.diff_points[idx]
    }

    pub fn diff(&self, idx: usize) -> [T; 3] {
        let n = self.diff_points[idx];
        [
            self.spacing * T::of(n[0] as f64),
            self.spacing * T::of(n[1] as f64),
            self.spacing * T::of(n[2] as f64),
        ]
    }

    pub fn diffs_int(&self) -> &[IntVec] {
        &self.diff_points
    }

    pub fn diff_index_of(&self, n: &IntVec) -> Option<usize> {
        self.diff_index.get(n).copied()
    }

    /// `|h*n|^2` for an integer triple.
    pub fn norm_sq_of(&self, n: &IntVec) -> T {
        let nsq = T::of((n[0] * n[0] + n[1] * n[1] + n[2] * n[2]) as f64);
        self.spacing * self.spacing * nsq
    }

    /// Two lattices are interchangeable when spacing, cutoff and mode count
    /// agree bitwise.
    pub fn compatible(&self, other: &Self) -> bool {
        self.spacing.bit_pattern() == other.spacing.bit_pattern()
            && self.cutoff.bit_pattern() == other.cutoff.bit_pattern()
            && self.points.len() == other.points.len()
    }
}
