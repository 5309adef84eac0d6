use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Periodic computational torus `(hZ / LZ)^d` with `M` sites per axis.
///
/// Sites are `x = h n` with `n` in `[0, M)^d`, stored row-major (last axis
/// contiguous). Frequencies are `xi_k = 2 pi k / L` with `k` in `[-M/2, M/2)`,
/// stored in FFT order: slot `j` holds `k = j` for `j < M/2` and `k = j - M`
/// otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeGrid {
    dim: usize,
    points: usize,
    mesh: f64,
}

impl LatticeGrid {
    pub fn new(dim: usize, points: usize, mesh: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 4, got {points}"
            )));
        }
        if !(mesh.is_finite() && mesh > 0.0) {
            return Err(Error::InvalidGrid(format!("mesh size must be positive, got {mesh}")));
        }
        Ok(Self { dim, points, mesh })
    }

    /// Two-dimensional grid, the only dimension the experiments use.
    pub fn square(points: usize, mesh: f64) -> Result<Self> {
        Self::new(2, points, mesh)
    }

    /// Grid with the given period; the mesh is `period / points`.
    pub fn with_period(dim: usize, points: usize, period: f64) -> Result<Self> {
        Self::new(dim, points, period / points as f64)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn period(&self) -> f64 {
        self.points as f64 * self.mesh
    }

    /// Total number of sites, `M^d`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.mesh.powi(self.dim as i32)
    }

    /// Torus volume `L^d`.
    pub fn volume(&self) -> f64 {
        self.period().powi(self.dim as i32)
    }

    /// Signed frequency index `k` stored in FFT slot `j`.
    pub fn freq_index(&self, j: usize) -> i64 {
        let m = self.points as i64;
        let j = j as i64;
        if j < m / 2 {
            j
        } else {
            j - m
        }
    }

    /// FFT slot holding signed frequency index `k`.
    pub fn freq_slot(&self, k: i64) -> usize {
        k.rem_euclid(self.points as i64) as usize
    }

    /// Wavenumber `xi = 2 pi k / L` of FFT slot `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * PI * self.freq_index(j) as f64 / self.period()
    }

    /// Axis coordinate `h n` of site slot `n`.
    pub fn coordinate(&self, n: usize) -> f64 {
        self.mesh * n as f64
    }

    /// Site slot `n` mapped to the symmetric range `[-M/2, M/2)`.
    pub fn signed_site(&self, n: usize) -> i64 {
        self.freq_index(n)
    }

    /// Row-major multi-index of a flat offset.
    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        debug_assert_eq!(out.len(), self.dim);
        for slot in out.iter_mut().rev() {
            *slot = flat % self.points;
            flat /= self.points;
        }
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.points + i)
    }

    /// Evaluates `f` on the wavenumber vector of every frequency slot, in
    /// storage order.
    pub fn frequency_map<T>(&self, mut f: impl FnMut(&[f64]) -> T) -> Vec<T> {
        let axis: Vec<f64> = (0..self.points).map(|j| self.wavenumber(j)).collect();
        let mut idx = vec![0usize; self.dim];
        let mut xi = vec![0.0; self.dim];
        (0..self.len())
            .map(|flat| {
                self.unravel(flat, &mut idx);
                for (x, &i) in xi.iter_mut().zip(&idx) {
                    *x = axis[i];
                }
                f(&xi)
            })
            .collect()
    }

    /// Evaluates `f` on the coordinates `h n` of every site, in storage order.
    pub fn site_map<T>(&self, mut f: impl FnMut(&[f64]) -> T) -> Vec<T> {
        let mut idx = vec![0usize; self.dim];
        let mut x = vec![0.0; self.dim];
        (0..self.len())
            .map(|flat| {
                self.unravel(flat, &mut idx);
                for (c, &i) in x.iter_mut().zip(&idx) {
                    *c = self.coordinate(i);
                }
                f(&x)
            })
            .collect()
    }

    /// Same points per axis and mesh, to within relative `1e-12` on the mesh.
    pub fn matches(&self, other: &LatticeGrid) -> bool {
        self.dim == other.dim
            && self.points == other.points
            && (self.mesh - other.mesh).abs() <= 1e-12 * self.mesh.max(other.mesh)
    }

    pub(crate) fn ensure_matches(&self, other: &LatticeGrid) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "(d={}, M={}, h={}) vs (d={}, M={}, h={})",
                self.dim, self.points, self.mesh, other.dim, other.points, other.mesh
            )))
        }
    }
}
