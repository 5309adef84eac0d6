//! Uniform-grid quadrature for two-dimensional oscillatory integrals
//!
//! ```text
//! int_{[-P/2, P/2]^2} e^{i y . theta} exp(i c (a(theta_1) + a(theta_2))^2) w(theta) d theta
//! ```
//!
//! whose integrand is even in each coordinate separately. On a periodic,
//! smooth integrand the trapezoid rule is the DFT, so one transform returns the
//! integral at every output site at once; the only error is aliasing from
//! outputs beyond the half-range, which the caller certifies by doubling.
//!
//! Evenness lets us store and transform only the quadrant `y >= 0`, which cuts
//! memory by four and makes `M_q = 16384` fit in about 1 GiB.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::fft::plan;
use crate::lattice::{ComplexField, LatticeGrid};

/// Resolution policy for kernel evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Smallest samples per axis tried.
    pub min_points: usize,
    /// Relative self-consistency tolerance on the sup under doubling.
    pub tol: f64,
    /// Refinement cap on samples per axis.
    pub max_points: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            min_points: 64,
            tol: 1e-8,
            max_points: 8192,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.min_points < 64 || !self.min_points.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "quadrature min_points must be a power of two >= 64, got {}",
                self.min_points
            )));
        }
        if !self.max_points.is_power_of_two() || self.max_points < self.min_points {
            return Err(Error::InvalidArgument(format!(
                "quadrature max_points must be a power of two >= min_points, got {}",
                self.max_points
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("quadrature tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Fraction of the half-range treated as the aliasing guard annulus.
pub const ANNULUS_FRACTION: f64 = 0.1;
/// Largest allowed annulus modulus relative to the global max.
pub const ANNULUS_RATIO: f64 = 1e-3;

/// Separable window `sum_t sign_t u_t(theta_1) u_t(theta_2)`.
#[derive(Debug, Clone)]
pub(crate) struct Window {
    pub terms: Vec<(f64, Vec<f64>)>,
}

impl Window {
    fn at(&self, j1: usize, j2: usize) -> f64 {
        self.terms.iter().map(|(s, u)| s * u[j1] * u[j2]).sum()
    }

    fn row_is_zero(&self, j1: usize) -> bool {
        self.terms.iter().all(|(_, u)| u[j1] == 0.0)
    }
}

/// One integrand family sampled on `M` points per axis (only `j <= M/2` stored).
pub(crate) struct EvenIntegrand {
    pub points: usize,
    /// `a(theta_j)` for `j = 0..=M/2`.
    pub axis_phase: Vec<f64>,
    /// Coefficient `c` of the quartic phase.
    pub coupling: f64,
    pub window: Window,
    /// Quadrature weight per sample (cell area, including any prefactor).
    pub weight: f64,
    /// Output coordinate per integer index.
    pub output_step: f64,
}

/// Kernel values on the output quadrant `[0, M/2]^2`, extended to all signs by
/// evenness.
#[derive(Debug, Clone)]
pub struct EvenKernel {
    points: usize,
    side: usize,
    step: f64,
    values: Vec<Complex64>,
}

impl EvenKernel {
    /// Samples per axis used by the quadrature.
    pub fn points(&self) -> usize {
        self.points
    }

    /// Largest output index per axis, `M/2`.
    pub fn half_range(&self) -> usize {
        self.side - 1
    }

    /// Output coordinate per index step.
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Value at integer output index `(i1, i2)`, `|i| <= M/2`.
    pub fn at(&self, i1: i64, i2: i64) -> Complex64 {
        let (a, b) = (i1.unsigned_abs() as usize, i2.unsigned_abs() as usize);
        assert!(a < self.side && b < self.side, "index outside the computed range");
        self.values[a * self.side + b]
    }

    pub fn quadrant(&self) -> &[Complex64] {
        &self.values
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Index of the max modulus in the quadrant.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0.0);
        for (i, v) in self.values.iter().enumerate() {
            let n = v.norm();
            if n > best.1 {
                best = (i, n);
            }
        }
        (best.0 / self.side, best.0 % self.side)
    }

    /// Max modulus on `max(|i1|,|i2|) >= (1 - frac) M/2`.
    pub fn annulus_max(&self, frac: f64) -> f64 {
        let cut = ((1.0 - frac) * (self.side - 1) as f64).floor() as usize;
        let mut best = 0.0f64;
        for a in 0..self.side {
            for b in 0..self.side {
                if a.max(b) >= cut {
                    best = best.max(self.values[a * self.side + b].norm());
                }
            }
        }
        best
    }

    /// `true` when the guard annulus is below `ANNULUS_RATIO` of the global max.
    pub fn annulus_ok(&self) -> bool {
        let sup = self.sup_abs();
        sup == 0.0 || self.annulus_max(ANNULUS_FRACTION) < ANNULUS_RATIO * sup
    }

    /// Max `|self - coarser|` over the coarser kernel's range, relative to the
    /// sup of `self`.
    pub fn discrepancy(&self, coarser: &EvenKernel) -> f64 {
        let sup = self.sup_abs();
        let mut diff = 0.0f64;
        for a in 0..coarser.side {
            for b in 0..coarser.side {
                let d = (self.values[a * self.side + b] - coarser.values[a * coarser.side + b]).norm();
                diff = diff.max(d);
            }
        }
        if sup == 0.0 {
            diff
        } else {
            diff / sup
        }
    }

    /// Full field on the `M x M` integer lattice (`h = 1`), site `n` holding
    /// the value at signed index `n - M` for `n >= M/2`.
    pub fn to_field(&self) -> ComplexField {
        let m = self.points;
        let grid = LatticeGrid::square(m, 1.0).expect("power of two");
        let mut v = vec![Complex64::default(); m * m];
        for n1 in 0..m {
            let y1 = grid.signed_site(n1);
            for n2 in 0..m {
                v[n1 * m + n2] = self.at(y1, grid.signed_site(n2));
            }
        }
        ComplexField::new(grid, v).expect("finite kernel")
    }
}

/// Evaluates the integrand family with one even-symmetric 2D transform.
pub(crate) fn even_transform(integrand: &EvenIntegrand) -> EvenKernel {
    let m = integrand.points;
    let half = m / 2;
    let side = half + 1;
    let fft = plan(m, false);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let mut out = vec![Complex64::default(); side * side];
    let mut line = vec![Complex64::default(); m];
    let a = &integrand.axis_phase;
    let c = integrand.coupling;

    // stage 1: transform along theta_2 for each theta_1 >= 0
    for j1 in 0..side {
        if integrand.window.row_is_zero(j1) {
            continue;
        }
        for j2 in 0..side {
            let w = integrand.window.at(j1, j2);
            let v = if w == 0.0 {
                Complex64::default()
            } else {
                let s = a[j1] + a[j2];
                Complex64::from_polar(w, c * s * s)
            };
            line[j2] = v;
            if j2 > 0 && j2 < half {
                line[m - j2] = v;
            }
        }
        fft.process_with_scratch(&mut line, &mut scratch);
        out[j1 * side..(j1 + 1) * side].copy_from_slice(&line[..side]);
    }

    // stage 2: transform along theta_1, a block of columns at a time
    const BLOCK: usize = 16;
    let mut lines = vec![Complex64::default(); BLOCK * m];
    let mut b0 = 0;
    while b0 < side {
        let width = BLOCK.min(side - b0);
        for j1 in 0..side {
            let row = &out[j1 * side + b0..j1 * side + b0 + width];
            for (c_i, v) in row.iter().enumerate() {
                lines[c_i * m + j1] = *v;
                if j1 > 0 && j1 < half {
                    lines[c_i * m + m - j1] = *v;
                }
            }
        }
        for c_i in 0..width {
            fft.process_with_scratch(&mut lines[c_i * m..(c_i + 1) * m], &mut scratch);
        }
        for y1 in 0..side {
            for c_i in 0..width {
                out[y1 * side + b0 + c_i] = lines[c_i * m + y1] * integrand.weight;
            }
        }
        b0 += width;
    }

    EvenKernel {
        points: m,
        side,
        step: integrand.output_step,
        values: out,
    }
}

/// Doubles the resolution from `start` until the guard annulus is quiet and
/// two successive kernels agree to `spec.tol`; returns the finer kernel.
pub(crate) fn refine<F>(start: usize, spec: &QuadratureSpec, mut build: F) -> Result<EvenKernel>
where
    F: FnMut(usize) -> EvenIntegrand,
{
    spec.validate()?;
    let mut m = start.max(spec.min_points).next_power_of_two();
    if m > spec.max_points {
        return Err(Error::QuadratureBudget {
            required: m,
            cap: spec.max_points,
        });
    }
    let mut prev: Option<EvenKernel> = None;
    loop {
        let current = even_transform(&build(m));
        let discrepancy = prev.as_ref().map(|p| current.discrepancy(p));
        if let Some(d) = discrepancy {
            if d < spec.tol && current.annulus_ok() {
                return Ok(current);
            }
        }
        if 2 * m > spec.max_points {
            return Err(Error::QuadratureUnconverged {
                resolution: m,
                discrepancy: discrepancy.unwrap_or(f64::NAN),
                tol: spec.tol,
            });
        }
        prev = Some(current);
        m *= 2;
    }
}

/// Max of `|grad (c (a_1 + a_2)^2)|` over the window support, sampled on a
/// coarse grid; used to size the first resolution.
pub(crate) fn phase_speed(
    coarse: usize,
    axis_phase: impl Fn(f64) -> (f64, f64),
    coupling: f64,
    window: impl Fn(f64, f64) -> f64,
    half_period: f64,
) -> f64 {
    let samples: Vec<(f64, f64, f64)> = (0..=coarse)
        .map(|j| {
            let t = half_period * j as f64 / coarse as f64;
            let (a, da) = axis_phase(t);
            (t, a, da)
        })
        .collect();
    let mut best = 0.0f64;
    for &(t1, a1, d1) in &samples {
        for &(t2, a2, d2) in &samples {
            if window(t1, t2) <= 1e-8 {
                continue;
            }
            let g = 2.0 * coupling.abs() * (a1 + a2);
            best = best.max(g * (d1 * d1 + d2 * d2).sqrt());
        }
    }
    best
}

/// Resolution whose half-range covers `extent` output indices plus a few
/// sites of slack.
pub(crate) fn points_for_extent(extent: f64) -> usize {
    let need = 2.0 * (extent + 16.0);
    (need.ceil() as usize).next_power_of_two()
}

/// Distance, in units of the window's spatial scale, beyond which the
/// transform of the smooth band window falls below `tol` relative to its peak.
/// The bump's transform decays like `exp(-3 sqrt(r))`.
pub(crate) fn window_tail(tol: f64) -> f64 {
    let l = (1.0 / tol).ln().max(0.0) / 3.0;
    l * l
}
