//! Passage between continuum data and lattice fields, and the
//! lattice-to-continuum convergence experiment.
//!
//! `discretize` takes cell averages over `y + [0, h)^d`; `interpolate_eval`
//! extends lattice data affinely on each cell using forward differences.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use libm::{erf, erfc};

use crate::error::{Error, Result};
use crate::lattice::{dft, idft, lp_norm, ComplexField, LatticeGrid, SpectrumField};
use crate::oscillatory::{fit_loglog_slope, panel::gauss_legendre};
use crate::solvers::{solve_final, FlowKind, NonlinearityParams};

/// Smallest period-to-width ratio for which the periodized Gaussian is
/// indistinguishable from its central copy.
pub const GAUSSIAN_PERIOD_RATIO: f64 = 12.0;

/// Closed-form continuum data with exact cell averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ContinuumFunction {
    /// `a exp(-|z - c|^2 / w^2)`, periodized over the grid's torus.
    Gaussian {
        center: Vec<f64>,
        width: f64,
        amplitude: Complex64,
    },
    /// `sum_k a_k exp(2 pi i k.z / P)` with period `P`.
    TrigPolynomial { period: f64, terms: Vec<(Vec<i64>, Complex64)> },
    /// `a + b.z`, not periodized.
    Affine { offset: Complex64, slope: Vec<Complex64> },
}

impl ContinuumFunction {
    pub fn gaussian(center: Vec<f64>, width: f64, amplitude: Complex64) -> Self {
        Self::Gaussian { center, width, amplitude }
    }

    pub fn constant(dim: usize, c: Complex64) -> Self {
        Self::Affine {
            offset: c,
            slope: vec![Complex64::default(); dim],
        }
    }

    /// Gaussian centred in the torus of `grid`.
    pub fn centred_gaussian(grid: &LatticeGrid, width: f64) -> Self {
        Self::gaussian(vec![0.5 * grid.period(); grid.dim()], width, Complex64::new(1.0, 0.0))
    }

    /// Random trig polynomial with modes `|k|_inf <= band`, unit-variance
    /// complex Gaussian coefficients damped by `(1 + |k|^2)^{-1}`.
    pub fn random_band_limited(dim: usize, period: f64, band: i64, rng: &mut crate::rng::SplitMix64) -> Self {
        let side = (2 * band + 1) as usize;
        let count = side.pow(dim as u32);
        let mut terms = Vec::with_capacity(count);
        for flat in 0..count {
            let mut r = flat;
            let k: Vec<i64> = (0..dim)
                .map(|_| {
                    let v = (r % side) as i64 - band;
                    r /= side;
                    v
                })
                .collect();
            let k2: i64 = k.iter().map(|v| v * v).sum();
            let a = Complex64::new(rng.normal(), rng.normal()) / (1.0 + k2 as f64);
            terms.push((k, a));
        }
        Self::TrigPolynomial { period, terms }
    }

    fn dim(&self) -> usize {
        match self {
            Self::Gaussian { center, .. } => center.len(),
            Self::TrigPolynomial { terms, .. } => terms.first().map_or(0, |t| t.0.len()),
            Self::Affine { slope, .. } => slope.len(),
        }
    }

    /// Checks the descriptor against the torus of `grid`.
    pub fn check_grid(&self, grid: &LatticeGrid) -> Result<()> {
        let d = self.dim();
        if d != grid.dim() && !matches!(self, Self::TrigPolynomial { terms, .. } if terms.is_empty()) {
            return Err(Error::GridMismatch(format!("function of dimension {d} on a {}-d grid", grid.dim())));
        }
        match self {
            Self::Gaussian { width, .. } => {
                if !(*width > 0.0) {
                    return Err(Error::InvalidArgument(format!("Gaussian width must be positive, got {width}")));
                }
                if grid.period() < GAUSSIAN_PERIOD_RATIO * width {
                    return Err(Error::InvalidArgument(format!(
                        "torus period {} is below {GAUSSIAN_PERIOD_RATIO} Gaussian widths ({width})",
                        grid.period()
                    )));
                }
            }
            Self::TrigPolynomial { period, .. } => {
                if (period - grid.period()).abs() > 1e-12 * period {
                    return Err(Error::GridMismatch(format!(
                        "trig polynomial period {period} differs from torus period {}",
                        grid.period()
                    )));
                }
            }
            Self::Affine { .. } => {}
        }
        Ok(())
    }

    /// Point value (periodized for the Gaussian).
    pub fn eval(&self, z: &[f64], period: f64) -> Complex64 {
        match self {
            Self::Gaussian { center, width, amplitude } => {
                let mut v = 1.0;
                for (&zi, &ci) in z.iter().zip(center) {
                    let base = (zi - ci).rem_euclid(period);
                    let s: f64 = [-period, 0.0, period]
                        .iter()
                        .map(|&m| (-((base + m) / width).powi(2)).exp())
                        .sum();
                    v *= s;
                }
                amplitude * v
            }
            Self::TrigPolynomial { period: p, terms } => terms
                .iter()
                .map(|(k, a)| {
                    let phase: f64 = k.iter().zip(z).map(|(&ki, &zi)| 2.0 * PI * ki as f64 * zi / p).sum();
                    a * Complex64::from_polar(1.0, phase)
                })
                .sum(),
            Self::Affine { offset, slope } => offset + slope.iter().zip(z).map(|(b, &zi)| b * zi).sum::<Complex64>(),
        }
    }

    /// Point samples at the grid sites.
    pub fn sample(&self, grid: &LatticeGrid) -> Result<ComplexField> {
        self.check_grid(grid)?;
        let p = grid.period();
        ComplexField::from_fn(*grid, |x| self.eval(x, p))
    }
}

/// `erf(b) - erf(a)` without cancellation in the tails.
fn erf_diff(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        erfc(a) - erfc(b)
    } else if b <= 0.0 {
        erfc(-b) - erfc(-a)
    } else {
        erf(b) - erf(a)
    }
}

/// Average of the periodized `exp(-(z - c)^2 / w^2)` over `[y, y + h)`.
fn gaussian_cell_average(y: f64, h: f64, c: f64, w: f64, period: f64) -> f64 {
    let base = (y - c).rem_euclid(period);
    let base = if base > 0.5 * period { base - period } else { base };
    [-period, 0.0, period]
        .iter()
        .map(|&m| {
            let lo = (base + m) / w;
            let hi = (base + m + h) / w;
            0.5 * PI.sqrt() * w / h * erf_diff(lo, hi)
        })
        .sum()
}

/// Cell averages `h^{-d} int_{y + [0,h)^d} f`, in closed form.
pub fn discretize(f: &ContinuumFunction, grid: &LatticeGrid) -> Result<ComplexField> {
    f.check_grid(grid)?;
    let h = grid.mesh();
    let m = grid.points();
    let period = grid.period();
    match f {
        ContinuumFunction::Gaussian { center, width, amplitude } => {
            let axes: Vec<Vec<f64>> = center
                .iter()
                .map(|&c| (0..m).map(|n| gaussian_cell_average(h * n as f64, h, c, *width, period)).collect())
                .collect();
            tensor_field(grid, &axes, *amplitude)
        }
        ContinuumFunction::TrigPolynomial { terms, .. } => {
            let mut acc = vec![Complex64::default(); grid.len()];
            for (k, a) in terms {
                let axes: Vec<Vec<Complex64>> = k
                    .iter()
                    .map(|&ki| {
                        let kappa = 2.0 * PI * ki as f64 / period;
                        let damp = sinc(0.5 * kappa * h);
                        (0..m)
                            .map(|n| Complex64::from_polar(damp, kappa * h * (n as f64 + 0.5)))
                            .collect()
                    })
                    .collect();
                let term = tensor_complex(grid, &axes);
                for (s, t) in acc.iter_mut().zip(term) {
                    *s += a * t;
                }
            }
            ComplexField::new(*grid, acc)
        }
        ContinuumFunction::Affine { offset, slope } => ComplexField::from_fn(*grid, |x| {
            offset + slope.iter().zip(x).map(|(b, &xi)| b * (xi + 0.5 * h)).sum::<Complex64>()
        }),
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn tensor_field(grid: &LatticeGrid, axes: &[Vec<f64>], amplitude: Complex64) -> Result<ComplexField> {
    let mut idx = vec![0usize; grid.dim()];
    let values = (0..grid.len())
        .map(|flat| {
            grid.unravel(flat, &mut idx);
            let v: f64 = idx.iter().zip(axes).map(|(&i, a)| a[i]).product();
            amplitude * v
        })
        .collect();
    ComplexField::new(*grid, values)
}

fn tensor_complex(grid: &LatticeGrid, axes: &[Vec<Complex64>]) -> Vec<Complex64> {
    let mut idx = vec![0usize; grid.dim()];
    (0..grid.len())
        .map(|flat| {
            grid.unravel(flat, &mut idx);
            idx.iter().zip(axes).map(|(&i, a)| a[i]).product()
        })
        .collect()
}

/// Cell averages by a tensor Gauss-Legendre rule with `nodes` points per
/// axis per cell. Independent of the closed forms in [`discretize`].
pub fn discretize_by_quadrature(f: &ContinuumFunction, grid: &LatticeGrid, nodes: usize) -> Result<ComplexField> {
    f.check_grid(grid)?;
    let (x, w) = gauss_legendre(nodes);
    let h = grid.mesh();
    let d = grid.dim();
    let period = grid.period();
    let combos = nodes.pow(d as u32);
    let mut idx = vec![0usize; d];
    let mut z = vec![0.0; d];
    let values = (0..grid.len())
        .map(|flat| {
            grid.unravel(flat, &mut idx);
            let mut acc = Complex64::default();
            for c in 0..combos {
                let mut r = c;
                let mut weight = 1.0;
                for j in 0..d {
                    let q = r % nodes;
                    r /= nodes;
                    z[j] = h * (idx[j] as f64 + 0.5 + 0.5 * x[q]);
                    weight *= 0.5 * w[q];
                }
                acc += f.eval(&z, period) * weight;
            }
            acc
        })
        .collect();
    ComplexField::new(*grid, values)
}

/// Affine extension of lattice data sampled on a finer grid of the same torus:
/// `g(y) + sum_j (g(y + h e_j) - g(y)) (z_j - y_j) / h` on the cell of `y`.
pub fn interpolate_eval(g: &ComplexField, fine: &LatticeGrid) -> Result<ComplexField> {
    let coarse = g.grid();
    if coarse.dim() != fine.dim() || (coarse.period() - fine.period()).abs() > 1e-12 * coarse.period() {
        return Err(Error::GridMismatch("interpolation needs grids on the same torus".into()));
    }
    if fine.points() % coarse.points() != 0 {
        return Err(Error::InvalidArgument(format!(
            "refinement ratio {}/{} is not an integer",
            fine.points(),
            coarse.points()
        )));
    }
    let r = fine.points() / coarse.points();
    let mc = coarse.points();
    let d = fine.dim();
    let vals = g.values();
    let mut fi = vec![0usize; d];
    let mut ci = vec![0usize; d];
    let out = (0..fine.len())
        .map(|flat| {
            fine.unravel(flat, &mut fi);
            for j in 0..d {
                ci[j] = fi[j] / r;
            }
            let base = vals[coarse.ravel(&ci)];
            let mut v = base;
            for j in 0..d {
                let frac = (fi[j] % r) as f64 / r as f64;
                if frac == 0.0 {
                    continue;
                }
                let keep = ci[j];
                ci[j] = (keep + 1) % mc;
                let next = vals[coarse.ravel(&ci)];
                ci[j] = keep;
                v += (next - base) * frac;
            }
            v
        })
        .collect();
    ComplexField::new(*fine, out)
}

/// `||a - b||_2` on a shared grid.
pub fn l2_distance_fine(a: &ComplexField, b: &ComplexField) -> Result<f64> {
    lp_norm(&a.try_sub(b)?, 2.0)
}

/// Trigonometric interpolation onto a finer grid of the same torus by
/// zero-padding the spectrum.
pub fn trig_interpolate(f: &ComplexField, target: &LatticeGrid) -> Result<ComplexField> {
    let g = f.grid();
    if g.dim() != target.dim() || (g.period() - target.period()).abs() > 1e-12 * g.period() {
        return Err(Error::GridMismatch("trig interpolation needs grids on the same torus".into()));
    }
    if target.points() < g.points() {
        return Err(Error::InvalidArgument("trig interpolation only refines".into()));
    }
    let spec = dft(f);
    let mut out = SpectrumField::zeros(*target);
    let d = g.dim();
    let mut idx = vec![0usize; d];
    let mut tidx = vec![0usize; d];
    for (flat, c) in spec.coeffs().iter().enumerate() {
        g.unravel(flat, &mut idx);
        for j in 0..d {
            tidx[j] = target.freq_slot(g.freq_index(idx[j]));
        }
        out.coeffs_mut()[target.ravel(&tidx)] = *c;
    }
    Ok(idft(&out))
}

/// Continuum reference solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSpec {
    /// Points per axis of the spectral reference solve.
    pub solve_points: usize,
    /// Points per axis of the grid the distances are measured on.
    pub compare_points: usize,
    pub step: f64,
    /// Run the self-convergence check (half step, twice the points).
    pub self_check: bool,
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        Self {
            solve_points: 256,
            compare_points: 1024,
            step: 2.5e-4,
            self_check: true,
        }
    }
}

/// One lattice-to-continuum experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitExperiment {
    pub initial: ContinuumFunction,
    pub params: NonlinearityParams,
    pub final_time: f64,
    pub period: f64,
    /// Points per axis of each lattice level, `h = period / points`.
    pub levels: Vec<usize>,
    /// Time step of the lattice solves.
    pub lattice_step: f64,
    pub reference: ReferenceSpec,
}

/// Errors per mesh and the fitted convergence order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub h: Vec<f64>,
    pub errors: Vec<f64>,
    /// `log2(e(2h) / e(h))` per level after the first.
    pub order_increments: Vec<f64>,
    pub fitted_order: f64,
    pub residual: f64,
    /// `A` in `error <= A h^{2/3}`, anchored at the coarsest level.
    pub prefactor: f64,
    pub final_time: f64,
    pub lambda: f64,
    pub p: f64,
    /// Distance between the reference and its refined rerun, if checked.
    pub reference_self_error: Option<f64>,
}

impl ConvergenceReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.errors.windows(2).all(|w| w[1] < w[0])
    }

    /// Fit residual above 0.2 flags the sweep as pre-asymptotic.
    pub fn non_asymptotic(&self) -> bool {
        self.residual > 0.2
    }

    /// `true` when every level sits below `prefactor h^{2/3}` (up to roundoff).
    pub fn within_two_thirds_bound(&self) -> bool {
        self.h
            .iter()
            .zip(&self.errors)
            .all(|(h, e)| *e <= self.prefactor * h.powf(2.0 / 3.0) * (1.0 + 1e-12))
    }

    /// CSV with header `h,error,order_increment`; empty increment on the first row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "h,error,order_increment")?;
        for (i, (h, e)) in self.h.iter().zip(&self.errors).enumerate() {
            if i == 0 {
                writeln!(w, "{h},{e},")?;
            } else {
                writeln!(w, "{h},{e},{}", self.order_increments[i - 1])?;
            }
        }
        Ok(())
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "fitted_order": self.fitted_order,
            "prefactor": self.prefactor,
            "residual": self.residual,
            "T": self.final_time,
            "lambda": self.lambda,
            "p": self.p,
            "non_asymptotic": self.non_asymptotic(),
            "strictly_decreasing": self.strictly_decreasing(),
            "reference_self_error": self.reference_self_error,
        })
    }
}

fn reference_solution(exp: &LimitExperiment, points: usize, step: f64, compare: &LatticeGrid) -> Result<ComplexField> {
    let grid = LatticeGrid::with_period(compare.dim(), points, exp.period)?;
    let u0 = exp.initial.sample(&grid)?;
    let u = solve_final(&u0, exp.final_time, step, &exp.params, FlowKind::Continuum)?;
    trig_interpolate(&u, compare)
}

/// Solves the lattice problem at every level, extends each solution with
/// [`interpolate_eval`] and measures its distance to the continuum reference.
pub fn run_limit_experiment(exp: &LimitExperiment) -> Result<ConvergenceReport> {
    exp.params.validate()?;
    if exp.levels.len() < 3 {
        return Err(Error::InvalidArgument("a convergence fit needs at least 3 levels".into()));
    }
    if exp.levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("levels must refine strictly".into()));
    }
    let finest = *exp.levels.last().unwrap();
    let r = exp.reference;
    if r.compare_points < 4 * finest || r.compare_points % finest != 0 {
        return Err(Error::InvalidArgument(format!(
            "comparison grid ({}) must be a multiple of, and at least 4x, the finest level ({finest})",
            r.compare_points
        )));
    }
    let dim = exp.initial.dim();
    let compare = LatticeGrid::with_period(dim, r.compare_points, exp.period)?;
    let reference = reference_solution(exp, r.solve_points, r.step, &compare)?;

    let errors = exp
        .levels
        .par_iter()
        .map(|&m| {
            let grid = LatticeGrid::with_period(dim, m, exp.period)?;
            let u0 = discretize(&exp.initial, &grid)?;
            let u = solve_final(&u0, exp.final_time, exp.lattice_step, &exp.params, FlowKind::Discrete)?;
            l2_distance_fine(&interpolate_eval(&u, &compare)?, &reference)
        })
        .collect::<Result<Vec<f64>>>()?;

    let reference_self_error = if r.self_check {
        let refined = reference_solution(exp, 2 * r.solve_points, 0.5 * r.step, &compare)?;
        let self_error = l2_distance_fine(&refined, &reference)?;
        let threshold = 0.1 * errors.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(self_error < threshold) {
            return Err(Error::ReferenceUnconverged { self_error, threshold });
        }
        Some(self_error)
    } else {
        None
    };

    let h: Vec<f64> = exp.levels.iter().map(|&m| exp.period / m as f64).collect();
    let fit = fit_loglog_slope(&h.iter().cloned().zip(errors.iter().cloned()).collect::<Vec<_>>())?;
    let order_increments = errors
        .windows(2)
        .zip(h.windows(2))
        .map(|(e, hh)| (e[0] / e[1]).ln() / (hh[0] / hh[1]).ln())
        .collect();
    Ok(ConvergenceReport {
        prefactor: errors[0] / h[0].powf(2.0 / 3.0),
        h,
        errors,
        order_increments,
        fitted_order: fit.slope,
        residual: fit.residual,
        final_time: exp.final_time,
        lambda: exp.params.lambda,
        p: exp.params.p,
        reference_self_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn constant_and_linear_cell_averages() {
        let g = LatticeGrid::square(8, 0.5).unwrap();
        let f = discretize(&ContinuumFunction::constant(2, c(2.5)), &g).unwrap();
        assert!(f.values().iter().all(|v| *v == c(2.5)));
        let lin = ContinuumFunction::Affine {
            offset: c(0.0),
            slope: vec![c(1.0), c(0.0)],
        };
        let f = discretize(&lin, &g).unwrap();
        for n1 in 0..8 {
            let v = f.values()[n1 * 8 + 3];
            assert!((v - c(0.5 * n1 as f64 + 0.25)).norm() < 1e-15);
        }
    }

    #[test]
    fn gaussian_closed_form_matches_gauss_legendre() {
        let g = LatticeGrid::with_period(2, 128, 24.0).unwrap();
        let f = ContinuumFunction::gaussian(vec![11.3, 13.1], 2.0, Complex64::new(1.0, 0.5));
        let a = discretize(&f, &g).unwrap();
        let b = discretize_by_quadrature(&f, &g, 4).unwrap();
        let d = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn trig_cell_averages_match_gauss_legendre() {
        let mut rng = crate::rng::SplitMix64::new(3);
        let g = LatticeGrid::with_period(2, 32, 8.0).unwrap();
        let f = ContinuumFunction::random_band_limited(2, 8.0, 3, &mut rng);
        let a = discretize(&f, &g).unwrap();
        let b = discretize_by_quadrature(&f, &g, 6).unwrap();
        let d = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn narrow_torus_is_rejected() {
        let g = LatticeGrid::with_period(2, 16, 10.0).unwrap();
        let f = ContinuumFunction::gaussian(vec![5.0, 5.0], 1.0, c(1.0));
        assert!(discretize(&f, &g).is_err());
        let trig = ContinuumFunction::TrigPolynomial { period: 3.0, terms: vec![(vec![1, 0], c(1.0))] };
        assert!(matches!(discretize(&trig, &g), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn interpolation_examples() {
        let coarse = LatticeGrid::with_period(2, 8, 4.0).unwrap();
        let fine = LatticeGrid::with_period(2, 32, 4.0).unwrap();
        let mut rng = crate::rng::SplitMix64::new(5);
        let g = ComplexField::new(coarse, (0..64).map(|_| c(rng.normal())).collect()).unwrap();
        let p = interpolate_eval(&g, &fine).unwrap();
        for n1 in 0..8 {
            for n2 in 0..8 {
                assert_eq!(p.values()[(4 * n1) * 32 + 4 * n2], g.values()[n1 * 8 + n2]);
            }
        }
        // midpoint along the first axis
        let (n1, n2) = (2, 5);
        let expect = g.values()[n1 * 8 + n2] + (g.values()[(n1 + 1) * 8 + n2] - g.values()[n1 * 8 + n2]) * 0.5;
        assert!((p.values()[(4 * n1 + 2) * 32 + 4 * n2] - expect).norm() < 1e-15);
        let bad = LatticeGrid::with_period(2, 12, 4.0);
        if let Ok(b) = bad {
            assert!(interpolate_eval(&g, &b).is_err());
        }
    }

    #[test]
    fn affine_data_is_reproduced() {
        // affine data restricted to one period: compare away from the wrap
        let coarse = LatticeGrid::with_period(2, 8, 8.0).unwrap();
        let fine = LatticeGrid::with_period(2, 64, 8.0).unwrap();
        let (a, b) = (c(0.3), [c(1.5), Complex64::new(-0.5, 2.0)]);
        let g = ComplexField::from_fn(coarse, |x| a + b[0] * x[0] + b[1] * x[1]).unwrap();
        let p = interpolate_eval(&g, &fine).unwrap();
        for n1 in 0..56 {
            for n2 in 0..56 {
                let z = [fine.coordinate(n1), fine.coordinate(n2)];
                let v = p.values()[n1 * 64 + n2];
                assert!((v - (a + b[0] * z[0] + b[1] * z[1])).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn distance_examples() {
        let g = LatticeGrid::with_period(2, 16, 3.0).unwrap();
        let a = ComplexField::constant(g, c(1.0));
        assert_eq!(l2_distance_fine(&a, &a).unwrap(), 0.0);
        let b = ComplexField::constant(g, Complex64::new(1.0, 2.0));
        assert!((l2_distance_fine(&a, &b).unwrap() - 2.0 * 3.0).abs() < 1e-13);
        let other = LatticeGrid::with_period(2, 32, 3.0).unwrap();
        assert!(l2_distance_fine(&a, &ComplexField::zeros(other)).is_err());
    }

    #[test]
    fn interpolation_is_bounded_in_l2() {
        let coarse = LatticeGrid::with_period(2, 16, 8.0).unwrap();
        let fine = LatticeGrid::with_period(2, 128, 8.0).unwrap();
        let mut rng = crate::rng::SplitMix64::new(11);
        for _ in 0..5 {
            let g = ComplexField::new(coarse, (0..256).map(|_| Complex64::new(rng.normal(), rng.normal())).collect()).unwrap();
            let ratio = lp_norm(&interpolate_eval(&g, &fine).unwrap(), 2.0).unwrap() / lp_norm(&g, 2.0).unwrap();
            assert!(ratio <= 2.0, "{ratio}");
        }
    }

    #[test]
    fn trig_interpolation_is_exact_on_band_limited_data() {
        let mut rng = crate::rng::SplitMix64::new(8);
        let f = ContinuumFunction::random_band_limited(2, 6.0, 3, &mut rng);
        let coarse = LatticeGrid::with_period(2, 16, 6.0).unwrap();
        let fine = LatticeGrid::with_period(2, 64, 6.0).unwrap();
        let up = trig_interpolate(&f.sample(&coarse).unwrap(), &fine).unwrap();
        let direct = f.sample(&fine).unwrap();
        assert!(l2_distance_fine(&up, &direct).unwrap() < 1e-12 * lp_norm(&direct, 2.0).unwrap());
    }

    #[test]
    fn consistency_error_is_first_order() {
        let period = 16.0;
        let f = ContinuumFunction::gaussian(vec![8.0, 8.0], 1.0, c(1.0));
        let fine = LatticeGrid::with_period(2, 1024, period).unwrap();
        let u0 = f.sample(&fine).unwrap();
        let pairs: Vec<(f64, f64)> = [16usize, 32, 64, 128, 256]
            .iter()
            .map(|&m| {
                let g = LatticeGrid::with_period(2, m, period).unwrap();
                let e = l2_distance_fine(&interpolate_eval(&discretize(&f, &g).unwrap(), &fine).unwrap(), &u0).unwrap();
                (g.mesh(), e)
            })
            .collect();
        let fit = fit_loglog_slope(&pairs).unwrap();
        assert!(fit.slope >= 0.95, "{pairs:?}");
    }

    #[test]
    fn report_csv_and_gates() {
        let rep = ConvergenceReport {
            h: vec![1.0, 0.5, 0.25],
            errors: vec![0.4, 0.2, 0.1],
            order_increments: vec![1.0, 1.0],
            fitted_order: 1.0,
            residual: 0.0,
            prefactor: 0.4,
            final_time: 1.0,
            lambda: 1.0,
            p: 3.0,
            reference_self_error: None,
        };
        assert!(rep.strictly_decreasing() && rep.within_two_thirds_bound() && !rep.non_asymptotic());
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "h,error,order_increment\n1,0.4,\n0.5,0.2,1\n0.25,0.1,1\n");
        assert_eq!(rep.summary_json()["fitted_order"], 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn fine_distance_is_stable_under_refinement(w in 0.8f64..1.3, cx in 6.0f64..10.0, shift in 0.1f64..0.5) {
            let period = 16.0;
            let a = ContinuumFunction::gaussian(vec![cx, 8.0], w, c(1.0));
            let b = ContinuumFunction::gaussian(vec![cx + shift, 8.0], w, c(1.0));
            let d = |m: usize| {
                let g = LatticeGrid::with_period(2, m, period).unwrap();
                l2_distance_fine(&a.sample(&g).unwrap(), &b.sample(&g).unwrap()).unwrap()
            };
            let (d1, d2) = (d(128), d(256));
            prop_assert!((d1 - d2).abs() < 0.01 * d2);
        }
    }
}
