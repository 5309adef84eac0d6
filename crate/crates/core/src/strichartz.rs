//! Admissible exponent pairs, space-time norms of the linear lattice flow and
//! the sweep over mesh sizes that tests their independence of `h`.

use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuum::{discretize, ContinuumFunction};
use crate::error::{Error, Result};
use crate::lattice::fft::fft_nd;
use crate::lattice::{lp_norm, sobolev_norm, ComplexField, LatticeGrid, SobolevKind};
use crate::oscillatory::fit_loglog_slope;
use crate::solvers::{bilaplacian_symbol, FlowKind, Trajectory};

/// Time and space exponents `(q, r)`; `f64::INFINITY` stands for `inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissiblePair {
    pub q: f64,
    pub r: f64,
}

impl AdmissiblePair {
    pub fn new(q: f64, r: f64) -> Result<Self> {
        if !is_admissible(q, r) {
            return Err(Error::InvalidArgument(format!(
                "({}, {}) is not admissible: need q, r >= 2 and 1/q = (1/2)(1/2 - 1/r)",
                fmt_exponent(q),
                fmt_exponent(r)
            )));
        }
        Ok(Self { q, r })
    }
}

impl fmt::Display for AdmissiblePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", fmt_exponent(self.q), fmt_exponent(self.r))
    }
}

pub fn fmt_exponent(e: f64) -> String {
    if e.is_infinite() {
        "inf".to_string()
    } else {
        format!("{e}")
    }
}

/// `q, r >= 2` and `1/q = (1/2)(1/2 - 1/r)`, i.e. `q (r - 2) = 4 r`.
///
/// The cleared-denominator form is evaluated in floating point, which is
/// exact for integer and dyadic exponents.
pub fn is_admissible(q: f64, r: f64) -> bool {
    if q.is_nan() || r.is_nan() || q < 2.0 || r < 2.0 {
        return false;
    }
    match (q.is_infinite(), r.is_infinite()) {
        (true, true) => false,
        (true, false) => r == 2.0,
        (false, true) => q == 4.0,
        (false, false) => q * (r - 2.0) == 4.0 * r,
    }
}

/// `(int_0^T g(t)^q dt)^{1/q}` by the composite trapezoid rule on uniform
/// samples, or the max for `q = inf`.
pub fn time_norm(times: &[f64], values: &[f64], q: f64) -> Result<f64> {
    if times.len() != values.len() {
        return Err(Error::SizeMismatch {
            expected: times.len(),
            actual: values.len(),
        });
    }
    if values.is_empty() {
        return Err(Error::InvalidArgument("time norm of an empty series".into()));
    }
    if q.is_infinite() {
        return Ok(values.iter().cloned().fold(0.0, f64::max));
    }
    if values.len() < 2 {
        return Err(Error::InvalidArgument("a finite time exponent needs at least two samples".into()));
    }
    let dt = times[1] - times[0];
    let uniform = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs().max(1e-300));
    if !(dt > 0.0) || !uniform {
        return Err(Error::InvalidArgument("time samples must be uniform and increasing".into()));
    }
    let n = values.len();
    let s: f64 = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            w * v.powf(q)
        })
        .sum();
    Ok((s * dt).powf(1.0 / q))
}

/// `||u||_{L^q_t L^r_x}` over the samples of a trajectory with kept fields.
pub fn mixed_norm(traj: &Trajectory, pair: &AdmissiblePair) -> Result<f64> {
    if traj.snapshots.is_empty() {
        return Err(Error::InvalidArgument("trajectory has no stored fields".into()));
    }
    let spatial = traj
        .snapshots
        .iter()
        .map(|f| lp_norm(f, pair.r))
        .collect::<Result<Vec<f64>>>()?;
    time_norm(&traj.times()[..spatial.len()], &spatial, pair.q)
}

/// What a sweep entry measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SweepPair {
    /// `||U(t) f||_{L^q L^r} / ||f||_2` for an admissible pair.
    Admissible { q: f64, r: f64 },
    /// `sup_t ||U(t) f||_inf / ||f||_{H^2}`.
    SobolevEndpoint,
}

impl SweepPair {
    fn exponents(&self) -> (f64, f64) {
        match *self {
            Self::Admissible { q, r } => (q, r),
            Self::SobolevEndpoint => (f64::INFINITY, f64::INFINITY),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Self::Admissible { q, r } = *self {
            AdmissiblePair::new(q, r)?;
        }
        Ok(())
    }
}

/// Ratios for one pair across the mesh sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrichartzReport {
    pub pair: SweepPair,
    pub h: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Slope of `log ratio` against `log(1/h)`.
    pub trend_slope: f64,
    /// `max ratio / min ratio`.
    pub spread: f64,
    /// Ratio on `[0, 2T]` over ratio on `[0, T]` at the coarsest mesh.
    pub truncation_growth: f64,
}

/// Sweep settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub period: f64,
    /// Points per axis of each level, `h = period / points`.
    pub levels: Vec<usize>,
    pub final_time: f64,
    /// Uniform time samples on `[0, T]`, endpoints included.
    pub samples: usize,
}

/// Spatial norms `||U(t_n) f||_r` for every requested `r` at uniform times,
/// with one forward transform of the data.
pub fn linear_norm_series(f: &ComplexField, final_time: f64, samples: usize, exponents: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least two time samples".into()));
    }
    let g = *f.grid();
    let symbol = bilaplacian_symbol(&g, FlowKind::Discrete);
    let mut spec = f.values().to_vec();
    fft_nd(&mut spec, g.dim(), g.points(), false);
    let w = 1.0 / g.len() as f64;
    let times: Vec<f64> = (0..samples).map(|n| final_time * n as f64 / (samples - 1) as f64).collect();
    let mut out = vec![Vec::with_capacity(samples); exponents.len()];
    let mut buf = vec![Complex64::default(); g.len()];
    for &t in &times {
        for ((b, c), &s) in buf.iter_mut().zip(&spec).zip(&symbol) {
            *b = c * Complex64::from_polar(w, t * s);
        }
        fft_nd(&mut buf, g.dim(), g.points(), true);
        let field = ComplexField::new(g, buf.clone())?;
        for (series, &r) in out.iter_mut().zip(exponents) {
            series.push(lp_norm(&field, r)?);
        }
    }
    Ok((times, out))
}

/// Per pair and mesh, the ratio of the space-time norm of the linear flow to
/// the norm of the data (`L^2`, or `H^2` for the Sobolev endpoint).
pub fn strichartz_sweep(profile: &ContinuumFunction, pairs: &[SweepPair], spec: &SweepSpec) -> Result<Vec<StrichartzReport>> {
    for p in pairs {
        p.validate()?;
    }
    if spec.levels.len() < 3 {
        return Err(Error::InvalidArgument("a trend fit needs at least 3 mesh levels".into()));
    }
    let mut exponents: Vec<f64> = Vec::new();
    for p in pairs {
        let r = p.exponents().1;
        if !exponents.contains(&r) {
            exponents.push(r);
        }
    }
    let per_level = spec
        .levels
        .par_iter()
        .map(|&m| level_ratios(profile, pairs, &exponents, spec.period, m, spec.final_time, spec.samples))
        .collect::<Result<Vec<(f64, Vec<f64>)>>>()?;
    // same time step over twice the window
    let (_, doubled) = level_ratios(
        profile,
        pairs,
        &exponents,
        spec.period,
        spec.levels[0],
        2.0 * spec.final_time,
        2 * spec.samples - 1,
    )?;

    pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let h: Vec<f64> = per_level.iter().map(|l| l.0).collect();
            let ratios: Vec<f64> = per_level.iter().map(|l| l.1[i]).collect();
            let fit = fit_loglog_slope(&h.iter().zip(&ratios).map(|(h, r)| (1.0 / h, *r)).collect::<Vec<_>>())?;
            let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
            let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
            let truncation_growth = doubled[i] / ratios[0];
            Ok(StrichartzReport {
                pair: *p,
                h,
                ratios,
                trend_slope: fit.slope,
                spread: max / min,
                truncation_growth,
            })
        })
        .collect()
}

fn level_ratios(
    profile: &ContinuumFunction,
    pairs: &[SweepPair],
    exponents: &[f64],
    period: f64,
    m: usize,
    final_time: f64,
    samples: usize,
) -> Result<(f64, Vec<f64>)> {
    let grid = LatticeGrid::with_period(2, m, period)?;
    let f = discretize(profile, &grid)?;
    let l2 = lp_norm(&f, 2.0)?;
    let h2 = sobolev_norm(&f, 2.0, SobolevKind::H)?;
    if l2 == 0.0 {
        return Err(Error::InvalidArgument("profile discretizes to zero".into()));
    }
    let (times, series) = linear_norm_series(&f, final_time, samples, exponents)?;
    let ratios = pairs
        .iter()
        .map(|p| {
            let (q, r) = p.exponents();
            let idx = exponents.iter().position(|&e| e == r).expect("collected above");
            let n = time_norm(&times, &series[idx], q)?;
            Ok(match p {
                SweepPair::Admissible { .. } => n / l2,
                SweepPair::SobolevEndpoint => n / h2,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((grid.mesh(), ratios))
}

/// CSV with header `pair_q,pair_r,h,ratio`; the Sobolev endpoint is written
/// as `inf,inf_h2`.
pub fn write_strichartz_csv<W: Write>(mut w: W, reports: &[StrichartzReport]) -> Result<()> {
    writeln!(w, "pair_q,pair_r,h,ratio")?;
    for rep in reports {
        let (q, r) = match rep.pair {
            SweepPair::Admissible { q, r } => (fmt_exponent(q), fmt_exponent(r)),
            SweepPair::SobolevEndpoint => ("inf".to_string(), "inf_h2".to_string()),
        };
        for (h, ratio) in rep.h.iter().zip(&rep.ratios) {
            writeln!(w, "{q},{r},{h},{ratio}")?;
        }
    }
    Ok(())
}
