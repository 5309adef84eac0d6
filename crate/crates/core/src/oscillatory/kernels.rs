use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use super::quadrature::{
    phase_speed, points_for_extent, refine, window_tail, EvenIntegrand, EvenKernel, QuadratureSpec, Window,
};
use crate::error::{Error, Result};
use crate::littlewood_paley::{rho, DyadicScale};

/// Sample abscissae `j P / M` for `j = 0..=M/2`.
fn half_axis(m: usize, period: f64) -> Vec<f64> {
    (0..=m / 2).map(|j| period * j as f64 / m as f64).collect()
}

/// Window `eta(theta / scale)` as a difference of two tensor bumps.
fn band_window(theta: &[f64], scale: f64) -> Window {
    let outer = theta.iter().map(|&t| rho(t / (2.0 * PI * scale))).collect();
    let inner = theta.iter().map(|&t| rho(t / (PI * scale))).collect();
    Window {
        terms: vec![(1.0, outer), (-1.0, inner)],
    }
}

fn band(t1: f64, t2: f64, scale: f64) -> f64 {
    let o = rho(t1 / (2.0 * PI * scale)) * rho(t2 / (2.0 * PI * scale));
    let i = rho(t1 / (PI * scale)) * rho(t2 / (PI * scale));
    o - i
}

const COARSE: usize = 256;

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be finite, got {t}")));
    }
    Ok(())
}

/// Largest output index any kernel value of the unit-lattice propagator can
/// reach at time `t` (the max group speed times `|t|`).
fn unit_extent(t: f64) -> f64 {
    phase_speed(
        COARSE,
        |th| (4.0 * (0.5 * th).sin().powi(2), 2.0 * th.sin()),
        t,
        |_, _| 1.0,
        PI,
    )
}

/// Fundamental solution `G(y, t)` of the linear flow on the unit lattice.
pub fn eval_g_unit(t: f64, spec: &QuadratureSpec) -> Result<EvenKernel> {
    check_time(t)?;
    let start = points_for_extent(unit_extent(t));
    refine(start, spec, |m| {
        let theta = half_axis(m, 2.0 * PI);
        EvenIntegrand {
            points: m,
            axis_phase: theta.iter().map(|t| 4.0 * (0.5 * t).sin().powi(2)).collect(),
            coupling: t,
            window: Window {
                terms: vec![(1.0, vec![1.0; theta.len()])],
            },
            weight: 1.0 / (m * m) as f64,
            output_step: 1.0,
        }
    })
}

fn k_speed(n: DyadicScale) -> f64 {
    let nv = n.value();
    phase_speed(
        COARSE,
        |th| ((0.5 * th).sin().powi(2), 0.5 * th.sin()),
        16.0,
        |a, b| band(a, b, nv),
        PI,
    )
}

/// Output-index extent of the frequency-localized kernel at rescaled time `s`:
/// the propagation front plus the window tail down to `tol`.
pub fn k_extent(n: DyadicScale, s: f64, tol: f64) -> f64 {
    k_speed(n) * s.abs() + window_tail(tol) / n.value()
}

/// Frequency-localized kernel on the unit lattice at rescaled time `s = t/h^4`.
///
/// The kernel on `hZ^2` follows from `K_{N,h}(h y, t) = h^{-2} K_{N,1}(y, t/h^4)`.
pub fn eval_k_unit(n: DyadicScale, s: f64, spec: &QuadratureSpec) -> Result<EvenKernel> {
    check_time(s)?;
    let nv = n.value();
    let start = points_for_extent(k_extent(n, s, spec.tol));
    refine(start, spec, |m| {
        let theta = half_axis(m, 2.0 * PI);
        EvenIntegrand {
            points: m,
            axis_phase: theta.iter().map(|t| (0.5 * t).sin().powi(2)).collect(),
            coupling: 16.0 * s,
            window: band_window(&theta, nv),
            weight: (2.0 * PI / m as f64).powi(2),
            output_step: 1.0,
        }
    })
}

/// Largest rescaled time whose first resolution leaves room for one doubling
/// within `spec.max_points`.
pub fn max_k_time_within_budget(n: DyadicScale, spec: &QuadratureSpec) -> f64 {
    let coarse_half = (spec.max_points / 4) as f64;
    let room = coarse_half - 16.0 - window_tail(spec.tol) / n.value();
    room.max(0.0) / k_speed(n)
}

/// Output step of the continuum-frequency oscillatory integral: samples of
/// `xi` lie on `[-4 pi, 4 pi)`, so `x` is resolved on the grid `Z / 4`.
pub const I_OUTPUT_STEP: f64 = 0.25;
const I_PERIOD: f64 = 8.0 * PI;

fn i_speed(n: DyadicScale, t: f64) -> f64 {
    let nv = n.value();
    phase_speed(
        COARSE,
        |xi| ((0.5 * nv * xi).sin().powi(2), 0.5 * nv * (nv * xi).sin()),
        t,
        |a, b| band(a, b, 1.0),
        4.0 * PI,
    )
}

fn i_integrand(n: DyadicScale, t: f64, m: usize) -> EvenIntegrand {
    let nv = n.value();
    let xi = half_axis(m, I_PERIOD);
    EvenIntegrand {
        points: m,
        axis_phase: xi.iter().map(|x| (0.5 * nv * x).sin().powi(2)).collect(),
        coupling: t,
        window: band_window(&xi, 1.0),
        weight: (I_PERIOD / m as f64).powi(2),
        output_step: I_OUTPUT_STEP,
    }
}

/// Continuum-frequency oscillatory integral on the grid `x in (Z/4)^2`.
pub fn eval_i_grid(n: DyadicScale, t: f64, spec: &QuadratureSpec) -> Result<EvenKernel> {
    check_time(t)?;
    let start = points_for_extent((i_speed(n, t) + window_tail(spec.tol)) / I_OUTPUT_STEP);
    refine(start, spec, |m| i_integrand(n, t, m))
}

/// Continuum-frequency oscillatory integral at arbitrary points, by direct
/// trapezoid sums refined until two successive resolutions agree.
pub fn eval_i(n: DyadicScale, t: f64, points: &[[f64; 2]], spec: &QuadratureSpec) -> Result<Vec<Complex64>> {
    check_time(t)?;
    spec.validate()?;
    if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::InvalidArgument("evaluation points must be finite".into()));
    }
    let reach = points.iter().map(|p| p[0].abs().max(p[1].abs())).fold(0.0, f64::max);
    let extent = (i_speed(n, t) + window_tail(spec.tol)).max(reach) / I_OUTPUT_STEP;
    let mut m = points_for_extent(extent).max(spec.min_points);
    if m > spec.max_points {
        return Err(Error::QuadratureBudget {
            required: m,
            cap: spec.max_points,
        });
    }
    let mut prev = direct_sums(&i_integrand(n, t, m), points);
    let mut discrepancy = f64::NAN;
    loop {
        if 2 * m > spec.max_points {
            return Err(Error::QuadratureUnconverged {
                resolution: m,
                discrepancy,
                tol: spec.tol,
            });
        }
        m *= 2;
        let next = direct_sums(&i_integrand(n, t, m), points);
        let scale = next.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let diff = next.iter().zip(&prev).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        discrepancy = diff / scale;
        if discrepancy <= spec.tol {
            return Ok(next);
        }
        prev = next;
    }
}

/// `sum_j f(xi_j) e^{i x . xi_j}` over the full periodic sample grid, folded
/// onto the nonnegative quadrant by evenness of the integrand.
fn direct_sums(integ: &EvenIntegrand, points: &[[f64; 2]]) -> Vec<Complex64> {
    let m = integ.points;
    let half = m / 2;
    let dxi = I_PERIOD / m as f64;
    let mult = |j: usize| if j == 0 || j == half { 1.0 } else { 2.0 };
    let mut samples = Vec::new();
    for j1 in 0..=half {
        for j2 in 0..=half {
            let w: f64 = integ.window.terms.iter().map(|(s, u)| s * u[j1] * u[j2]).sum();
            if w != 0.0 {
                let a = integ.axis_phase[j1] + integ.axis_phase[j2];
                let f = Complex64::from_polar(w * mult(j1) * mult(j2), integ.coupling * a * a);
                samples.push((j1 as f64 * dxi, j2 as f64 * dxi, f));
            }
        }
    }
    points
        .iter()
        .map(|p| {
            let s: Complex64 = samples
                .iter()
                .map(|&(x1, x2, f)| f * ((p[0] * x1).cos() * (p[1] * x2).cos()))
                .sum();
            s * integ.weight
        })
        .collect()
}

/// One point of a decay sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRecord {
    pub scale: DyadicScale,
    /// Rescaled time for the lattice kernel, plain time for the continuum one.
    pub time: f64,
    pub sup_abs: f64,
    pub normalized: f64,
    /// Samples per axis of the accepted quadrature.
    pub points_used: usize,
}

/// `s^{1/2} sup_y |K_{N,1}(y, s)|` over every `(N, s)` pair, in input order.
pub fn decay_sweep(scales: &[DyadicScale], times: &[f64], spec: &QuadratureSpec) -> Result<Vec<DecayRecord>> {
    let mut out = Vec::with_capacity(scales.len() * times.len());
    for &n in scales {
        for &s in times {
            out.push(k_record(n, s, spec)?);
        }
    }
    Ok(out)
}

pub(crate) fn k_record(n: DyadicScale, s: f64, spec: &QuadratureSpec) -> Result<DecayRecord> {
    let k = eval_k_unit(n, s, spec)?;
    let sup = k.sup_abs();
    Ok(DecayRecord {
        scale: n,
        time: s,
        sup_abs: sup,
        normalized: s.abs().sqrt() * sup,
        points_used: k.points(),
    })
}

/// `N^4 t sup_x |I_N(x, t)|` at `t = r / N^4` for every scale and reduced time `r`.
pub fn dispersive_sweep(scales: &[DyadicScale], reduced: &[f64], spec: &QuadratureSpec) -> Result<Vec<DecayRecord>> {
    let mut out = Vec::with_capacity(scales.len() * reduced.len());
    for &n in scales {
        for &r in reduced {
            let t = r / n.value().powi(4);
            let k = eval_i_grid(n, t, spec)?;
            let sup = k.sup_abs();
            out.push(DecayRecord {
                scale: n,
                time: t,
                sup_abs: sup,
                normalized: r.abs() * sup,
                points_used: k.points(),
            });
        }
    }
    Ok(out)
}

/// CSV with header `N,k,s,sup_abs,normalized,Mq_used`.
pub fn write_decay_csv<W: Write>(mut w: W, records: &[DecayRecord]) -> Result<()> {
    writeln!(w, "N,k,s,sup_abs,normalized,Mq_used")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.scale.value(),
            r.scale.exponent(),
            r.time,
            r.sup_abs,
            r.normalized,
            r.points_used
        )?;
    }
    Ok(())
}
