//! One runner per subcommand. Each writes its artifacts into `out` and
//! returns their file names.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde_json::{json, Value};

use super::config::{CommandConfig, DecayConfig, EnsembleConfig, ExperimentConfig, LimitConfig, SolveConfig, StrichartzConfig};
use crate::continuum::{discretize, run_limit_experiment, ContinuumFunction, LimitExperiment, ReferenceSpec};
use crate::error::Result;
use crate::lattice::{gns_ratio, gns_theta, LatticeGrid};
use crate::littlewood_paley::{bracket, random_mean_zero_field, square_function_ratios, DyadicScale};
use crate::oscillatory::{
    decay_sweep, dispersive_sweep, fit_loglog_slope, log_spaced, max_k_time_within_budget, write_decay_csv, DecayRecord,
    QuadratureSpec,
};
use crate::rng::SplitMix64;
use crate::solvers::{solve, FlowKind, NonlinearityParams, SolveOptions};
use crate::strichartz::{fmt_exponent, strichartz_sweep, write_strichartz_csv, StrichartzReport, SweepPair, SweepSpec};

pub fn execute(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<String>> {
    std::fs::create_dir_all(out)?;
    let seed = cfg.common.seed;
    match &cfg.params {
        CommandConfig::Decay(c) => decay(c, out),
        CommandConfig::Strichartz(c) => strichartz(c, seed, out),
        CommandConfig::Limit(c) => limit(c, out),
        CommandConfig::Lp(c) => lp(c, seed, out),
        CommandConfig::Gns(c) => gns(c, seed, out),
        CommandConfig::Solve(c) => solve_cmd(c, out),
    }
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(out.join(name))?))
}

pub(crate) fn write_json(out: &Path, name: &str, v: &Value) -> Result<()> {
    let mut w = create(out, name)?;
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Times used for one scale when none are given explicitly.
pub fn default_decay_times(cfg: &DecayConfig, n: DyadicScale, spec: &QuadratureSpec) -> Result<Vec<f64>> {
    if !cfg.times.is_empty() {
        return Ok(cfg.times.clone());
    }
    if cfg.kernel == "i" {
        return Ok(log_spaced(10.0, 100.0, cfg.time_count));
    }
    let nv = n.value();
    let top = max_k_time_within_budget(n, spec).min(2000.0 / (16.0 * nv.powi(3)));
    if top < cfg.time_min {
        return Err(crate::Error::InvalidArgument(format!(
            "N={nv}: largest time within the quadrature budget is {top:.3}, below s_min={}",
            cfg.time_min
        )));
    }
    Ok(log_spaced(cfg.time_min, top, cfg.time_count))
}

fn decay(cfg: &DecayConfig, out: &Path) -> Result<Vec<String>> {
    let spec = QuadratureSpec {
        min_points: cfg.min_points,
        tol: cfg.tol,
        max_points: cfg.max_points,
    };
    spec.validate()?;
    let mut records: Vec<DecayRecord> = Vec::new();
    let mut summary = Vec::new();
    for &nv in &cfg.scales {
        let n = DyadicScale::from_value(nv)?;
        let times = default_decay_times(cfg, n, &spec)?;
        let recs = if cfg.kernel == "k" {
            decay_sweep(&[n], &times, &spec)?
        } else {
            dispersive_sweep(&[n], &times, &spec)?
        };
        summary.push(decay_summary(nv, &recs));
        records.extend(recs);
    }
    let mut w = create(out, "decay.csv")?;
    write_decay_csv(&mut w, &records)?;
    w.flush()?;
    write_json(out, "decay_summary.json", &json!({ "kernel": cfg.kernel, "scales": summary }))?;
    Ok(vec!["decay.csv".into(), "decay_summary.json".into()])
}

fn decay_summary(n: f64, recs: &[DecayRecord]) -> Value {
    let base = recs.first().map(|r| r.normalized).unwrap_or(f64::NAN);
    let max = recs.iter().map(|r| r.normalized).fold(f64::NAN, f64::max);
    let slope = fit_loglog_slope(&recs.iter().map(|r| (r.time, r.sup_abs)).collect::<Vec<_>>())
        .ok()
        .map(|f| f.slope);
    json!({
        "N": n,
        "base_normalized": base,
        "max_normalized": max,
        "max_over_base": max / base,
        "slope": slope,
    })
}

fn strichartz(cfg: &StrichartzConfig, seed: u64, out: &Path) -> Result<Vec<String>> {
    let spec = SweepSpec {
        period: cfg.period,
        levels: cfg.meshes.iter().map(|h| (cfg.period / h).round() as usize).collect(),
        final_time: cfg.final_time,
        samples: cfg.samples,
    };
    let mut profiles = Vec::new();
    if cfg.profile != "random" {
        let c = 0.5 * cfg.period;
        profiles.push(("gaussian", ContinuumFunction::gaussian(vec![c, c], cfg.width, Complex64::new(1.0, 0.0))));
    }
    if cfg.profile != "gaussian" {
        let mut rng = SplitMix64::new(seed);
        profiles.push(("random", ContinuumFunction::random_band_limited(2, cfg.period, cfg.band, &mut rng)));
    }
    let mut artifacts = Vec::new();
    let mut summary = serde_json::Map::new();
    for (name, profile) in &profiles {
        let reports = strichartz_sweep(profile, &cfg.pairs, &spec)?;
        let file = format!("strichartz_{name}.csv");
        let mut w = create(out, &file)?;
        write_strichartz_csv(&mut w, &reports)?;
        w.flush()?;
        artifacts.push(file);
        summary.insert(name.to_string(), Value::Array(reports.iter().map(strichartz_summary).collect()));
    }
    summary.insert("T".into(), json!(cfg.final_time));
    summary.insert("samples".into(), json!(cfg.samples));
    write_json(out, "strichartz_summary.json", &Value::Object(summary))?;
    artifacts.push("strichartz_summary.json".into());
    Ok(artifacts)
}

pub(crate) fn pair_label(p: &SweepPair) -> (String, String) {
    match *p {
        SweepPair::Admissible { q, r } => (fmt_exponent(q), fmt_exponent(r)),
        SweepPair::SobolevEndpoint => ("inf".into(), "inf_h2".into()),
    }
}

fn strichartz_summary(r: &StrichartzReport) -> Value {
    let (q, rr) = pair_label(&r.pair);
    json!({
        "pair_q": q,
        "pair_r": rr,
        "h": r.h,
        "ratios": r.ratios,
        "trend_slope": r.trend_slope,
        "spread": r.spread,
        "truncation_growth": r.truncation_growth,
    })
}

fn limit(cfg: &LimitConfig, out: &Path) -> Result<Vec<String>> {
    let c = 0.5 * cfg.period;
    let exp = LimitExperiment {
        initial: ContinuumFunction::gaussian(vec![c, c], cfg.width, Complex64::new(cfg.amplitude, 0.0)),
        params: NonlinearityParams::new(cfg.lambda, cfg.p)?,
        final_time: cfg.final_time,
        period: cfg.period,
        levels: cfg.meshes.iter().map(|h| (cfg.period / h).round() as usize).collect(),
        lattice_step: cfg.step,
        reference: ReferenceSpec {
            solve_points: cfg.reference_points,
            compare_points: cfg.compare_points,
            step: cfg.reference_step,
            self_check: cfg.self_check,
        },
    };
    let report = run_limit_experiment(&exp)?;
    let mut w = create(out, "limit.csv")?;
    report.write_csv(&mut w)?;
    w.flush()?;
    let mut summary = report.summary_json();
    summary["within_two_thirds_bound"] = json!(report.within_two_thirds_bound());
    summary["h"] = json!(report.h);
    summary["errors"] = json!(report.errors);
    write_json(out, "limit_summary.json", &summary)?;
    Ok(vec!["limit.csv".into(), "limit_summary.json".into()])
}

fn write_indexed_csv(out: &Path, name: &str, values: &[f64]) -> Result<()> {
    let mut w = create(out, name)?;
    writeln!(w, "index,ratio")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(w, "{i},{v}")?;
    }
    w.flush()?;
    Ok(())
}

fn lp(cfg: &EnsembleConfig, seed: u64, out: &Path) -> Result<Vec<String>> {
    let grid = LatticeGrid::new(2, cfg.points, cfg.mesh)?;
    let ratios = square_function_ratios(grid, cfg.exponent, cfg.ensemble, seed)?;
    let b = bracket(&ratios)?;
    write_indexed_csv(out, "lp.csv", &ratios)?;
    write_json(
        out,
        "lp_summary.json",
        &json!({ "p": cfg.exponent, "lower": b.lower, "upper": b.upper, "spread": b.spread() }),
    )?;
    Ok(vec!["lp.csv".into(), "lp_summary.json".into()])
}

fn gns(cfg: &EnsembleConfig, seed: u64, out: &Path) -> Result<Vec<String>> {
    let grid = LatticeGrid::new(2, cfg.points, cfg.mesh)?;
    let theta = gns_theta(cfg.exponent, cfg.order)?;
    let base = SplitMix64::new(seed);
    let ratios = (0..cfg.ensemble)
        .map(|i| gns_ratio(&random_mean_zero_field(grid, &mut base.fork(i as u64)), cfg.exponent, cfg.order))
        .collect::<Result<Vec<f64>>>()?;
    let b = bracket(&ratios)?;
    write_indexed_csv(out, "gns.csv", &ratios)?;
    write_json(
        out,
        "gns_summary.json",
        &json!({ "q": cfg.exponent, "s": cfg.order, "theta": theta, "min": b.lower, "max": b.upper }),
    )?;
    Ok(vec!["gns.csv".into(), "gns_summary.json".into()])
}

fn solve_cmd(cfg: &SolveConfig, out: &Path) -> Result<Vec<String>> {
    let grid = LatticeGrid::new(2, cfg.points, cfg.mesh)?;
    let c = 0.5 * grid.period();
    let f = discretize(
        &ContinuumFunction::gaussian(vec![c, c], cfg.width, Complex64::new(cfg.amplitude, 0.0)),
        &grid,
    )?;
    let kind = if cfg.flow == "continuum" { FlowKind::Continuum } else { FlowKind::Discrete };
    let opts = SolveOptions {
        final_time: cfg.final_time,
        step: cfg.step,
        sample_every: cfg.sample_every,
        keep_fields: cfg.keep_fields,
    };
    let traj = solve(&f, &opts, &NonlinearityParams::new(cfg.lambda, cfg.p)?, kind)?;
    traj.export(out)?;
    let mut artifacts = vec!["trajectory.csv".to_string()];
    artifacts.extend((0..traj.snapshots.len()).map(|i| format!("snapshot_{i:05}.ldsp")));
    write_json(
        out,
        "solve_summary.json",
        &json!({
            "steps": traj.samples.last().map(|s| s.step),
            "mass_drift": traj.mass_drift(),
            "energy_drift": traj.energy_drift(),
            "final_linf": traj.samples.last().map(|s| s.linf_norm),
        }),
    )?;
    artifacts.push("solve_summary.json".into());
    Ok(artifacts)
}
