//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines show up in a plain
//! `cargo test`. Arguments select criteria by number; `--include-ignored`
//! also runs the ones that are out of reach at desk scale.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use latdisp::continuum::{
    discretize, interpolate_eval, l2_distance_fine, run_limit_experiment, ContinuumFunction, LimitExperiment,
    ReferenceSpec,
};
use latdisp::lattice::{
    apply_multiplier, dft, discrete_laplacian, idft, lp_norm, symbol_sigma, ComplexField, LatticeGrid,
};
use latdisp::littlewood_paley::{
    bracket, covering_scales, psi_symbol, random_mean_zero_field, reconstruct, square_function_ratios, DyadicScale,
};
use latdisp::oscillatory::{
    decay_sweep, dispersive_sweep, fit_loglog_slope, log_spaced, max_k_time_within_budget, write_decay_csv,
    QuadratureSpec,
};
use latdisp::rng::SplitMix64;
use latdisp::solvers::{solve, FlowKind, LinearPropagator, NonlinearityParams, SolveOptions};
use latdisp::strichartz::{strichartz_sweep, StrichartzReport, SweepPair, SweepSpec};
use num_complex::Complex64;

type Outcome = (bool, String);

struct Criterion {
    id: u32,
    name: &'static str,
    ignored: Option<&'static str>,
    run: fn() -> Outcome,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn max_rel_diff(a: &ComplexField, b: &ComplexField) -> f64 {
    let scale = b.values().iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
        / scale
}

fn noise(m: usize, h: f64, seed: u64) -> ComplexField {
    let g = LatticeGrid::square(m, h).unwrap();
    let mut rng = SplitMix64::new(seed);
    let v = (0..g.len()).map(|_| Complex64::new(rng.normal(), rng.normal())).collect();
    ComplexField::new(g, v).unwrap()
}

fn exactness() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    for (m, h) in [(8usize, 0.5), (64, 0.25)] {
        let f = noise(m, h, 11 + m as u64);
        let g = *f.grid();
        let plancherel = rel(dft(&f).l2_norm_squared(), lp_norm(&f, 2.0).unwrap().powi(2));
        let round_trip = max_rel_diff(&idft(&dft(&f)), &f);
        let minus_sigma: Vec<f64> = symbol_sigma(&g).iter().map(|s| -s).collect();
        let laplacian = max_rel_diff(&apply_multiplier(&f, &minus_sigma).unwrap(), &discrete_laplacian(&f));
        let prop = LinearPropagator::new(g, FlowKind::Discrete);
        let group = max_rel_diff(&prop.apply(&prop.apply(&f, 0.3), 0.45), &prop.apply(&f, 0.75));
        let unitary = rel(lp_norm(&prop.apply(&f, 1.7), 2.0).unwrap(), lp_norm(&f, 2.0).unwrap());
        let params = NonlinearityParams::new(1.0, 3.0).unwrap();
        let opts = SolveOptions {
            final_time: 0.05,
            step: 1e-3,
            sample_every: 10,
            keep_fields: false,
        };
        let mass = solve(&f, &opts, &params, FlowKind::Discrete).unwrap().mass_drift();
        let w = [plancherel, round_trip, laplacian, group, unitary, mass].into_iter().fold(0.0, f64::max);
        worst = worst.max(w);
        notes.push(format!(
            "M={m}: plancherel {plancherel:.1e}, round trip {round_trip:.1e}, laplacian {laplacian:.1e}, group {group:.1e}, unitarity {unitary:.1e}, mass {mass:.1e}"
        ));
    }
    (worst <= 1e-10, format!("worst {worst:.2e} <= 1e-10; {}", notes.join("; ")))
}

/// The time grid of the lattice-kernel decay sweep for one scale.
fn decay_times(n: DyadicScale, spec: &QuadratureSpec) -> Vec<f64> {
    let top = max_k_time_within_budget(n, spec).min(2000.0 / (16.0 * n.value().powi(3)));
    log_spaced(10.0, top, 6)
}

fn decay_spec() -> QuadratureSpec {
    QuadratureSpec {
        min_points: 64,
        tol: 1e-6,
        max_points: 8192,
    }
}

fn kernel_decay() -> Outcome {
    let spec = decay_spec();
    let mut ok = true;
    let mut notes = Vec::new();
    for k in 1..=5 {
        let n = DyadicScale::from_exponent(k);
        let times = decay_times(n, &spec);
        let recs = match decay_sweep(&[n], &times, &spec) {
            Ok(r) => r,
            Err(e) => return (false, format!("N=2^-{k}: {e}")),
        };
        let base = recs[0].normalized;
        let finite = recs.iter().all(|r| r.normalized.is_finite());
        let max = recs.iter().map(|r| r.normalized).fold(0.0, f64::max);
        let ratio = max / base;
        let mut line = format!("N=2^-{k} s<={:.0}: max/base {ratio:.2}", times[times.len() - 1]);
        ok &= finite && ratio <= 10.0;
        if k >= 2 {
            let slope = fit_loglog_slope(&recs.iter().map(|r| (r.time, r.sup_abs)).collect::<Vec<_>>())
                .unwrap()
                .slope;
            ok &= slope <= -0.5 + 0.1;
            line += &format!(", slope {slope:.3}");
        }
        notes.push(line);
    }
    (ok, format!("max/base <= 10, slope <= -0.4; {}", notes.join("; ")))
}

fn scaled_kernel_decay() -> Outcome {
    let spec = QuadratureSpec::default();
    let scales: Vec<DyadicScale> = (2..=5).map(DyadicScale::from_exponent).collect();
    let reduced = log_spaced(10.0, 100.0, 4);
    match dispersive_sweep(&scales, &reduced, &spec) {
        Err(e) => (false, format!("{}: {e}", e.kind())),
        Ok(recs) => {
            let base = recs[0].normalized;
            let max = recs.iter().map(|r| r.normalized).fold(0.0, f64::max);
            let min = recs.iter().map(|r| r.normalized).fold(f64::INFINITY, f64::min);
            let ok = max / min <= 5.0 && max <= 10.0 * base;
            (ok, format!("variation {:.2} <= 5, max/baseline {:.2} <= 10", max / min, max / base))
        }
    }
}

fn strichartz_profiles() -> Vec<(&'static str, ContinuumFunction)> {
    vec![
        ("gaussian", ContinuumFunction::gaussian(vec![16.0, 16.0], 2.0, Complex64::new(1.0, 0.0))),
        ("random", ContinuumFunction::random_band_limited(2, 32.0, 4, &mut SplitMix64::new(2024))),
    ]
}

fn strichartz_spec() -> SweepSpec {
    SweepSpec {
        period: 32.0,
        levels: vec![32, 64, 128, 256, 512, 1024],
        final_time: 10.0,
        samples: 512,
    }
}

const SWEEP_PAIRS: [SweepPair; 4] = [
    SweepPair::Admissible { q: f64::INFINITY, r: 2.0 },
    SweepPair::Admissible { q: 8.0, r: 4.0 },
    SweepPair::Admissible { q: 4.0, r: f64::INFINITY },
    SweepPair::SobolevEndpoint,
];

// criteria 4 and 5 share one sweep
fn strichartz_reports() -> &'static [(&'static str, Vec<StrichartzReport>)] {
    static CACHE: OnceLock<Vec<(&'static str, Vec<StrichartzReport>)>> = OnceLock::new();
    CACHE.get_or_init(|| {
        strichartz_profiles()
            .into_iter()
            .map(|(name, p)| (name, strichartz_sweep(&p, &SWEEP_PAIRS, &strichartz_spec()).unwrap()))
            .collect()
    })
}

fn strichartz_uniformity() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, reports) in strichartz_reports() {
        let unit = reports[0].ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
        ok &= unit <= 1e-12;
        let mut line = format!("{name}: (inf,2) |ratio-1| {unit:.1e}");
        for r in &reports[1..3] {
            ok &= r.spread <= 4.0 && r.trend_slope <= 0.1;
            let SweepPair::Admissible { q, r: rr } = r.pair else { unreachable!() };
            line += &format!(", ({q},{rr}) spread {:.3} slope {:.4}", r.spread, r.trend_slope);
        }
        notes.push(line);
    }
    (ok, format!("h = 1..2^-5, T=10; {}", notes.join("; ")))
}

fn sobolev_endpoint() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, reports) in strichartz_reports() {
        let r = &reports[3];
        ok &= r.trend_slope <= 0.1 && r.ratios.iter().all(|x| x.is_finite());
        notes.push(format!("{name}: slope {:.4}, ratios {:.4}..{:.4}", r.trend_slope, r.ratios[0], r.ratios[r.ratios.len() - 1]));
    }
    (ok, format!("trend slope <= 0.1; {}", notes.join("; ")))
}

fn interpolation_consistency() -> Outcome {
    let period = 16.0;
    let u0 = ContinuumFunction::gaussian(vec![8.0, 8.0], 1.0, Complex64::new(1.0, 0.0));
    let fine = LatticeGrid::with_period(2, 1024, period).unwrap();
    let exact = u0.sample(&fine).unwrap();
    let pairs: Vec<(f64, f64)> = [16usize, 32, 64, 128, 256]
        .iter()
        .map(|&m| {
            let g = LatticeGrid::with_period(2, m, period).unwrap();
            let e = l2_distance_fine(&interpolate_eval(&discretize(&u0, &g).unwrap(), &fine).unwrap(), &exact).unwrap();
            (g.mesh(), e)
        })
        .collect();
    let order = fit_loglog_slope(&pairs).unwrap().slope;
    (order >= 0.95, format!("fitted order {order:.3} >= 0.95 over h = L/16..L/256"))
}

fn limit_run(lambda: f64) -> Result<latdisp::continuum::ConvergenceReport, latdisp::Error> {
    run_limit_experiment(&LimitExperiment {
        initial: ContinuumFunction::gaussian(vec![12.0, 12.0], 2.0, Complex64::new(1.0, 0.0)),
        params: NonlinearityParams::new(lambda, 3.0)?,
        final_time: 1.0,
        period: 24.0,
        levels: vec![16, 32, 64, 128, 256],
        lattice_step: 2.5e-4,
        reference: ReferenceSpec::default(),
    })
}

fn continuum_limit() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for lambda in [1.0, -1.0] {
        match limit_run(lambda) {
            Err(e) => {
                ok = false;
                notes.push(format!("lambda={lambda}: {e}"));
            }
            Ok(r) => {
                let pass = r.strictly_decreasing() && r.fitted_order >= 0.61 && r.within_two_thirds_bound();
                ok &= pass;
                notes.push(format!(
                    "lambda={lambda}: order {:.3}, decreasing {}, within A h^(2/3) {}, errors {:.3e}..{:.3e}",
                    r.fitted_order,
                    r.strictly_decreasing(),
                    r.within_two_thirds_bound(),
                    r.errors[0],
                    r.errors[r.errors.len() - 1]
                ));
            }
        }
    }
    (ok, format!("p=3, T=1, h=L/2^k, k=4..8; {}", notes.join("; ")))
}

fn strang_order() -> Outcome {
    let g = LatticeGrid::with_period(2, 32, 16.0).unwrap();
    let f = discretize(&ContinuumFunction::gaussian(vec![8.0, 8.0], 1.25, Complex64::new(1.0, 0.0)), &g).unwrap();
    let params = NonlinearityParams::new(1.0, 3.0).unwrap();
    let run = |tau: f64| {
        let opts = SolveOptions {
            final_time: 1.0,
            step: tau,
            sample_every: 1,
            keep_fields: false,
        };
        solve(&f, &opts, &params, FlowKind::Discrete).unwrap()
    };
    let (a, b, c) = (run(4e-3), run(2e-3), run(1e-3));
    let diff = |x: &ComplexField, y: &ComplexField| lp_norm(&x.try_sub(y).unwrap(), 2.0).unwrap();
    let ratio = diff(&a.last, &b.last) / diff(&b.last, &c.last);
    let drift = a.energy_drift() / b.energy_drift();
    let ok = (3.5..=4.5).contains(&ratio) && (3.5..=4.5).contains(&drift);
    (ok, format!("self-convergence ratio {ratio:.3}, energy drift ratio {drift:.3}, both in [3.5, 4.5]"))
}

fn littlewood_paley() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    // partition, reconstruction and support on one grid
    let g = LatticeGrid::square(64, 0.5).unwrap();
    let scales = covering_scales(&g);
    let mut total = vec![0.0; g.len()];
    let mut support_ok = true;
    let hmax: Vec<f64> = g.frequency_map(|xi| xi.iter().map(|x| (g.mesh() * x).abs()).fold(0.0, f64::max));
    for &n in &scales {
        let psi = psi_symbol(&g, n);
        for ((t, p), s) in total.iter_mut().zip(&psi).zip(&hmax) {
            *t += p;
            if (*s <= PI * n.value() || *s >= 4.0 * PI * n.value()) && *p != 0.0 {
                support_ok = false;
            }
        }
    }
    let partition = total[1..].iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max);
    let mut rng = SplitMix64::new(5);
    let f = random_mean_zero_field(g, &mut rng);
    let recon = max_rel_diff(&reconstruct(&f, &scales), &f);
    ok &= partition <= 1e-12 && recon <= 1e-12 && support_ok;
    notes.push(format!("partition {partition:.1e}, reconstruction {recon:.1e}, support exact {support_ok}"));

    for p in [1.5, 4.0] {
        let brackets: Vec<_> = [16usize, 32, 64, 128]
            .iter()
            .map(|&m| bracket(&square_function_ratios(LatticeGrid::with_period(2, m, 16.0).unwrap(), p, 100, 77).unwrap()).unwrap())
            .collect();
        let spread = brackets.iter().map(|b| b.spread()).fold(0.0, f64::max);
        let var = |f: fn(&latdisp::littlewood_paley::Bracket) -> f64| {
            let v: Vec<f64> = brackets.iter().map(f).collect();
            v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        let (vl, vu) = (var(|b| b.lower), var(|b| b.upper));
        ok &= spread <= 100.0 && vl <= 4.0 && vu <= 4.0;
        notes.push(format!("p={p}: bracket spread {spread:.3} <= 100, h-variation lower {vl:.3} upper {vu:.3} <= 4"));
    }
    (ok, notes.join("; "))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("decay.json");
    // the criterion-2 sweep, spelled out
    std::fs::write(&cfg, r#"{"N_list": [0.5, 0.25, 0.125, 0.0625, 0.03125], "tol": 1e-6, "max_M": 8192, "s_min": 10, "s_count": 6}"#).unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_latdisp"))
            .args(["decay", "--config", cfg.to_str().unwrap(), "--seed", "7", "--threads", "2", "--out", out.to_str().unwrap()])
            .status()
            .unwrap();
        (status.success(), out)
    };
    let (ok_a, a) = run("a");
    let (ok_b, b) = run("b");
    if !(ok_a && ok_b) {
        return (false, "decay run failed".into());
    }
    let same = |f: &str| std::fs::read(a.join(f)).unwrap() == std::fs::read(b.join(f)).unwrap();
    let csv = same("decay.csv");
    let json = same("decay_summary.json") && same("manifest.json");
    // the library path must agree with the runner byte for byte
    let spec = decay_spec();
    let mut recs = Vec::new();
    for k in 1..=5 {
        let n = DyadicScale::from_exponent(k);
        recs.extend(decay_sweep(&[n], &decay_times(n, &spec), &spec).unwrap());
    }
    let mut lib = Vec::new();
    write_decay_csv(&mut lib, &recs).unwrap();
    let lib_same = lib == std::fs::read(a.join("decay.csv")).unwrap();
    (
        csv && json && lib_same,
        format!("decay.csv identical {csv}, JSON identical {json}, library output identical {lib_same}"),
    )
}

fn criteria() -> Vec<Criterion> {
    vec![
        Criterion { id: 1, name: "exactness suite", ignored: None, run: exactness },
        Criterion { id: 2, name: "lattice kernel decay", ignored: None, run: kernel_decay },
        Criterion {
            id: 3,
            name: "scaled kernel decay",
            ignored: Some(
                "needs 16384 to 131072 quadrature points per axis at tN^4 = 10 and about 10^6 at tN^4 = 100, far beyond the 8192 cap and desk memory",
            ),
            run: scaled_kernel_decay,
        },
        Criterion { id: 4, name: "space-time estimates uniform in h", ignored: None, run: strichartz_uniformity },
        Criterion { id: 5, name: "sup-norm bound by H^2", ignored: None, run: sobolev_endpoint },
        Criterion { id: 6, name: "interpolation consistency", ignored: None, run: interpolation_consistency },
        Criterion { id: 7, name: "continuum limit", ignored: None, run: continuum_limit },
        Criterion { id: 8, name: "Strang order", ignored: None, run: strang_order },
        Criterion { id: 9, name: "Littlewood-Paley suite", ignored: None, run: littlewood_paley },
        Criterion { id: 10, name: "determinism", ignored: None, run: determinism },
    ]
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let include_ignored = args.iter().any(|a| a == "--include-ignored" || a == "--ignored");
    let only_ignored = args.iter().any(|a| a == "--ignored");
    let selected: Vec<u32> = args.iter().filter_map(|a| a.parse().ok()).collect();
    if args.iter().any(|a| a == "--list") {
        for c in criteria() {
            println!("criterion {}: test", c.id);
        }
        return;
    }

    // failures are reported on the criterion line instead
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = Vec::new();
    for c in criteria() {
        if !selected.is_empty() && !selected.contains(&c.id) {
            continue;
        }
        if only_ignored && c.ignored.is_none() {
            continue;
        }
        if let (Some(reason), false) = (c.ignored, include_ignored) {
            println!("criterion {} ({}): IGNORED: {reason}", c.id, c.name);
            continue;
        }
        let t0 = Instant::now();
        let (pass, detail) = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        });
        println!(
            "criterion {} ({}): {} [{:.1}s] {detail}",
            c.id,
            c.name,
            if pass { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64()
        );
        if !pass {
            failed.push(c.id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
