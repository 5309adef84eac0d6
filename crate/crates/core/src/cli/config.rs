//! Typed experiment configuration parsed from a flat JSON object.
//!
//! Every key is optional and falls back to a per-command default. Validation
//! walks all keys before returning, so a bad config reports every problem at
//! once.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::littlewood_paley::DyadicScale;
use crate::strichartz::{is_admissible, SweepPair};

/// Subcommands of the runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Decay,
    Strichartz,
    Limit,
    Lp,
    Gns,
    Solve,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Decay => "decay",
            Command::Strichartz => "strichartz",
            Command::Limit => "limit",
            Command::Lp => "lp",
            Command::Gns => "gns",
            Command::Solve => "solve",
        }
    }
}

/// One rejected key.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    /// The file is not a JSON object.
    Unparseable(String),
    Invalid(Vec<Violation>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Unparseable(m) => write!(f, "config is not a JSON object: {m}"),
            ConfigError::Invalid(v) => {
                write!(f, "{} config violation(s)", v.len())?;
                for x in v {
                    write!(f, "\n  {x}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    pub fn kind(&self) -> &'static str {
        match self {
            ConfigError::Unparseable(_) => "config_unparseable",
            ConfigError::Invalid(_) => "config_invalid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommonConfig {
    pub seed: u64,
    pub threads: usize,
    /// Unset means `LATDISP_OUT`, then `latdisp-out`. Left out of the
    /// manifest so outputs do not depend on where they were written.
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayConfig {
    /// `k` (lattice kernel, rescaled time) or `i` (continuum kernel, `t N^4`).
    pub kernel: String,
    pub scales: Vec<f64>,
    /// Explicit times; empty means log-spaced per scale.
    pub times: Vec<f64>,
    pub time_min: f64,
    pub time_count: usize,
    pub tol: f64,
    pub min_points: usize,
    pub max_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrichartzConfig {
    pub period: f64,
    pub meshes: Vec<f64>,
    pub final_time: f64,
    pub samples: usize,
    #[serde(serialize_with = "pairs_as_text")]
    pub pairs: Vec<SweepPair>,
    /// `gaussian`, `random` or `both`.
    pub profile: String,
    pub width: f64,
    pub band: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitConfig {
    pub period: f64,
    pub width: f64,
    pub amplitude: f64,
    pub meshes: Vec<f64>,
    pub lambda: f64,
    pub p: f64,
    pub final_time: f64,
    pub step: f64,
    pub reference_points: usize,
    pub compare_points: usize,
    pub reference_step: f64,
    pub self_check: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleConfig {
    pub points: usize,
    pub mesh: f64,
    /// `lp`: the Lebesgue exponent; `gns`: the target exponent `q`.
    pub exponent: f64,
    /// `gns` only: the smoothness order.
    pub order: f64,
    pub ensemble: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveConfig {
    pub points: usize,
    pub mesh: f64,
    pub lambda: f64,
    pub p: f64,
    pub final_time: f64,
    pub step: f64,
    pub sample_every: usize,
    pub width: f64,
    pub amplitude: f64,
    /// `discrete` or `continuum`.
    pub flow: String,
    pub keep_fields: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum CommandConfig {
    Decay(DecayConfig),
    Strichartz(StrichartzConfig),
    Limit(LimitConfig),
    Lp(EnsembleConfig),
    Gns(EnsembleConfig),
    Solve(SolveConfig),
}

/// Fully resolved configuration; serialized verbatim into `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(flatten)]
    pub common: CommonConfig,
    pub params: CommandConfig,
}

// JSON has no infinity; exponents are written as text
fn pairs_as_text<S: serde::Serializer>(pairs: &[SweepPair], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(pairs.len()))?;
    for p in pairs {
        let (q, r) = super::commands::pair_label(p);
        seq.serialize_element(&[q, r])?;
    }
    seq.end()
}

const COMMON_KEYS: &[&str] = &["seed", "threads", "out"];

struct Reader<'a> {
    map: &'a Map<String, Value>,
    seen: BTreeSet<&'static str>,
    violations: Vec<Violation>,
}

impl<'a> Reader<'a> {
    fn bad(&mut self, key: &str, message: impl Into<String>) {
        self.violations.push(Violation {
            key: key.to_string(),
            message: message.into(),
        });
    }

    fn get(&mut self, key: &'static str) -> Option<&'a Value> {
        self.seen.insert(key);
        self.map.get(key).filter(|v| !v.is_null())
    }

    fn f64(&mut self, key: &'static str, default: f64) -> f64 {
        match self.get(key) {
            None => default,
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => x,
                _ => {
                    self.bad(key, format!("expected a finite number, got {v}"));
                    default
                }
            },
        }
    }

    fn opt_f64(&mut self, key: &'static str) -> Option<f64> {
        let v = self.get(key)?;
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.bad(key, format!("expected a finite number, got {v}"));
                None
            }
        }
    }

    fn u64(&mut self, key: &'static str, default: u64) -> u64 {
        match self.get(key) {
            None => default,
            Some(v) => v.as_u64().unwrap_or_else(|| {
                self.bad(key, format!("expected a non-negative integer, got {v}"));
                default
            }),
        }
    }

    fn usize(&mut self, key: &'static str, default: usize) -> usize {
        self.u64(key, default as u64) as usize
    }

    fn bool(&mut self, key: &'static str, default: bool) -> bool {
        match self.get(key) {
            None => default,
            Some(v) => v.as_bool().unwrap_or_else(|| {
                self.bad(key, format!("expected true or false, got {v}"));
                default
            }),
        }
    }

    fn choice(&mut self, key: &'static str, default: &str, allowed: &[&str]) -> String {
        match self.get(key) {
            None => default.to_string(),
            Some(v) => match v.as_str() {
                Some(s) if allowed.contains(&s) => s.to_string(),
                _ => {
                    self.bad(key, format!("expected one of {allowed:?}, got {v}"));
                    default.to_string()
                }
            },
        }
    }

    fn f64_list(&mut self, key: &'static str, default: Vec<f64>) -> Vec<f64> {
        let Some(v) = self.get(key) else { return default };
        let parsed: Option<Vec<f64>> = v
            .as_array()
            .and_then(|a| a.iter().map(|x| x.as_f64().filter(|x| x.is_finite())).collect());
        parsed.unwrap_or_else(|| {
            self.bad(key, format!("expected a list of finite numbers, got {v}"));
            default
        })
    }

    fn exponent(v: &Value) -> Option<f64> {
        match v {
            Value::String(s) if s == "inf" => Some(f64::INFINITY),
            _ => v.as_f64().filter(|x| x.is_finite()),
        }
    }

    fn pairs(&mut self, key: &'static str, default: Vec<SweepPair>) -> Vec<SweepPair> {
        let Some(v) = self.get(key) else { return default };
        let parsed: Option<Vec<(f64, f64)>> = v.as_array().and_then(|a| {
            a.iter()
                .map(|p| {
                    let p = p.as_array()?;
                    if p.len() != 2 {
                        return None;
                    }
                    Some((Self::exponent(&p[0])?, Self::exponent(&p[1])?))
                })
                .collect()
        });
        let Some(parsed) = parsed else {
            self.bad(key, format!("expected a list of [q, r] pairs (numbers or \"inf\"), got {v}"));
            return default;
        };
        let mut out = Vec::new();
        for (q, r) in parsed {
            if is_admissible(q, r) {
                out.push(SweepPair::Admissible { q, r });
            } else {
                self.bad(key, format!("({q}, {r}) is not admissible: need q, r >= 2 and 1/q = (1/2)(1/2 - 1/r)"));
            }
        }
        out
    }

    fn finish(mut self, command: Command) -> Vec<Violation> {
        let mut unknown: Vec<&String> = self
            .map
            .keys()
            .filter(|k| !self.seen.contains(k.as_str()) && !COMMON_KEYS.contains(&k.as_str()))
            .collect();
        unknown.sort();
        for k in unknown {
            self.bad(k, format!("unknown key for `{}`", command.name()));
        }
        self.violations
    }
}

fn positive(r: &mut Reader, key: &str, x: f64) {
    if !(x > 0.0) {
        r.bad(key, format!("must be > 0, got {x}"));
    }
}

fn nonnegative(r: &mut Reader, key: &str, x: f64) {
    if !(x >= 0.0) {
        r.bad(key, format!("must be >= 0, got {x}"));
    }
}

fn power_of_two(r: &mut Reader, key: &str, m: usize, min: usize) {
    if !m.is_power_of_two() || m < min {
        r.bad(key, format!("must be a power of two >= {min}, got {m}"));
    }
}

fn nonlinearity(r: &mut Reader, lambda: f64, p: f64) {
    if !(p > 1.0) {
        r.bad("p", format!("requires p > 1, got {p}"));
    } else if lambda < 0.0 && !(p < 5.0) {
        r.bad("p", format!("focusing case (lambda < 0) requires 1 < p < 5, got p={p}"));
    }
}

fn mesh_levels(r: &mut Reader, key: &str, period: f64, meshes: &[f64]) {
    if meshes.len() < 3 {
        r.bad(key, format!("needs at least 3 mesh sizes, got {}", meshes.len()));
    }
    for &h in meshes {
        let m = period / h;
        if !(h > 0.0) || (m - m.round()).abs() > 1e-9 * m || !(m.round() as usize).is_power_of_two() || m.round() < 4.0 {
            r.bad(key, format!("mesh {h} must divide L={period} into a power-of-two count >= 4"));
        }
    }
    if meshes.windows(2).any(|w| w[1] >= w[0]) {
        r.bad(key, "mesh sizes must strictly decrease");
    }
}

fn dyadic_list(k0: i32, k1: i32, scale: f64) -> Vec<f64> {
    (k0..=k1).map(|k| scale * (-(k as f64)).exp2()).collect()
}

/// Validates `raw` for `command`, returning every violation found.
pub fn validate_config(raw: &Value, command: Command) -> Result<ExperimentConfig, ConfigError> {
    let map = raw
        .as_object()
        .ok_or_else(|| ConfigError::Unparseable(format!("top level is {}", type_name(raw))))?;
    let mut r = Reader {
        map,
        seen: BTreeSet::new(),
        violations: Vec::new(),
    };

    let seed = r.u64("seed", 0);
    let threads = r.usize("threads", 1);
    if threads == 0 {
        r.bad("threads", "must be >= 1");
    }
    let out = match r.get("out") {
        None => None,
        Some(Value::String(s)) if !s.is_empty() => Some(PathBuf::from(s)),
        Some(v) => {
            r.bad("out", format!("expected a non-empty path string, got {v}"));
            None
        }
    };

    let params = match command {
        Command::Decay => {
            let kernel = r.choice("kernel", "k", &["k", "i"]);
            let default_scales = if kernel == "k" { dyadic_list(1, 5, 1.0) } else { dyadic_list(2, 5, 1.0) };
            let scales = r.f64_list("N_list", default_scales);
            for &n in &scales {
                if DyadicScale::from_value(n).is_err() {
                    r.bad("N_list", format!("{n} is not a dyadic number 2^-k in (0, 1]"));
                }
            }
            if scales.is_empty() {
                r.bad("N_list", "must not be empty");
            }
            let times = r.f64_list("s_list", vec![]);
            for &s in &times {
                positive(&mut r, "s_list", s);
            }
            let time_min = r.f64("s_min", 10.0);
            positive(&mut r, "s_min", time_min);
            let time_count = r.usize("s_count", 6);
            if time_count < 1 {
                r.bad("s_count", "must be >= 1");
            }
            let tol = r.f64("tol", 1e-6);
            if !(tol > 0.0 && tol < 1.0) {
                r.bad("tol", format!("must lie in (0, 1), got {tol}"));
            }
            let min_points = r.usize("min_M", 64);
            power_of_two(&mut r, "min_M", min_points, 64);
            let max_points = r.usize("max_M", 8192);
            power_of_two(&mut r, "max_M", max_points, min_points.max(64));
            CommandConfig::Decay(DecayConfig {
                kernel,
                scales,
                times,
                time_min,
                time_count,
                tol,
                min_points,
                max_points,
            })
        }
        Command::Strichartz => {
            let period = r.f64("L", 32.0);
            positive(&mut r, "L", period);
            let meshes = r.f64_list("h_list", dyadic_list(0, 5, 1.0));
            mesh_levels(&mut r, "h_list", period, &meshes);
            let final_time = r.f64("T", 10.0);
            positive(&mut r, "T", final_time);
            let samples = r.usize("samples", 512);
            if samples < 2 {
                r.bad("samples", format!("must be >= 2, got {samples}"));
            }
            let mut pairs = r.pairs(
                "pairs",
                vec![
                    SweepPair::Admissible { q: f64::INFINITY, r: 2.0 },
                    SweepPair::Admissible { q: 8.0, r: 4.0 },
                    SweepPair::Admissible { q: 4.0, r: f64::INFINITY },
                ],
            );
            if r.bool("corollary", true) {
                pairs.push(SweepPair::SobolevEndpoint);
            }
            if pairs.is_empty() {
                r.bad("pairs", "no pairs to sweep");
            }
            let profile = r.choice("profile", "both", &["gaussian", "random", "both"]);
            let width = r.f64("width", 2.0);
            positive(&mut r, "width", width);
            if width > 0.0 && period < 12.0 * width {
                r.bad("width", format!("L={period} must be at least 12 widths, got width {width}"));
            }
            let band = r.u64("band", 4) as i64;
            if band < 1 {
                r.bad("band", "must be >= 1");
            }
            CommandConfig::Strichartz(StrichartzConfig {
                period,
                meshes,
                final_time,
                samples,
                pairs,
                profile,
                width,
                band,
            })
        }
        Command::Limit => {
            let width = r.f64("width", 2.0);
            positive(&mut r, "width", width);
            let period = r.f64("L", 12.0 * width.max(0.0));
            positive(&mut r, "L", period);
            if width > 0.0 && period < 12.0 * width {
                r.bad("L", format!("must be at least 12 widths ({}), got {period}", 12.0 * width));
            }
            let amplitude = r.f64("amplitude", 1.0);
            let meshes = r.f64_list("h_list", dyadic_list(4, 8, period));
            mesh_levels(&mut r, "h_list", period, &meshes);
            let lambda = r.f64("lambda", 1.0);
            let p = r.f64("p", 3.0);
            nonlinearity(&mut r, lambda, p);
            let final_time = r.f64("T", 1.0);
            nonnegative(&mut r, "T", final_time);
            let step = r.f64("tau", 2.5e-4);
            positive(&mut r, "tau", step);
            let reference_points = r.usize("ref_M", 256);
            power_of_two(&mut r, "ref_M", reference_points, 4);
            let compare_points = r.usize("compare_M", 1024);
            power_of_two(&mut r, "compare_M", compare_points, 4);
            if let Some(&h) = meshes.last() {
                let finest = (period / h).round();
                if (compare_points as f64) < 4.0 * finest {
                    r.bad("compare_M", format!("must be at least 4x the finest level ({finest})"));
                }
            }
            let reference_step = r.f64("ref_tau", 2.5e-4);
            positive(&mut r, "ref_tau", reference_step);
            let self_check = r.bool("self_check", true);
            CommandConfig::Limit(LimitConfig {
                period,
                width,
                amplitude,
                meshes,
                lambda,
                p,
                final_time,
                step,
                reference_points,
                compare_points,
                reference_step,
                self_check,
            })
        }
        Command::Lp | Command::Gns => {
            let points = r.usize("M", 64);
            power_of_two(&mut r, "M", points, 4);
            let mesh = r.f64("h", 1.0);
            positive(&mut r, "h", mesh);
            let (exponent, order) = if command == Command::Lp {
                let e = r.f64("lp_p", 4.0);
                if !(e > 1.0) {
                    r.bad("lp_p", format!("square-function bounds need p > 1, got {e}"));
                }
                (e, 0.0)
            } else {
                let q = r.f64("gns_q", 4.0);
                let s = r.f64("gns_s", 1.0);
                if crate::lattice::gns_theta(q, s).is_err() {
                    r.bad("gns_q", format!("(q={q}, s={s}) needs q > 2, s > 0 and theta = (1 - 2/q)/s in (0, 1)"));
                }
                (q, s)
            };
            let ensemble = r.usize("ensemble", if command == Command::Lp { 100 } else { 20 });
            if ensemble == 0 {
                r.bad("ensemble", "must be >= 1");
            }
            let cfg = EnsembleConfig {
                points,
                mesh,
                exponent,
                order,
                ensemble,
            };
            if command == Command::Lp {
                CommandConfig::Lp(cfg)
            } else {
                CommandConfig::Gns(cfg)
            }
        }
        Command::Solve => {
            let points = r.usize("M", 64);
            power_of_two(&mut r, "M", points, 4);
            let mesh = r.f64("h", 0.5);
            positive(&mut r, "h", mesh);
            let lambda = r.f64("lambda", 1.0);
            let p = r.f64("p", 3.0);
            nonlinearity(&mut r, lambda, p);
            let final_time = r.f64("T", 1.0);
            let step = r.opt_f64("tau").unwrap_or_else(|| crate::solvers::default_step(mesh.max(0.0)));
            if !(step != 0.0) || final_time * step < 0.0 {
                r.bad("tau", format!("must be nonzero with the sign of T, got {step}"));
            } else {
                let n = final_time / step;
                if (n - n.round()).abs() > 1e-9 * n.abs().max(1.0) {
                    r.bad("tau", format!("T={final_time} is not a whole number of steps {step}"));
                }
            }
            let sample_every = r.usize("sample_every", 10);
            if sample_every == 0 {
                r.bad("sample_every", "must be >= 1");
            }
            let period = points as f64 * mesh;
            let width = r.f64("width", period / 12.0);
            positive(&mut r, "width", width);
            if width > 0.0 && period < 12.0 * width {
                r.bad("width", format!("the torus (L={period}) must be at least 12 widths"));
            }
            let amplitude = r.f64("amplitude", 1.0);
            let flow = r.choice("flow", "discrete", &["discrete", "continuum"]);
            let keep_fields = r.bool("keep_fields", false);
            CommandConfig::Solve(SolveConfig {
                points,
                mesh,
                lambda,
                p,
                final_time,
                step,
                sample_every,
                width,
                amplitude,
                flow,
                keep_fields,
            })
        }
    };

    let violations = r.finish(command);
    if !violations.is_empty() {
        return Err(ConfigError::Invalid(violations));
    }
    Ok(ExperimentConfig {
        command,
        common: CommonConfig { seed, threads, out },
        params,
    })
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}
