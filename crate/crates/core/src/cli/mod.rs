//! Config-driven experiment runner behind the `latdisp` binary.
//!
//! `latdisp <command> --config <file> [--out <dir>] [--threads <n>] [--seed <u64>]`
//!
//! Exit codes: 0 on success, 2 when the config is unreadable or invalid, 1
//! when the computation itself fails. Failures print a JSON object with a
//! `kind` tag to stderr and, once the output directory is known, also write
//! it to `error.json`. Every run that gets past validation writes
//! `manifest.json` with the resolved config and tool version.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde_json::{json, Value};

pub use commands::{default_decay_times, execute};
pub use config::{
    validate_config, Command, CommandConfig, CommonConfig, ConfigError, DecayConfig, EnsembleConfig, ExperimentConfig,
    LimitConfig, SolveConfig, StrichartzConfig, Violation,
};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "LATDISP_OUT";
const DEFAULT_OUT: &str = "latdisp-out";

#[derive(Debug, Parser)]
#[command(name = "latdisp", version, about = "Lattice fourth-order Schrodinger experiments")]
struct Args {
    /// Experiment to run.
    #[arg(value_enum)]
    command: Command,
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config and LATDISP_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for random ensembles and profiles.
    #[arg(long)]
    seed: Option<u64>,
}

fn report(kind: &str, message: &str, extra: Option<Value>) -> Value {
    let mut v = json!({ "kind": kind, "message": message });
    if let Some(e) = extra {
        v["violations"] = e;
    }
    v
}

fn emit(v: &Value, out: Option<&Path>) {
    eprintln!("{}", serde_json::to_string_pretty(v).unwrap_or_default());
    if let Some(dir) = out {
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = commands::write_json(dir, "error.json", v);
        }
    }
}

/// Resolves `--out`, then the config, then `LATDISP_OUT`, then `latdisp-out`.
pub fn resolve_out(cfg: &ExperimentConfig) -> PathBuf {
    cfg.common
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Parses `argv` (program name first), runs the experiment and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            let msg = format!("cannot read {}: {e}", args.config.display());
            emit(&report("config_unreadable", &msg, None), args.out.as_deref());
            return 2;
        }
    };
    let mut raw: Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            emit(&report("config_unparseable", &e.to_string(), None), args.out.as_deref());
            return 2;
        }
    };
    if let Some(map) = raw.as_object_mut() {
        if let Some(s) = args.seed {
            map.insert("seed".into(), json!(s));
        }
        if let Some(t) = args.threads {
            map.insert("threads".into(), json!(t));
        }
        if let Some(o) = &args.out {
            map.insert("out".into(), json!(o.to_string_lossy()));
        }
    }
    let cfg = match validate_config(&raw, args.command) {
        Ok(c) => c,
        Err(e) => {
            let extra = match &e {
                ConfigError::Invalid(v) => Some(json!(v)),
                ConfigError::Unparseable(_) => None,
            };
            emit(&report(e.kind(), &e.to_string(), extra), args.out.as_deref());
            return 2;
        }
    };

    let out = resolve_out(&cfg);
    let result = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.common.threads)
        .build()
        .map_err(|e| crate::Error::InvalidArgument(format!("thread pool: {e}")))
        .and_then(|pool| pool.install(|| execute(&cfg, &out)));

    let (status, artifacts, code) = match &result {
        Ok(a) => ("ok", a.clone(), 0),
        Err(e) => {
            emit(&report(e.kind(), &e.to_string(), None), Some(&out));
            ("error", vec!["error.json".to_string()], 1)
        }
    };
    let manifest = json!({
        "tool": "latdisp",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command,
        "config": cfg,
        "status": status,
        "artifacts": artifacts,
    });
    if std::fs::create_dir_all(&out).is_ok() {
        if let Err(e) = commands::write_json(&out, "manifest.json", &manifest) {
            eprintln!("cannot write manifest: {e}");
            return 1;
        }
    }
    code
}
