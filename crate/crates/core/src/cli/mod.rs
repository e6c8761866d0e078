//! Named experiments behind the `compactness-lab` binary. Each experiment
//! reads its `[section]` of an INI config, writes `report.csv` and
//! `manifest.txt`, and reports the invariants that failed.

mod config;
mod experiments;

pub use config::{Config, Key, RUN_KEYS};

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::error::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("unknown experiment `{0}` (try `compactness-lab list`)")]
    UnknownExperiment(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Library(#[from] Error),
}

impl CliError {
    /// 2 for anything the user can fix in the invocation or config, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::UnknownExperiment(_) => 2,
            CliError::Library(
                Error::InvalidParameter(_)
                | Error::InvalidGrid(_)
                | Error::InvalidExponent(_)
                | Error::UnderResolved { .. }
                | Error::InvalidNonlinearity(_)
                | Error::Parse(_)
                | Error::Config(_),
            ) => 2,
            _ => 1,
        }
    }
}

/// What an experiment hands back to the runner.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub csv: Vec<u8>,
    pub summary: Vec<(String, String)>,
    /// Names of violated invariants; empty means the run passed.
    pub failures: Vec<String>,
}

impl Report {
    pub fn note(&mut self, key: &str, value: impl std::fmt::Display) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    pub fn check(&mut self, ok: bool, failure: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(failure());
        }
    }
}

pub struct Experiment {
    pub name: &'static str,
    pub summary: &'static str,
    pub keys: &'static [Key],
    pub run: fn(&Config, u64) -> Result<Report, CliError>,
}

pub const EXPERIMENTS: &[Experiment] = experiments::ALL;

pub fn find(name: &str) -> Result<&'static Experiment, CliError> {
    EXPERIMENTS.iter().find(|e| e.name == name).ok_or_else(|| CliError::UnknownExperiment(name.to_string()))
}

/// Result of a completed run; `failures` decides the exit code.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub experiment: &'static str,
    pub seed: u64,
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            1
        }
    }
}

/// Runs `name` with the config at `config`, writing into `out`.
pub fn run(name: &str, config: &Path, out: &Path, seed: Option<u64>) -> Result<Outcome, CliError> {
    let exp = find(name)?;
    let cfg = Config::load(config, exp.name, exp.keys)?;
    let seed = match seed {
        Some(s) => s,
        None => cfg.get("seed")?,
    };
    let start = Instant::now();
    let report = (exp.run)(&cfg, seed)?;
    let wall = start.elapsed().as_secs_f64();
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("report.csv"), &report.csv)?;
    std::fs::write(out.join("manifest.txt"), manifest(exp, &cfg, seed, wall, &report))?;
    Ok(Outcome { experiment: exp.name, seed, failures: report.failures })
}

fn manifest(exp: &Experiment, cfg: &Config, seed: u64, wall: f64, report: &Report) -> String {
    let mut m = String::new();
    let _ = writeln!(m, "experiment = {}", exp.name);
    let _ = writeln!(m, "status = {}", if report.failures.is_empty() { "ok" } else { "failed" });
    for f in &report.failures {
        let _ = writeln!(m, "failure = {f}");
    }
    let _ = writeln!(m, "seed = {seed}");
    let _ = writeln!(m, "version = {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "profile = {}", if cfg!(debug_assertions) { "debug" } else { "release" });
    let _ = writeln!(m, "wall_time_s = {wall:.3}");
    let _ = writeln!(m, "\n[summary]");
    for (k, v) in &report.summary {
        let _ = writeln!(m, "{k} = {v}");
    }
    let _ = writeln!(m, "\n[config]");
    for (k, v) in cfg.resolved() {
        let _ = writeln!(m, "{k} = {v}");
    }
    m
}

/// The text printed by `compactness-lab list`.
pub fn listing() -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[run]");
    for k in RUN_KEYS {
        let _ = writeln!(s, "    {:<16} {:<24} {}", k.name, k.default, k.doc);
    }
    for e in EXPERIMENTS {
        let _ = writeln!(s, "\n{:<13} {}", e.name, e.summary);
        let _ = writeln!(s, "    [{}]", e.name);
        for k in e.keys {
            let _ = writeln!(s, "    {:<16} {:<24} {}", k.name, k.default, k.doc);
        }
    }
    s
}
