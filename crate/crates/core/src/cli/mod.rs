//! Batch front-end: configuration loading, the experiment commands and
//! their CSV / JSON outputs.
//!
//! Each command returns a [`CommandOutput`]; [`write_outputs`] stores it as
//! `<name>.csv`, an optional `<name>_witnesses.json` with the beamformers
//! behind every row, and `<name>_manifest.json`.

mod commands;
pub mod config;
mod validate;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Error;

pub use commands::{cmd_boundary, cmd_convergence, cmd_corners};
pub use config::{AlphaGrid, AlphaRange, ConfigFile, ExperimentConfig};
pub use validate::{cmd_validate, CheckResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Config(Error),
    Solver(Error),
    /// One or more validation checks failed.
    Checks(usize),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Solver(_) | CliError::Checks(_) => EXIT_SOLVER,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "configuration error: {e}"),
            CliError::Solver(e) => write!(f, "solver failure: {e}"),
            CliError::Checks(n) => write!(f, "{n} validation check(s) failed"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

/// Command-line overrides applied on top of the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub alpha_count: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

/// Reads (or defaults) the configuration and applies the overrides.
pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<ConfigFile, CliError> {
    let mut file = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| {
                CliError::Config(Error::InvalidParameter(format!("{}: {e}", p.display())))
            })?;
            ConfigFile::from_json(&text).map_err(CliError::Config)?
        }
        None => ConfigFile::default(),
    };
    if let Some(seed) = overrides.seed {
        file.seeds = vec![seed];
    }
    if let Some(count) = overrides.alpha_count {
        let (min, max) = match &file.alpha_grid {
            AlphaGrid::Range(r) => (r.min, r.max),
            AlphaGrid::List(_) => (config::DEFAULT_ALPHA_MIN, config::DEFAULT_ALPHA_MAX),
        };
        file.alpha_grid = AlphaGrid::Range(AlphaRange { count, min, max });
    }
    if let Some(dir) = &overrides.output_dir {
        file.output_dir = dir.clone();
    }
    Ok(file)
}

/// What a command produced.
#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub name: &'static str,
    pub csv: String,
    /// Human-readable summary for the terminal.
    pub report: String,
    pub witnesses: Option<serde_json::Value>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config_sha256: &'a str,
    seeds: &'a [u64],
    alphas: Vec<f64>,
    files: Vec<String>,
}

/// Writes the CSV, witnesses and manifest into `cfg.output_dir`; returns
/// the paths written.
pub fn write_outputs(
    cfg: &ExperimentConfig,
    out: &CommandOutput,
) -> Result<Vec<PathBuf>, CliError> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let csv_path = dir.join(format!("{}.csv", out.name));
    fs::write(&csv_path, &out.csv)?;
    written.push(csv_path);

    if let Some(w) = &out.witnesses {
        let path = dir.join(format!("{}_witnesses.json", out.name));
        fs::write(
            &path,
            serde_json::to_string_pretty(w).expect("json value serializes"),
        )?;
        written.push(path);
    }

    let manifest = Manifest {
        command: out.name,
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: &cfg.digest,
        seeds: &cfg.seeds,
        alphas: cfg.alphas.iter().map(|a| a.alpha()).collect(),
        files: written
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
    };
    let path = dir.join(format!("{}_manifest.json", out.name));
    fs::write(
        &path,
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    written.push(path);
    Ok(written)
}

/// 17 significant digits; empty for non-finite values.
pub(crate) fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

pub(crate) fn csv_string(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}
