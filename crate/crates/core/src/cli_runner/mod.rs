//! Command-line front end: `curvscale limit|scaling|check --config <path> [--out <path>]`.
//!
//! Exit codes: 0 success, 1 property failure, 2 config error, 3 numerical
//! failure. Outputs are written through a temporary file and renamed.

mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use commands::{
    cmd_check, cmd_limit, cmd_scaling, format_csv, CheckReport, ScalingReport, CSV_HEADER, EXPANSION_RADII,
    GAUGE_TOL, HOMOGENEITY_TOL, MIN_EXPANSION_ORDER,
};
pub use config::{
    CheckSpec, Experiment, ExperimentConfig, ManifoldSpec, OptimizerSpec, QSearchSpec, MAX_MESH_REFINEMENT,
};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "CURVSCALE_THREADS";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "curvscale", version, about = "h⁴ scaling of the elastic energy between small geodesic balls")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct IoArgs {
    /// JSON experiment config.
    #[arg(long)]
    pub config: PathBuf,
    /// Output path; overrides `output_path` from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize the limit functional over rotations.
    Limit(IoArgs),
    /// Run the h⁴ scaling sweep (CSV plus JSON sidecar).
    Scaling(IoArgs),
    /// Run the property suites.
    Check(IoArgs),
}

/// Writes `contents` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let err = |e: std::io::Error| CliError::Output(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(err)?;
    tmp.write_all(contents).map_err(err)?;
    tmp.flush().map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

/// Sidecar path of a scaling CSV: `out.csv` → `out.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    if csv.extension().is_some_and(|e| e == "json") {
        csv.with_extension("summary.json")
    } else {
        csv.with_extension("json")
    }
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

fn load(args: &IoArgs) -> Result<(Experiment, Option<PathBuf>), CliError> {
    let exp = ExperimentConfig::load(&args.config)?.validate()?;
    let out = args.out.clone().or_else(|| exp.output_path.clone());
    Ok((exp, out))
}

/// Runs one command and returns the process exit code.
pub fn execute(cmd: &Command) -> Result<u8, CliError> {
    match cmd {
        Command::Limit(args) => {
            let (exp, out) = load(args)?;
            let report = cmd_limit(&exp)?;
            emit(out.as_deref(), &pretty(&report))?;
            Ok(0)
        }
        Command::Scaling(args) => {
            let (exp, out) = load(args)?;
            let out = out.ok_or_else(|| CliError::Config("scaling needs --out or output_path".into()))?;
            let report = cmd_scaling(&exp)?;
            write_atomic(&out, report.csv.as_bytes())?;
            write_atomic(&sidecar_path(&out), pretty(&report.summary).as_bytes())?;
            if report.has_failures() {
                eprintln!("curvscale: some rows ended with a failed line search");
                return Ok(3);
            }
            Ok(0)
        }
        Command::Check(args) => {
            let (exp, out) = load(args)?;
            let report = cmd_check(&exp)?;
            emit(out.as_deref(), &pretty(&report.summary))?;
            for v in &report.violations {
                eprintln!("violation: {v}");
            }
            Ok(if report.passed { 0 } else { 1 })
        }
    }
}

/// Entry point shared by the binary: parses `args` and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = thread_cap().and_then(|cap| match cap {
        None => execute(&cli.command),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(|| execute(&cli.command)),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("curvscale: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
