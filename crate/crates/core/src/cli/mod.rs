//! Command-line front end: scene ingestion, one subcommand per library
//! operation, and a run directory with `report.json`, data files and a log.
//!
//! Exit codes: 0 success, 1 I/O, 2 parse errors (flags, scene, expressions),
//! 3 validation failures, 4 numerical failures.

mod commands;
mod report;
mod scene;

pub use report::{complex, exact, num, RunDir, SCHEMA};
pub use scene::{AlphaSpec, JBuiltin, JSpec, Scene};

use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "jcurve", version, about = "Anti-invariant forms, J-holomorphic disks and zero sets in R^4")]
pub struct Args {
    /// Scene file (TOML).
    #[arg(long, global = true)]
    pub scene: Option<PathBuf>,
    /// Run directory for report.json, data files and the log.
    #[arg(long, global = true, default_value = "run")]
    pub out: PathBuf,
    /// Overrides the scene seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the main grid resolution of the command.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Overrides the main tolerance of the command.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check J^2 = -I and report anti-invariance and closedness of alpha.
    Validate,
    /// Split alpha into invariant and anti-invariant parts.
    Split,
    /// Multiplicity of a planar map on a disk.
    Degree,
    /// Fixture battery of the five multiplicity axioms.
    Axioms,
    /// Solve a J-holomorphic disk.
    Disk,
    /// Solve a family of disks and report its closeness constants.
    Foliate,
    /// Trivialize alpha along a J-holomorphic disk.
    Trivialize,
    /// Factor a manufactured solution of a CR system.
    Carleman,
    /// Trace the zero set of alpha and count boxes.
    Zeroset,
    /// Intersection index of disks with the zero set of alpha.
    Index,
    /// Extend a function across a puncture.
    Hartogs,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Split => "split",
            Command::Degree => "degree",
            Command::Axioms => "axioms",
            Command::Disk => "disk",
            Command::Foliate => "foliate",
            Command::Trivialize => "trivialize",
            Command::Carleman => "carleman",
            Command::Zeroset => "zeroset",
            Command::Index => "index",
            Command::Hartogs => "hartogs",
        }
    }
}

/// Flag overrides applied on top of a scene.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
}

/// Load the scene (empty when no file is given) and run `args.command`.
pub fn run(args: &Args) -> Result<(), CliError> {
    let scene = match &args.scene {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Parse(format!("{}: {e}", p.display())))?;
            Scene::parse(&text)?
        }
        None => Scene::default(),
    };
    let overrides = Overrides { seed: args.seed, grid: args.grid, tol: args.tol };
    run_scene(args.command, scene, &overrides, &args.out)
}

pub fn run_scene(command: Command, mut scene: Scene, overrides: &Overrides, out: &std::path::Path) -> Result<(), CliError> {
    if let Some(s) = overrides.seed {
        scene.seed = s;
    }
    let start = std::time::Instant::now();
    let mut dir = RunDir::create(out)?;
    dir.log(format!("jcurve {} (seed {})", command.name(), scene.seed));
    let mut results = serde_json::Map::new();
    let outcome = commands::dispatch(command, &scene, overrides, &mut dir, &mut results);
    let elapsed = start.elapsed().as_secs_f64();
    match outcome {
        Ok(()) => {
            dir.log("status: ok");
            dir.finish(command.name(), scene.seed, "ok", results, elapsed)
        }
        Err(e) => {
            dir.log(format!("status: {e}"));
            results.insert("error".into(), serde_json::Value::String(e.to_string()));
            results.insert("exit_code".into(), exact(e.exit_code() as i64));
            dir.finish(command.name(), scene.seed, "error", results, elapsed)?;
            Err(e)
        }
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("jcurve: {e}");
            e.exit_code()
        }
    }
}
