//! Dispatch, worker pools and exit codes.

use std::path::{Path, PathBuf};
use std::time::Instant;

use podd_core::RngStream;

use crate::config::{ExperimentSpec, Kind};
use crate::experiments;
use crate::output::{Manifest, Outcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(#[from] crate::config::ConfigError),
    #[error("{0}")]
    Model(#[from] podd_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Model(_) => EXIT_CONFIG,
            RunError::Io(_) | RunError::Pool(_) => EXIT_VIOLATION,
        }
    }
}

#[derive(Debug)]
pub struct RunReport {
    pub exit_code: i32,
    pub outcome: Outcome,
    pub files: Vec<PathBuf>,
}

/// Stream for one grid point: `seed / N / D / lambda`.
pub fn grid_stream(seed: u64, n: usize, d: usize, lambda: f64) -> RngStream {
    RngStream::new(seed).child("N", n as u64).child("D", d as u64).child("lambda", lambda.to_bits())
}

/// Compute an experiment on the current rayon pool.
pub fn execute(spec: &ExperimentSpec) -> Result<Outcome, RunError> {
    spec.validate()?;
    Ok(match spec.kind {
        Kind::Bounds => experiments::bounds::run(spec)?,
        Kind::Simulate => experiments::simulate::run(spec)?,
        Kind::Chaos => experiments::chaos::run(spec)?,
        Kind::Clan => experiments::clan::run(spec)?,
        Kind::Tagged => experiments::tagged::run(spec)?,
        Kind::Stationary => experiments::stationary::run(spec)?,
        Kind::RatesCheck => experiments::rates_check::run(spec)?,
        Kind::Coupled => experiments::coupled::run(spec)?,
    })
}

/// Run `f` on a pool of `workers` threads (all cores when `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, RunError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    Ok(builder.build()?.install(f))
}

/// Compute, write the CSVs and `manifest.json` into `out_dir`.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path, workers: Option<usize>) -> Result<RunReport, RunError> {
    let start = Instant::now();
    let pool_size = with_workers(workers, rayon::current_num_threads)?;
    let outcome = with_workers(workers, || execute(spec))??;
    let mut files = outcome.write_to(out_dir)?;
    let manifest = Manifest {
        spec,
        version: env!("CARGO_PKG_VERSION"),
        seed: spec.seed,
        workers: pool_size,
        wall_time_secs: start.elapsed().as_secs_f64(),
        violations: outcome.violations,
        files: files.iter().filter_map(|p| p.strip_prefix(out_dir).ok()).map(|p| p.display().to_string()).collect(),
    };
    files.push(manifest.write(out_dir)?);
    let exit_code = if outcome.violations > 0 { EXIT_VIOLATION } else { EXIT_OK };
    Ok(RunReport { exit_code, outcome, files })
}
