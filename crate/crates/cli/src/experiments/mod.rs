//! One runner per experiment kind. Each returns its tables without touching
//! the file system, so tests and the acceptance harness can reuse them.

pub mod bounds;
pub mod chaos;
pub mod clan;
pub mod coupled;
pub mod rates_check;
pub mod simulate;
pub mod stationary;
pub mod tagged;

use podd_core::sim::InitProfile;
use podd_core::{Configuration, Error, Result, RngStream, SystemParams};

use crate::config::ExperimentSpec;

/// One `(N, D, lambda)` point of the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub n: usize,
    pub d: usize,
    pub lambda: f64,
}

impl Point {
    pub fn stream(&self, seed: u64) -> RngStream {
        crate::run::grid_stream(seed, self.n, self.d, self.lambda)
    }
}

/// Grid points in a fixed order: `N` outermost, then `D`, then `lambda`.
pub fn grid(spec: &ExperimentSpec) -> Vec<Point> {
    let mut out = Vec::new();
    for &n in &spec.n {
        for &d in &spec.d {
            for &lambda in &spec.lambda {
                out.push(Point { n, d, lambda });
            }
        }
    }
    out
}

pub fn params(spec: &ExperimentSpec, p: Point) -> Result<SystemParams> {
    SystemParams::new(p.n, p.d, p.lambda, spec.service_distribution(), spec.discipline)
}

/// Initial configuration for one replication, drawn from its own substream.
pub fn initial(spec: &ExperimentSpec, params: &SystemParams, rep: &RngStream) -> Result<Configuration> {
    spec.init.build(params, &mut rep.child("init", 0).rng())
}

/// Common queue length of a deterministic, homogeneous start.
pub fn homogeneous_level(init: &InitProfile) -> Result<usize> {
    match init {
        InitProfile::Empty => Ok(0),
        InitProfile::AllAt { level } => Ok(*level),
        other => Err(Error::param("init", format!("{other:?} is not a common level for every server"))),
    }
}

/// Horizon covering every sample time.
pub fn horizon(spec: &ExperimentSpec) -> Result<f64> {
    let h = spec.horizon.unwrap_or(0.0).max(spec.t_max());
    if h > 0.0 {
        Ok(h)
    } else {
        Err(Error::param("horizon", "give a positive horizon or a positive time in t"))
    }
}

/// Sample grid clipped to the horizon; `t = 0` included when requested.
pub fn sample_times(spec: &ExperimentSpec) -> Vec<f64> {
    spec.t_sorted()
}

/// `k` grid with a fallback.
pub fn levels(grid: &[usize], fallback: &[usize]) -> Vec<usize> {
    if grid.is_empty() {
        fallback.to_vec()
    } else {
        grid.to_vec()
    }
}
