use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{run, RunOptions, SystemParams};
use crate::error::{Error, Result};
use crate::model::Configuration;
use crate::rates::asymptotic_profile;

/// Initial occupancy. Queued jobs get fresh service requirements.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitProfile {
    #[default]
    Empty,
    /// Every server holds `level` jobs.
    AllAt { level: usize },
    /// `round(N P_k)` servers hold at least `k` jobs, with `P_k` the
    /// large-`N` stationary tail.
    Geometric,
    /// State reached from empty after `warmup` time units
    /// (default `10/(1 - lambda)`).
    Stationary {
        #[serde(default)]
        warmup: Option<f64>,
    },
}

impl InitProfile {
    /// Whether the initial queue lengths are deterministic.
    pub fn is_deterministic(&self) -> bool {
        !matches!(self, InitProfile::Stationary { .. })
    }

    pub fn build<R: Rng + ?Sized>(&self, params: &SystemParams, rng: &mut R) -> Result<Configuration> {
        let n = params.n;
        match self {
            InitProfile::Empty => Configuration::empty(n),
            InitProfile::AllAt { level } => {
                Configuration::from_lengths_with(&vec![*level; n], |_, _| params.service.sample(rng))
            }
            InitProfile::Geometric => {
                Configuration::from_lengths_with(&geometric_lengths(params), |_, _| params.service.sample(rng))
            }
            InitProfile::Stationary { warmup } => {
                let warmup = warmup.unwrap_or(10.0 / (1.0 - params.lambda));
                if !(warmup > 0.0) {
                    return Err(Error::param("warmup", format!("must be positive, got {warmup}")));
                }
                let empty = Configuration::empty(n)?;
                let out = run(params, &empty, warmup, &[], &RunOptions::default(), rng)?;
                Ok(out.final_state)
            }
        }
    }
}

/// Lengths with `round(N P_k)` servers at or above each level, highest first.
fn geometric_lengths(params: &SystemParams) -> Vec<usize> {
    let n = params.n;
    let mut lengths = vec![0usize; n];
    for (k, p) in asymptotic_profile(params.d, params.lambda, 64).into_iter().enumerate().skip(1) {
        let count = ((n as f64) * p).round() as usize;
        if count == 0 {
            break;
        }
        lengths[..count.min(n)].iter_mut().for_each(|l| *l = k);
    }
    lengths
}
