//! The single-queue cavity process, the three-stream coupling of the `N`
//! and `N + 1` server systems, and total-variation distances between queue
//! length laws.

mod coupled;
mod single;

pub use coupled::{run_coupled, CoupledRun, StreamCounts, StreamMask, TaggedDecomposition};
pub use single::{run_cavity, CavityRun};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rates::{asymptotic_tail, cavity_rate};
use crate::sim::Trajectory;

/// Default number of pieces of an empirical profile.
pub const DEFAULT_KNOTS: usize = 64;

/// Mean-field tail fractions `p_k(t)` driving the cavity arrival rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TailProfile {
    /// The fixed point `P_k` of the `(D, lambda)` system.
    Stationary { d: usize, lambda: f64 },
    /// Piecewise constant: `tails[j]` holds on `[starts[j], starts[j+1])`.
    /// Measured from finite-`N` averages, so only an approximation of the
    /// limit.
    Empirical { starts: Vec<f64>, tails: Vec<Vec<f64>> },
}

impl TailProfile {
    pub fn stationary(d: usize, lambda: f64) -> Self {
        TailProfile::Stationary { d, lambda }
    }

    /// Profile from averaged tail fractions sampled at `times`; each sample
    /// holds on the nearest-time interval.
    pub fn empirical(times: &[f64], tails: Vec<Vec<f64>>) -> Result<Self> {
        if times.is_empty() || times.len() != tails.len() {
            return Err(Error::SizeMismatch { expected: times.len(), found: tails.len() });
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("times", "must be strictly increasing"));
        }
        let mut starts = vec![f64::NEG_INFINITY];
        starts.extend(times.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        let profile = TailProfile::Empirical { starts, tails };
        profile.validate()?;
        Ok(profile)
    }

    /// Average `pi_k(t)/N` over replications sampled on a common grid.
    pub fn from_trajectories(trajectories: &[&Trajectory]) -> Result<Self> {
        let first = trajectories.first().ok_or(Error::InsufficientReplications { needed: 1, got: 0 })?;
        let reps = trajectories.len() as f64;
        let mut tails = Vec::with_capacity(first.times.len());
        for g in 0..first.times.len() {
            let depth = trajectories.iter().map(|t| t.snapshots[g].as_slice().len()).max().unwrap_or(1);
            let mut avg = vec![0.0; depth];
            for tr in trajectories {
                if tr.times != first.times {
                    return Err(Error::param("trajectories", "sample grids differ"));
                }
                let snap = &tr.snapshots[g];
                let n = snap.n() as f64;
                for (k, v) in snap.as_slice().iter().enumerate() {
                    avg[k] += *v as f64 / n / reps;
                }
            }
            avg[0] = 1.0;
            tails.push(avg);
        }
        Self::empirical(&first.times, tails)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TailProfile::Stationary { d, lambda } => {
                if *d == 0 {
                    return Err(Error::param("D", "must be at least 1"));
                }
                if !(*lambda > 0.0 && *lambda < 1.0) {
                    return Err(Error::param("lambda", format!("need 0 < lambda < 1, got {lambda}")));
                }
            }
            TailProfile::Empirical { starts, tails } => {
                if starts.len() != tails.len() || tails.is_empty() {
                    return Err(Error::SizeMismatch { expected: starts.len(), found: tails.len() });
                }
                for tail in tails {
                    if tail.first() != Some(&1.0) {
                        return Err(Error::param("tails", "p_0 must equal 1"));
                    }
                    if tail.windows(2).any(|w| w[1] > w[0] + 1e-12) || tail.iter().any(|p| *p < 0.0) {
                        return Err(Error::param("tails", "tail fractions must be non-negative and non-increasing"));
                    }
                }
            }
        }
        Ok(())
    }

    /// `p_k(t)`, zero beyond the stored levels.
    pub fn p(&self, t: f64, k: usize) -> f64 {
        match self {
            TailProfile::Stationary { d, lambda } => asymptotic_tail(*d, *lambda, k),
            TailProfile::Empirical { starts, tails } => {
                let j = starts.partition_point(|&s| s <= t).saturating_sub(1);
                tails[j].get(k).copied().unwrap_or(0.0)
            }
        }
    }

    /// Arrival rate to the cavity queue at level `k` and time `t`.
    pub fn rate(&self, d: usize, lambda: f64, t: f64, k: usize) -> f64 {
        cavity_rate(d, lambda, self.p(t, k), self.p(t, k + 1))
    }

    pub fn is_empirical(&self) -> bool {
        matches!(self, TailProfile::Empirical { .. })
    }
}

/// Law over `0..=k_max` with the mass above `k_max` lumped into the last atom.
pub fn truncate_with_overflow(law: &[f64], k_max: usize) -> Vec<f64> {
    let mut out: Vec<f64> = (0..=k_max).map(|k| law.get(k).copied().unwrap_or(0.0)).collect();
    out[k_max] += law.iter().skip(k_max + 1).sum::<f64>();
    out
}

/// Empirical law of non-negative integer observations.
pub fn histogram(values: impl IntoIterator<Item = usize>) -> Vec<f64> {
    let mut counts: Vec<u64> = Vec::new();
    let mut total = 0u64;
    for v in values {
        if counts.len() <= v {
            counts.resize(v + 1, 0);
        }
        counts[v] += 1;
        total += 1;
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// `(1/2) sum_k |a_k - b_k|`; the shorter law is padded with zeros.
pub fn tv_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    for law in [a, b] {
        if let Some((index, &value)) = law.iter().enumerate().find(|(_, p)| !(**p >= 0.0)) {
            return Err(Error::NonPositive { index, value });
        }
        let total: f64 = law.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized(total));
        }
    }
    let len = a.len().max(b.len());
    let at = |law: &[f64], k: usize| law.get(k).copied().unwrap_or(0.0);
    let tv = 0.5 * (0..len).map(|k| (at(a, k) - at(b, k)).abs()).sum::<f64>();
    Ok(tv.min(1.0))
}

#[cfg(test)]
mod tests;
