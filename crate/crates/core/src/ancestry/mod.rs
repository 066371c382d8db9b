//! Clans of ancestors: the servers whose arrivals could have influenced a
//! given server over the last `t` time units.
//!
//! The clan is built by scanning a forward-simulated log backwards from its
//! horizon. By stationarity of the Poisson arrival stream this has the same
//! law as the construction on a backward trajectory.

use fixedbitset::FixedBitSet;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{mean_ci, Confidence, Estimate};
use crate::sim::EventLog;

/// Default number of sampled server pairs for intersection estimates.
pub const DEFAULT_PAIRS: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct ClanResult {
    pub server: usize,
    pub t: f64,
    pub psi: FixedBitSet,
}

impl ClanResult {
    pub fn size(&self) -> usize {
        self.psi.count_ones(..)
    }

    pub fn members(&self) -> Vec<usize> {
        self.psi.ones().collect()
    }

    pub fn intersects(&self, other: &ClanResult) -> bool {
        !self.psi.is_disjoint(&other.psi)
    }
}

fn check_window(log: &EventLog, t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::param("t", format!("must be non-negative, got {t}")));
    }
    if t > log.horizon {
        return Err(Error::BeyondHorizon { t, horizon: log.horizon });
    }
    Ok(())
}

/// Clan of server `i` over `[horizon - t, horizon]`.
pub fn build_clan(log: &EventLog, i: usize, t: f64) -> Result<ClanResult> {
    if i >= log.n {
        return Err(Error::param("server", format!("{i} out of range for N = {}", log.n)));
    }
    check_window(log, t)?;
    Ok(clan_path(log, i, &[t]).pop().unwrap())
}

/// Clans of server `i` for each window length in `ts` (ascending), from a
/// single backward scan.
fn clan_path(log: &EventLog, i: usize, ts: &[f64]) -> Vec<ClanResult> {
    let mut psi = FixedBitSet::with_capacity(log.n);
    psi.insert(i);
    let mut out = Vec::with_capacity(ts.len());
    let mut arrivals = log.arrivals.iter().rev().peekable();
    for &t in ts {
        let cutoff = log.horizon - t;
        while let Some(a) = arrivals.next_if(|a| a.time >= cutoff) {
            if a.zeta.iter().any(|&z| psi.contains(z)) {
                a.zeta.iter().for_each(|&z| psi.insert(z));
            }
        }
        out.push(ClanResult { server: i, t, psi: psi.clone() });
    }
    out
}

/// All unordered pairs when there are at most `budget`, otherwise `budget`
/// uniformly sampled distinct pairs (with replacement across draws).
pub fn sample_pairs<R: Rng + ?Sized>(n: usize, budget: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let total = n * n.saturating_sub(1) / 2;
    if total <= budget {
        return (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    }
    (0..budget)
        .map(|_| {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            (i.min(j), i.max(j))
        })
        .collect()
}

/// Clan summaries of one replication on a grid of window lengths.
#[derive(Clone, Debug, PartialEq)]
pub struct ClanSample {
    pub t_grid: Vec<f64>,
    /// Mean clan size over the servers appearing in the pairs.
    pub mean_size: Vec<f64>,
    /// Fraction of pairs whose clans intersect.
    pub p_intersect: Vec<f64>,
}

pub fn clan_sample(log: &EventLog, pairs: &[(usize, usize)], t_grid: &[f64]) -> Result<ClanSample> {
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("t_grid", "must be non-decreasing"));
    }
    for &t in t_grid {
        check_window(log, t)?;
    }
    if pairs.is_empty() {
        return Err(Error::param("pairs", "need at least one pair"));
    }
    let mut servers: Vec<usize> = Vec::with_capacity(2 * pairs.len());
    for &(i, j) in pairs {
        if i == j || i >= log.n || j >= log.n {
            return Err(Error::param("pairs", format!("invalid pair ({i}, {j})")));
        }
        servers.extend([i, j]);
    }
    servers.sort_unstable();
    servers.dedup();
    let mut paths: Vec<Option<Vec<ClanResult>>> = vec![None; log.n];
    for &s in &servers {
        paths[s] = Some(clan_path(log, s, t_grid));
    }
    let path = |s: usize| paths[s].as_ref().unwrap();

    let mut mean_size = Vec::with_capacity(t_grid.len());
    let mut p_intersect = Vec::with_capacity(t_grid.len());
    for g in 0..t_grid.len() {
        let total: usize = servers.iter().map(|&s| path(s)[g].size()).sum();
        mean_size.push(total as f64 / servers.len() as f64);
        let hits = pairs.iter().filter(|&&(i, j)| path(i)[g].intersects(&path(j)[g])).count();
        p_intersect.push(hits as f64 / pairs.len() as f64);
    }
    Ok(ClanSample { t_grid: t_grid.to_vec(), mean_size, p_intersect })
}

/// Cross-replication clan statistics at one window length.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClanStats {
    pub t: f64,
    pub mean_size: Estimate,
    pub p_intersect: Estimate,
}

/// Aggregate per-replication samples taken on a common grid.
pub fn clan_stats(samples: &[ClanSample], conf: Confidence) -> Result<Vec<ClanStats>> {
    let first = samples.first().ok_or(Error::InsufficientReplications { needed: 1, got: 0 })?;
    if samples.iter().any(|s| s.t_grid != first.t_grid) {
        return Err(Error::param("samples", "replications use different grids"));
    }
    Ok((0..first.t_grid.len())
        .map(|g| {
            let sizes: Vec<f64> = samples.iter().map(|s| s.mean_size[g]).collect();
            let hits: Vec<f64> = samples.iter().map(|s| s.p_intersect[g]).collect();
            ClanStats { t: first.t_grid[g], mean_size: mean_ci(&sizes, conf), p_intersect: mean_ci(&hits, conf) }
        })
        .collect())
}
