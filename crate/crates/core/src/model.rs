//! System state and its occupancy summaries.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Job {
    pub id: u64,
    /// Remaining work, in units of the (mean-1) service requirement.
    pub residual: f64,
    pub arrived_at: f64,
}

/// Jobs at one server in arrival order; the discipline decides who is served.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ServerState {
    pub(crate) jobs: VecDeque<Job>,
}

impl ServerState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_jobs(jobs: impl IntoIterator<Item = Job>) -> Result<Self> {
        let jobs: VecDeque<Job> = jobs.into_iter().collect();
        if let Some(bad) = jobs.iter().find(|j| !(j.residual > 0.0) || !j.residual.is_finite()) {
            return Err(Error::param("residual", format!("job {} has residual {}", bad.id, bad.residual)));
        }
        Ok(Self { jobs })
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn jobs(&self) -> impl ExactSizeIterator<Item = &Job> {
        self.jobs.iter()
    }

    pub fn work(&self) -> f64 {
        self.jobs.iter().map(|j| j.residual).sum()
    }

    pub(crate) fn push(&mut self, job: Job) {
        self.jobs.push_back(job);
    }
}

/// Queue contents of all `N` servers.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    servers: Vec<ServerState>,
}

impl Configuration {
    pub fn new(servers: Vec<ServerState>) -> Result<Self> {
        if servers.is_empty() {
            return Err(Error::param("N", "a configuration needs at least one server"));
        }
        Ok(Self { servers })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(vec![ServerState::new(); n])
    }

    /// Queue lengths `lengths`, every job carrying `residual` units of work.
    pub fn from_lengths(lengths: &[usize], residual: f64) -> Result<Self> {
        Self::from_lengths_with(lengths, |_, _| residual)
    }

    /// Queue lengths `lengths`; `residual(server, position)` gives each job's work.
    pub fn from_lengths_with(lengths: &[usize], mut residual: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut id = 0;
        let servers = lengths
            .iter()
            .enumerate()
            .map(|(server, &len)| {
                ServerState::from_jobs((0..len).map(|pos| {
                    id += 1;
                    Job { id, residual: residual(server, pos), arrived_at: 0.0 }
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(servers)
    }

    pub fn n(&self) -> usize {
        self.servers.len()
    }

    pub fn servers(&self) -> &[ServerState] {
        &self.servers
    }

    pub fn into_servers(self) -> Vec<ServerState> {
        self.servers
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.servers.iter().map(ServerState::len).collect()
    }

    pub fn max_len(&self) -> usize {
        self.servers.iter().map(ServerState::len).max().unwrap_or(0)
    }

    pub fn total_jobs(&self) -> usize {
        self.servers.iter().map(ServerState::len).sum()
    }
}

/// `pi[k]` = number of servers holding at least `k` jobs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TailCounts {
    pub(crate) pi: Vec<u32>,
}

impl TailCounts {
    /// Tail counts of a list of queue lengths, for levels `0..=k_max`.
    pub fn from_lengths(lengths: impl IntoIterator<Item = usize>, k_max: usize) -> Self {
        let mut exact = vec![0u32; k_max + 2];
        for len in lengths {
            exact[len.min(k_max + 1)] += 1;
        }
        let mut pi = vec![0u32; k_max + 1];
        let mut acc = exact[k_max + 1];
        for k in (0..=k_max).rev() {
            acc += exact[k];
            pi[k] = acc;
        }
        Self { pi }
    }

    /// Wraps raw counts; `pi` must start with `N` and be non-increasing.
    pub fn from_counts(pi: Vec<u32>) -> Result<Self> {
        if pi.is_empty() {
            return Err(Error::param("pi", "empty"));
        }
        if pi.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::param("pi", "tail counts must be non-increasing"));
        }
        Ok(Self { pi })
    }

    pub fn n(&self) -> usize {
        self.pi[0] as usize
    }

    /// Highest level stored.
    pub fn k_max(&self) -> usize {
        self.pi.len() - 1
    }

    /// `pi_k`; zero above the stored range.
    pub fn get(&self, k: usize) -> u32 {
        self.pi.get(k).copied().unwrap_or(0)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.pi
    }

    /// Tail fraction `pi_k / N`.
    pub fn fraction(&self, k: usize) -> f64 {
        self.get(k) as f64 / self.n() as f64
    }

    /// Number of servers with exactly `k` jobs.
    pub fn exactly(&self, k: usize) -> u32 {
        self.get(k) - self.get(k + 1)
    }

    /// Whether the stored range covers every occupied level.
    pub fn is_complete(&self) -> bool {
        *self.pi.last().unwrap() == 0
    }
}

/// `m[k]` = fraction of servers holding exactly `k` jobs.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    pub m: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn get(&self, k: usize) -> f64 {
        self.m.get(k).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.m.iter().sum()
    }
}

pub fn tail_counts(config: &Configuration, k_max: usize) -> Result<TailCounts> {
    if k_max < 1 {
        return Err(Error::param("k_max", "must be at least 1"));
    }
    Ok(TailCounts::from_lengths(config.servers.iter().map(ServerState::len), k_max))
}

pub fn empirical_measure(config: &Configuration, k_max: usize) -> Result<EmpiricalMeasure> {
    let level = config.max_len();
    if level > k_max {
        return Err(Error::LevelCapExceeded { k_max, level });
    }
    let pi = tail_counts(config, k_max.max(1))?;
    Ok(measure_from_tail(&pi))
}

/// Empirical measure induced by complete tail counts.
pub fn measure_from_tail(pi: &TailCounts) -> EmpiricalMeasure {
    let n = pi.n() as f64;
    EmpiricalMeasure { m: (0..=pi.k_max()).map(|k| pi.exactly(k) as f64 / n).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn config(lengths: &[usize]) -> Configuration {
        Configuration::from_lengths(lengths, 1.0).unwrap()
    }

    #[test]
    fn tail_counts_all_empty() {
        assert_eq!(tail_counts(&config(&[0, 0, 0]), 2).unwrap().as_slice(), &[3, 0, 0]);
    }

    #[test]
    fn tail_counts_by_hand() {
        assert_eq!(tail_counts(&config(&[3, 1, 2]), 3).unwrap().as_slice(), &[3, 3, 2, 1]);
    }

    #[test]
    fn tail_counts_constant_profile() {
        let pi = tail_counts(&config(&[4; 7]), 6).unwrap();
        for j in 0..=6 {
            assert_eq!(pi.get(j), if j <= 4 { 7 } else { 0 });
        }
    }

    #[test]
    fn tail_counts_rejects_zero_cap() {
        assert!(tail_counts(&config(&[1]), 0).is_err());
    }

    #[test]
    fn measure_examples() {
        let m = empirical_measure(&config(&[0, 0, 0]), 3).unwrap();
        assert_eq!(m.m, vec![1.0, 0.0, 0.0, 0.0]);
        let m = empirical_measure(&config(&[3, 1, 2]), 3).unwrap();
        let third = 1.0 / 3.0;
        assert_eq!(m.m, vec![0.0, third, third, third]);
    }

    #[test]
    fn measure_refuses_truncation() {
        assert_eq!(
            empirical_measure(&config(&[5, 0]), 4),
            Err(Error::LevelCapExceeded { k_max: 4, level: 5 })
        );
    }

    #[test]
    fn rejects_nonpositive_residual() {
        assert!(Configuration::from_lengths(&[1], 0.0).is_err());
        assert!(Configuration::empty(0).is_err());
    }

    proptest! {
        #[test]
        fn tail_and_measure_agree(lengths in prop::collection::vec(0usize..12, 1..40)) {
            let cfg = config(&lengths);
            let n = lengths.len() as u32;
            let pi = tail_counts(&cfg, 12).unwrap();
            let m = empirical_measure(&cfg, 12).unwrap();
            prop_assert_eq!(pi.get(0), n);
            prop_assert!(pi.as_slice().windows(2).all(|w| w[1] <= w[0]));
            for k in 0..=12 {
                let exact = lengths.iter().filter(|&&x| x == k).count() as u32;
                prop_assert_eq!(pi.get(k) - pi.get(k + 1), exact);
                prop_assert!((m.get(k) * n as f64 - exact as f64).abs() < 1e-9);
            }
            prop_assert!((m.total() - 1.0).abs() < 1e-12);
        }
    }
}
