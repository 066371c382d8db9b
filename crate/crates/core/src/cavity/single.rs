use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::TailProfile;
use crate::discipline::Discipline;
use crate::error::{Error, Result};
use crate::model::Configuration;
use crate::rates::c_d_bound;
use crate::service::ServiceDistribution;
use crate::sim::QueueSystem;

/// One realization of the cavity queue.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CavityRun {
    pub times: Vec<f64>,
    pub lengths: Vec<usize>,
    /// Arrivals accepted at each level.
    pub up: Vec<u64>,
    /// Departures from level `k + 1` down to `k`.
    pub down: Vec<u64>,
    /// Time spent at each level.
    pub occupancy: Vec<f64>,
    pub candidates: u64,
}

impl CavityRun {
    fn bump(v: &mut Vec<u64>, k: usize) {
        if v.len() <= k {
            v.resize(k + 1, 0);
        }
        v[k] += 1;
    }

    fn stay(&mut self, k: usize, dt: f64) {
        if self.occupancy.len() <= k {
            self.occupancy.resize(k + 1, 0.0);
        }
        self.occupancy[k] += dt;
    }
}

/// Single queue fed at rate `cavity_rate(p_k(t), p_{k+1}(t))` when holding `k`
/// jobs, realized by thinning a Poisson stream of rate `c_d_bound(D, lambda)`.
#[allow(clippy::too_many_arguments)]
pub fn run_cavity<R: Rng + ?Sized>(
    d: usize,
    lambda: f64,
    profile: &TailProfile,
    service: &ServiceDistribution,
    discipline: Discipline,
    initial: usize,
    horizon: f64,
    sample_times: &[f64],
    rng: &mut R,
) -> Result<CavityRun> {
    if d == 0 {
        return Err(Error::param("D", "must be at least 1"));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::param("lambda", format!("need 0 < lambda < 1, got {lambda}")));
    }
    profile.validate()?;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::param("horizon", format!("must be finite and positive, got {horizon}")));
    }
    if sample_times.windows(2).any(|w| w[1] <= w[0]) || sample_times.iter().any(|t| !(*t >= 0.0 && *t <= horizon)) {
        return Err(Error::param("sample_times", "must increase strictly within [0, horizon]"));
    }

    let bound = c_d_bound(d, lambda);
    let candidate = Exp::new(bound).map_err(|e| Error::param("lambda", e.to_string()))?;
    let init = Configuration::from_lengths_with(&[initial], |_, _| service.sample(rng))?;
    let mut queue = QueueSystem::new(init, discipline);
    let mut out = CavityRun::default();
    let mut samples = sample_times.iter().copied().peekable();
    let mut next_candidate = candidate.sample(rng);
    let mut mark = 0.0;

    loop {
        let next_departure = queue.next_departure().unwrap_or(f64::INFINITY);
        let event = next_candidate.min(next_departure);
        while let Some(s) = samples.next_if(|&s| s < event) {
            out.times.push(s);
            out.lengths.push(queue.len(0));
        }
        if event > horizon {
            break;
        }
        out.stay(queue.len(0), event - mark);
        mark = event;
        let k = queue.len(0);
        if next_departure <= next_candidate {
            queue.depart();
            CavityRun::bump(&mut out.down, k - 1);
        } else {
            out.candidates += 1;
            let rate = profile.rate(d, lambda, next_candidate, k);
            if rng.gen::<f64>() * bound < rate {
                queue.arrive(next_candidate, 0, service.sample(rng));
                CavityRun::bump(&mut out.up, k);
            }
            next_candidate += candidate.sample(rng);
        }
    }
    for s in samples {
        out.times.push(s);
        out.lengths.push(queue.len(0));
    }
    out.stay(queue.len(0), horizon - mark);
    Ok(out)
}
