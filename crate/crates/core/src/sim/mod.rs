//! Event-driven simulation of `N` servers fed by a Poisson stream of rate
//! `lambda N`, each arrival joining the shortest of `D` servers sampled
//! without replacement.
//!
//! Residual work is tracked exactly; there is no time discretization.
//! Simultaneous events are resolved departures first, then by server index.

mod engine;
mod init;
mod output;

pub use engine::QueueSystem;
pub use init::InitProfile;
pub use output::{write_event_log_csv, write_trajectory_csv};

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::discipline::Discipline;
use crate::error::{Error, Result};
use crate::model::{Configuration, TailCounts};
use crate::rates::{lambda_rate_closed, RateInputs};
use crate::rng::RngStream;
use crate::service::ServiceDistribution;

/// Model parameters shared by every run of one system.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemParams {
    pub n: usize,
    pub d: usize,
    pub lambda: f64,
    pub service: ServiceDistribution,
    pub discipline: Discipline,
}

impl SystemParams {
    pub fn new(n: usize, d: usize, lambda: f64, service: ServiceDistribution, discipline: Discipline) -> Result<Self> {
        let params = Self { n, d, lambda, service, discipline };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d > self.n {
            return Err(Error::param("D", format!("need 1 <= D <= N, got D = {}, N = {}", self.d, self.n)));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::param("lambda", format!("need 0 < lambda < 1, got {}", self.lambda)));
        }
        Ok(())
    }

    /// Total arrival rate `lambda N`.
    pub fn arrival_rate(&self) -> f64 {
        self.lambda * self.n as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArrivalEvent {
    pub time: f64,
    /// The `D` sampled servers.
    pub zeta: Vec<usize>,
    pub routed_to: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DepartureEvent {
    pub time: f64,
    pub server: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventLog {
    pub horizon: f64,
    pub n: usize,
    pub d: usize,
    pub arrivals: Vec<ArrivalEvent>,
    pub departures: Vec<DepartureEvent>,
}

/// What to keep of the event stream.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LogLevel {
    #[default]
    Off,
    Arrivals,
    Full,
}

/// Occupancy sampled at fixed times.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<TailCounts>,
    /// Queue lengths of the watched servers (server 0 by default) at each time.
    pub watched: Vec<Vec<usize>>,
}

impl Trajectory {
    /// Stored tail counts at a sampled time.
    pub fn snapshot(&self, t: f64) -> Result<&TailCounts> {
        self.index_of(t).map(|i| &self.snapshots[i])
    }

    pub fn index_of(&self, t: f64) -> Result<usize> {
        self.times.iter().position(|&s| s == t).ok_or(Error::NotSampled(t))
    }

    /// Queue length of server 0 at each sample time, if it was watched first.
    pub fn tagged_queue(&self) -> Vec<usize> {
        self.watched.iter().map(|w| w[0]).collect()
    }
}

/// Time-averaged tail fractions over consecutive batches after a warm-up.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchPlan {
    pub warmup: f64,
    pub batch_len: f64,
    pub n_batches: usize,
    pub k_max: usize,
}

impl BatchPlan {
    /// Warm-up of `10/(1 - lambda)` and batches of the same length filling
    /// `span` time units after it.
    pub fn for_load(lambda: f64, span: f64, k_max: usize) -> Self {
        let warmup = 10.0 / (1.0 - lambda);
        Self { warmup, batch_len: warmup, n_batches: (span / warmup).floor() as usize, k_max }
    }

    pub fn end(&self) -> f64 {
        self.warmup + self.batch_len * self.n_batches as f64
    }

    pub(crate) fn boundary(&self, j: usize) -> f64 {
        self.warmup + self.batch_len * j as f64
    }
}

/// Arrivals routed to server 0 and their predicted (compensator) count,
/// split by the level of server 0 just before each arrival.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TaggedIntensity {
    pub arrivals: Vec<u64>,
    pub compensator: Vec<f64>,
    /// Time spent by server 0 at each level.
    pub occupancy: Vec<f64>,
}

impl TaggedIntensity {
    fn grow(&mut self, k: usize) {
        if self.arrivals.len() <= k {
            self.arrivals.resize(k + 1, 0);
            self.compensator.resize(k + 1, 0.0);
            self.occupancy.resize(k + 1, 0.0);
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub log: LogLevel,
    /// Servers whose queue lengths are recorded at each sample time.
    pub watch: Vec<usize>,
    pub batches: Option<BatchPlan>,
    /// Track arrivals to server 0 against `lambda_rate_closed`.
    pub tagged_intensity: bool,
}

impl RunOptions {
    pub fn new() -> Self {
        Self { watch: vec![0], ..Self::default() }
    }

    pub fn with_log(mut self, log: LogLevel) -> Self {
        self.log = log;
        self
    }

    pub fn with_batches(mut self, plan: BatchPlan) -> Self {
        self.batches = Some(plan);
        self
    }

    pub fn with_watch(mut self, watch: Vec<usize>) -> Self {
        self.watch = watch;
        self
    }

    pub fn with_tagged_intensity(mut self) -> Self {
        self.tagged_intensity = true;
        self
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub log: EventLog,
    /// `batch_means[j][k]`: mean of `pi_k / N` over batch `j`.
    pub batch_means: Option<Vec<Vec<f64>>>,
    pub tagged: Option<TaggedIntensity>,
    pub arrivals: u64,
    pub departures: u64,
    pub final_state: Configuration,
}

/// Uniform `D`-subset of `0..n`.
pub fn sample_zeta<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Vec<usize> {
    rand::seq::index::sample(rng, n, d).into_vec()
}

/// Index in `zeta` with the fewest jobs, ties split uniformly.
pub fn route_shortest<R: Rng + ?Sized>(zeta: &[usize], len: impl Fn(usize) -> usize, rng: &mut R) -> usize {
    let mut best = zeta[0];
    let mut best_len = len(best);
    let mut ties = 1u32;
    for &i in &zeta[1..] {
        let l = len(i);
        if l < best_len {
            best = i;
            best_len = l;
            ties = 1;
        } else if l == best_len {
            ties += 1;
            // reservoir choice keeps each tied server with probability 1/ties
            if rng.gen_range(0..ties) == 0 {
                best = i;
            }
        }
    }
    best
}

/// JSQ choice among the sampled servers of a configuration.
pub fn jsq_route<R: Rng + ?Sized>(config: &Configuration, zeta: &[usize], rng: &mut R) -> usize {
    route_shortest(zeta, |i| config.servers()[i].len(), rng)
}

/// Stored tail counts of a trajectory at a sampled time.
pub fn snapshot(traj: &Trajectory, t: f64) -> Result<&TailCounts> {
    traj.snapshot(t)
}

fn check_times(horizon: f64, sample_times: &[f64]) -> Result<()> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::param("horizon", format!("must be finite and positive, got {horizon}")));
    }
    if sample_times.iter().any(|t| !t.is_finite() || *t < 0.0 || *t > horizon) {
        return Err(Error::param("sample_times", "sample times must be finite and lie in [0, horizon]"));
    }
    if sample_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("sample_times", "sample times must be strictly increasing"));
    }
    Ok(())
}

/// Simulate one trajectory over `[0, horizon]`.
pub fn run<R: Rng + ?Sized>(
    params: &SystemParams,
    init: &Configuration,
    horizon: f64,
    sample_times: &[f64],
    options: &RunOptions,
    rng: &mut R,
) -> Result<RunOutput> {
    params.validate()?;
    check_times(horizon, sample_times)?;
    if init.n() != params.n {
        return Err(Error::SizeMismatch { expected: params.n, found: init.n() });
    }
    if let Some(w) = options.watch.iter().find(|&&w| w >= params.n) {
        return Err(Error::param("watch", format!("server {w} out of range")));
    }
    if let Some(plan) = &options.batches {
        if plan.n_batches == 0 || !(plan.batch_len > 0.0) {
            return Err(Error::param("batches", "need at least one batch of positive length"));
        }
        if plan.end() > horizon * (1.0 + 1e-12) {
            return Err(Error::HorizonTooShort { needed: plan.end(), got: horizon });
        }
    }

    let mut sys = QueueSystem::new(init.clone(), params.discipline);
    let inter_arrival = Exp::new(params.arrival_rate()).map_err(|e| Error::param("lambda", e.to_string()))?;
    let mut log = EventLog { horizon, n: params.n, d: params.d, ..EventLog::default() };
    let mut trajectory = Trajectory::default();
    let mut batches = options.batches.map(BatchState::new);
    let mut tagged = options.tagged_intensity.then(TaggedTracker::default);
    if let Some(tr) = tagged.as_mut() {
        tr.refresh(params, &sys);
    }

    let mut samples = sample_times.iter().copied().peekable();
    let mut next_arrival = inter_arrival.sample(rng);
    let (mut arrivals, mut departures) = (0u64, 0u64);

    loop {
        let next_departure = sys.next_departure().unwrap_or(f64::INFINITY);
        let event_time = next_arrival.min(next_departure);

        // checkpoints strictly before the next event see the current state
        loop {
            let sample = samples.peek().copied().unwrap_or(f64::INFINITY);
            let boundary = batches.as_ref().map_or(f64::INFINITY, BatchState::next_boundary);
            let checkpoint = sample.min(boundary);
            if !(checkpoint < event_time) || checkpoint > horizon {
                break;
            }
            if boundary <= sample {
                batches.as_mut().unwrap().cross(boundary, sys.tail());
            } else {
                samples.next();
                trajectory.times.push(sample);
                trajectory.snapshots.push(sys.tail_counts());
                trajectory.watched.push(options.watch.iter().map(|&w| sys.len(w)).collect());
            }
        }
        if event_time > horizon {
            break;
        }
        if let Some(b) = batches.as_mut() {
            b.advance(event_time, sys.tail());
        }
        if let Some(tr) = tagged.as_mut() {
            tr.advance(event_time);
        }

        if next_departure <= next_arrival {
            let (time, server) = sys.depart().expect("scheduled departure");
            departures += 1;
            if options.log == LogLevel::Full {
                log.departures.push(DepartureEvent { time, server });
            }
        } else {
            let zeta = sample_zeta(params.n, params.d, rng);
            let target = route_shortest(&zeta, |i| sys.len(i), rng);
            if let Some(tr) = tagged.as_mut() {
                if target == 0 {
                    tr.count(sys.len(0));
                }
            }
            let work = params.service.sample(rng);
            sys.arrive(next_arrival, target, work);
            arrivals += 1;
            if options.log != LogLevel::Off {
                log.arrivals.push(ArrivalEvent { time: next_arrival, zeta, routed_to: target });
            }
            next_arrival += inter_arrival.sample(rng);
        }
        if let Some(tr) = tagged.as_mut() {
            tr.refresh(params, &sys);
        }
    }
    // remaining checkpoints up to the horizon
    for sample in samples {
        if let Some(b) = batches.as_mut() {
            b.flush_until(sample, sys.tail());
        }
        trajectory.times.push(sample);
        trajectory.snapshots.push(sys.tail_counts());
        trajectory.watched.push(options.watch.iter().map(|&w| sys.len(w)).collect());
    }
    if let Some(b) = batches.as_mut() {
        b.flush_until(horizon, sys.tail());
    }
    if let Some(tr) = tagged.as_mut() {
        tr.advance(horizon);
    }

    Ok(RunOutput {
        trajectory,
        log,
        batch_means: batches.map(BatchState::finish),
        tagged: tagged.map(|t| t.data),
        arrivals,
        departures,
        final_state: sys.configuration(horizon),
    })
}

/// Run `reps` independent replications in parallel; replication `r` draws
/// from `root.child("rep", r)`, so results do not depend on scheduling.
pub fn replicate<T, F>(reps: usize, root: &RngStream, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &RngStream) -> T + Sync + Send,
{
    (0..reps).into_par_iter().map(|r| f(r, &root.child("rep", r as u64))).collect()
}

struct BatchState {
    plan: BatchPlan,
    next: usize,
    mark: f64,
    integral: Vec<f64>,
    means: Vec<Vec<f64>>,
}

impl BatchState {
    fn new(plan: BatchPlan) -> Self {
        Self { plan, next: 0, mark: 0.0, integral: vec![0.0; plan.k_max + 1], means: Vec::with_capacity(plan.n_batches) }
    }

    fn next_boundary(&self) -> f64 {
        if self.next <= self.plan.n_batches {
            self.plan.boundary(self.next)
        } else {
            f64::INFINITY
        }
    }

    /// Integrate the current tail from the last mark to `t`.
    fn advance(&mut self, t: f64, tail: &[u32]) {
        if self.next > 0 && self.next <= self.plan.n_batches {
            let dt = t - self.mark;
            for (k, acc) in self.integral.iter_mut().enumerate() {
                *acc += tail.get(k).copied().unwrap_or(0) as f64 * dt;
            }
        }
        self.mark = t;
    }

    fn cross(&mut self, boundary: f64, tail: &[u32]) {
        self.advance(boundary, tail);
        if self.next > 0 {
            let n = tail[0] as f64;
            let scale = 1.0 / (self.plan.batch_len * n);
            self.means.push(self.integral.iter().map(|v| v * scale).collect());
            self.integral.iter_mut().for_each(|v| *v = 0.0);
        }
        self.next += 1;
    }

    fn flush_until(&mut self, t: f64, tail: &[u32]) {
        while self.next_boundary() <= t {
            let b = self.next_boundary();
            self.cross(b, tail);
        }
        self.advance(t, tail);
    }

    fn finish(self) -> Vec<Vec<f64>> {
        self.means
    }
}

#[derive(Default)]
struct TaggedTracker {
    data: TaggedIntensity,
    mark: f64,
    level: usize,
    rate: f64,
}

impl TaggedTracker {
    fn advance(&mut self, t: f64) {
        let dt = t - self.mark;
        self.data.grow(self.level);
        self.data.compensator[self.level] += self.rate * dt;
        self.data.occupancy[self.level] += dt;
        self.mark = t;
    }

    fn count(&mut self, level: usize) {
        self.data.grow(level);
        self.data.arrivals[level] += 1;
    }

    fn refresh(&mut self, params: &SystemParams, sys: &QueueSystem) {
        let k = sys.len(0);
        let tail = sys.tail();
        let pi_k = tail[k] as usize;
        let pi_k1 = tail.get(k + 1).copied().unwrap_or(0) as usize;
        let input = RateInputs { n: params.n, d: params.d, lambda: params.lambda, pi_k, pi_k1 };
        self.level = k;
        self.rate = lambda_rate_closed(&input);
    }
}

#[cfg(test)]
mod tests;
