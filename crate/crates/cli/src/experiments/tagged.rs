use podd_core::cavity::{run_cavity, tv_distance, TailProfile};
use podd_core::estimators::{fit_exp_decay, mean_ci};
use podd_core::rates::asymptotic_profile;
use podd_core::sim::{self, RunOptions};
use podd_core::{Result, RngStream, ServiceDistribution, SystemParams};
use rand::Rng;
use rayon::prelude::*;

use super::{grid, homogeneous_level, initial, params, sample_times};
use crate::cells;
use crate::config::{ExperimentSpec, TaggedMode};
use crate::output::{Outcome, Table};

pub const DEFAULT_CAVITY_REPLICATIONS: usize = 100_000;
pub const DEFAULT_PROFILE_N: usize = 10_000;
/// Replications averaged into an empirical profile.
pub const PROFILE_REPLICATIONS: usize = 8;
/// Cavity length for `cavity_tail` when no horizon is given.
pub const DEFAULT_CAVITY_HORIZON: f64 = 1000.0;
const CHUNK: usize = 4096;

pub fn run(spec: &ExperimentSpec) -> Result<Outcome> {
    match spec.mode.unwrap_or_default() {
        TaggedMode::Convergence => convergence(spec),
        TaggedMode::CavityTail => cavity_tail(spec),
        TaggedMode::Decay => decay(spec),
    }
}

/// Laws on `0..=k_max` (last atom lumps the overflow) with the variance of
/// each atom's estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct LawEstimate {
    pub law: Vec<f64>,
    pub var: Vec<f64>,
}

impl LawEstimate {
    fn from_counts(counts: &[u64]) -> Self {
        let total = counts.iter().sum::<u64>() as f64;
        let law: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
        let var = law.iter().map(|p| p * (1.0 - p) / total).collect();
        Self { law, var }
    }

    fn exact(law: Vec<f64>) -> Self {
        let var = vec![0.0; law.len()];
        Self { law, var }
    }
}

/// TV distance with a CI half-width from the per-atom standard errors.
pub fn tv_with_ci(a: &LawEstimate, b: &LawEstimate, z: f64) -> Result<(f64, f64)> {
    let tv = tv_distance(&a.law, &b.law)?;
    let se: f64 = a.var.iter().zip(&b.var).map(|(x, y)| (x + y).sqrt()).sum();
    Ok((tv, 0.5 * z * se))
}

/// Stationary cavity law `P_k - P_{k+1}` on `0..=k_max`.
pub fn stationary_law(d: usize, lambda: f64, k_max: usize) -> Vec<f64> {
    let p = asymptotic_profile(d, lambda, k_max);
    (0..=k_max).map(|k| if k < k_max { p[k] - p[k + 1] } else { p[k] }).collect()
}

pub struct CavitySetup<'a> {
    pub d: usize,
    pub lambda: f64,
    pub profile: &'a TailProfile,
    pub service: &'a ServiceDistribution,
    pub spec: &'a ExperimentSpec,
}

/// Law of the cavity queue at each sample time over `reps` replications;
/// replication `r` draws from `root.child("rep", r)`.
pub fn cavity_laws(setup: &CavitySetup, initial: usize, times: &[f64], reps: usize, root: &RngStream) -> Result<Vec<LawEstimate>> {
    let k_max = setup.spec.k_max();
    let horizon = times.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let chunks: Vec<Result<Vec<Vec<u64>>>> = (0..reps.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut counts = vec![vec![0u64; k_max + 1]; times.len()];
            for r in c * CHUNK..((c + 1) * CHUNK).min(reps) {
                let mut rng = root.child("rep", r as u64).rng();
                let run = run_cavity(
                    setup.d,
                    setup.lambda,
                    setup.profile,
                    setup.service,
                    setup.spec.discipline,
                    initial,
                    horizon,
                    times,
                    &mut rng,
                )?;
                for (g, &len) in run.lengths.iter().enumerate() {
                    counts[g][len.min(k_max)] += 1;
                }
            }
            Ok(counts)
        })
        .collect();
    let mut total = vec![vec![0u64; k_max + 1]; times.len()];
    for chunk in chunks {
        for (acc, c) in total.iter_mut().zip(chunk?) {
            for (a, b) in acc.iter_mut().zip(c) {
                *a += b;
            }
        }
    }
    Ok(total.iter().map(|c| LawEstimate::from_counts(c)).collect())
}

/// Empirical mean-field profile on `knots` equally spaced times in
/// `[0, t_max]`, averaged over runs of a system of `profile_n` servers.
pub fn empirical_profile(spec: &ExperimentSpec, d: usize, lambda: f64, t_max: f64) -> Result<TailProfile> {
    let n = spec.profile_n.unwrap_or(DEFAULT_PROFILE_N);
    let params = SystemParams::new(n, d, lambda, spec.service_distribution(), spec.discipline)?;
    let knots = spec.knots().max(2);
    let times: Vec<f64> = (0..knots).map(|j| t_max * j as f64 / (knots - 1) as f64).collect();
    let root = crate::run::grid_stream(spec.seed, n, d, lambda).child("profile", 0);
    let runs = sim::replicate(PROFILE_REPLICATIONS, &root, |_, stream| -> Result<sim::Trajectory> {
        let init = initial(spec, &params, stream)?;
        Ok(sim::run(&params, &init, t_max, &times, &RunOptions::new(), &mut stream.rng())?.trajectory)
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    TailProfile::from_trajectories(&runs.iter().collect::<Vec<_>>())
}

/// Law of one server of the `N` system, pooled over servers (they are
/// exchangeable) and replications.
fn system_laws(spec: &ExperimentSpec, params: &SystemParams, times: &[f64], root: &RngStream) -> Result<Vec<LawEstimate>> {
    let k_max = spec.k_max();
    let horizon = times.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let runs = sim::replicate(spec.replications, root, |_, stream| -> Result<Vec<Vec<f64>>> {
        let init = initial(spec, params, stream)?;
        let out = sim::run(params, &init, horizon, times, &RunOptions::new(), &mut stream.rng())?;
        Ok(out
            .trajectory
            .snapshots
            .iter()
            .map(|s| {
                let n = s.n() as f64;
                (0..=k_max).map(|k| if k < k_max { s.exactly(k) } else { s.get(k) } as f64 / n).collect()
            })
            .collect())
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let reps = runs.len() as f64;
    Ok((0..times.len())
        .map(|g| {
            let mut law = Vec::with_capacity(k_max + 1);
            let mut var = Vec::with_capacity(k_max + 1);
            for k in 0..=k_max {
                let mean = runs.iter().map(|r| r[g][k]).sum::<f64>() / reps;
                let ss: f64 = runs.iter().map(|r| (r[g][k] - mean).powi(2)).sum();
                law.push(mean);
                var.push(if reps > 1.0 { ss / (reps - 1.0) / reps } else { 0.0 });
            }
            // renormalize away rounding in the per-atom means
            let total: f64 = law.iter().sum();
            law.iter_mut().for_each(|p| *p /= total);
            LawEstimate { law, var }
        })
        .collect())
}

fn experiment_name(spec: &ExperimentSpec, fallback: &str) -> String {
    spec.name.clone().unwrap_or_else(|| fallback.to_owned())
}

/// TV between the law of server 0 of the `N` system and the cavity queue
/// driven by an empirical profile.
fn convergence(spec: &ExperimentSpec) -> Result<Outcome> {
    let z = spec.confidence().z();
    let times = sample_times(spec);
    let t_max = spec.t_max();
    let initial_level = homogeneous_level(&spec.init)?;
    let service = spec.service_distribution();
    let name = experiment_name(spec, "convergence");
    let reps = spec.cavity_replications.unwrap_or(DEFAULT_CAVITY_REPLICATIONS);
    let mut table = Table::new("tagged.csv", &["experiment", "N", "D", "lambda", "t", "tv", "tv_ci"]);

    let mut pairs: Vec<(usize, f64)> = Vec::new();
    for &d in &spec.d {
        for &lambda in &spec.lambda {
            pairs.push((d, lambda));
        }
    }
    let mut cavities = Vec::new();
    for &(d, lambda) in &pairs {
        let profile = empirical_profile(spec, d, lambda, t_max)?;
        let setup = CavitySetup { d, lambda, profile: &profile, service: &service, spec };
        let root = RngStream::new(spec.seed).child("D", d as u64).child("lambda", lambda.to_bits()).child("cavity", 0);
        cavities.push(cavity_laws(&setup, initial_level, &times, reps, &root)?);
    }
    for p in grid(spec) {
        let params = params(spec, p)?;
        let laws = system_laws(spec, &params, &times, &p.stream(spec.seed))?;
        let j = pairs.iter().position(|&(d, l)| d == p.d && l == p.lambda).expect("pair listed");
        for (g, &t) in times.iter().enumerate() {
            let (tv, ci) = tv_with_ci(&laws[g], &cavities[j][g], z)?;
            table.push(cells![name, p.n, p.d, p.lambda, t, tv, ci]);
        }
    }
    Ok(Outcome { tables: vec![table], files: Vec::new(), violations: 0 })
}

/// Draw a level from the law with tail `P_k`.
fn draw_stationary<R: Rng + ?Sized>(tail: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    tail.iter().skip(1).take_while(|&&p| u < p).count()
}

/// Time-average tail of the cavity queue under the fixed-point profile,
/// started from its stationary law, against `P_k`.
fn cavity_tail(spec: &ExperimentSpec) -> Result<Outcome> {
    let conf = spec.confidence();
    let horizon = spec.horizon.unwrap_or(DEFAULT_CAVITY_HORIZON);
    let service = spec.service_distribution();
    let ks = super::levels(&spec.k, &[1, 2, 3, 4]);
    let mut table = Table::new("cavity_tail.csv", &["D", "lambda", "service", "discipline", "k", "p_hat", "ci", "p_star"]);
    for &d in &spec.d {
        for &lambda in &spec.lambda {
            let profile = TailProfile::stationary(d, lambda);
            let tail = asymptotic_profile(d, lambda, 64);
            let root = RngStream::new(spec.seed).child("D", d as u64).child("lambda", lambda.to_bits()).child("cavity", 0);
            let runs = sim::replicate(spec.replications, &root, |_, stream| -> Result<Vec<f64>> {
                let mut rng = stream.rng();
                let start = draw_stationary(&tail, &mut rng);
                let run = run_cavity(d, lambda, &profile, &service, spec.discipline, start, horizon, &[], &mut rng)?;
                // fraction of time at or above each level
                let mut above: Vec<f64> = run.occupancy.iter().map(|o| o / horizon).collect();
                for k in (0..above.len().saturating_sub(1)).rev() {
                    above[k] += above[k + 1];
                }
                Ok(above)
            });
            let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
            for &k in &ks {
                let values: Vec<f64> = runs.iter().map(|r| r.get(k).copied().unwrap_or(0.0)).collect();
                let est = mean_ci(&values, conf);
                table.push(cells![d, lambda, service.label(), spec.discipline.label(), k, est.value, est.half_width, tail[k]]);
            }
        }
    }
    Ok(Outcome { tables: vec![table], files: Vec::new(), violations: 0 })
}

/// TV between the cavity queue at time `t` and its stationary law, with a
/// log-linear fit of the decay.
fn decay(spec: &ExperimentSpec) -> Result<Outcome> {
    let z = spec.confidence().z();
    let times = sample_times(spec);
    let initial_level = homogeneous_level(&spec.init)?;
    let service = spec.service_distribution();
    let reps = spec.cavity_replications.unwrap_or(DEFAULT_CAVITY_REPLICATIONS);
    let (label, discipline) = (service.label(), spec.discipline.label());
    let mut series = Table::new("decay.csv", &["D", "lambda", "service", "discipline", "t", "tv", "tv_ci"]);
    let mut fits = Table::new(
        "decay_fit.csv",
        &["D", "lambda", "service", "discipline", "c1", "rate", "residual", "r_squared", "points"],
    );
    for &d in &spec.d {
        for &lambda in &spec.lambda {
            let profile = TailProfile::stationary(d, lambda);
            let setup = CavitySetup { d, lambda, profile: &profile, service: &service, spec };
            let root = RngStream::new(spec.seed).child("D", d as u64).child("lambda", lambda.to_bits()).child("cavity", 0);
            let laws = cavity_laws(&setup, initial_level, &times, reps, &root)?;
            let reference = LawEstimate::exact(stationary_law(d, lambda, spec.k_max()));
            let mut points = Vec::new();
            for (g, &t) in times.iter().enumerate() {
                let (tv, ci) = tv_with_ci(&laws[g], &reference, z)?;
                series.push(cells![d, lambda, label, discipline, t, tv, ci]);
                if tv > 0.0 {
                    points.push((t, tv));
                }
            }
            match fit_exp_decay(&points) {
                Ok(fit) => fits.push(cells![d, lambda, label, discipline, fit.c1, fit.rate(), fit.residual, fit.r_squared, points.len()]),
                Err(_) => fits.push(cells![d, lambda, label, discipline, "", "", "", "", points.len()]),
            }
        }
    }
    Ok(Outcome { tables: vec![series, fits], files: Vec::new(), violations: 0 })
}
