use podd_core::estimators::{pairwise_independence, stationary_tail, MIN_BATCHES};
use podd_core::rates::asymptotic_tail;
use podd_core::sim::{self, BatchPlan, RunOptions};
use podd_core::Result;

use super::{grid, initial, levels, params};
use crate::cells;
use crate::config::ExperimentSpec;
use crate::output::{Outcome, Table};

/// Measured span after the warm-up when no horizon is given.
pub const DEFAULT_SPAN: f64 = 5000.0;

/// Batch plan: warm-up `10/(1 - lambda)` unless overridden, then `span`
/// split into equal batches (one per warm-up length by default).
pub fn plan(spec: &ExperimentSpec, lambda: f64) -> BatchPlan {
    let warmup = spec.warmup.unwrap_or(10.0 / (1.0 - lambda));
    let span = spec.horizon.unwrap_or(DEFAULT_SPAN);
    let n_batches = spec.batches.unwrap_or(((span / warmup).floor() as usize).max(MIN_BATCHES));
    BatchPlan { warmup, batch_len: span / n_batches as f64, n_batches, k_max: spec.k_max() }
}

struct Rep {
    batches: Vec<Vec<f64>>,
    pair: (usize, usize),
}

/// Stationary tail fractions by batch means, pooled over replications, next
/// to the mean-field fixed point. With an `l` grid and enough replications,
/// also the pairwise dependence of servers 0 and 1 at the horizon.
pub fn run(spec: &ExperimentSpec) -> Result<Outcome> {
    let conf = spec.confidence();
    let ks = levels(&spec.k, &[1, 2, 3, 4]);
    let service = spec.service_distribution().label();
    let discipline = spec.discipline.label();
    let mut tail = Table::new(
        "tail.csv",
        &["N", "D", "lambda", "service", "discipline", "k", "p_hat", "ci", "p_star", "batches"],
    );
    let mut pairwise = Table::new("pairwise.csv", &["N", "D", "lambda", "k", "l", "estimate", "ci"]);
    for p in grid(spec) {
        let params = params(spec, p)?;
        let plan = plan(spec, p.lambda);
        let watch = if p.n >= 2 { vec![0, 1] } else { vec![0] };
        let options = RunOptions::new().with_batches(plan).with_watch(watch);
        let reps = sim::replicate(spec.replications, &p.stream(spec.seed), |_, stream| -> Result<Rep> {
            let init = initial(spec, &params, stream)?;
            let out = sim::run(&params, &init, plan.end(), &[], &options, &mut stream.rng())?;
            let len = |i: usize| out.final_state.servers().get(i).map_or(0, |s| s.len());
            Ok(Rep { batches: out.batch_means.unwrap_or_default(), pair: (len(0), len(1)) })
        });
        let reps = reps.into_iter().collect::<Result<Vec<_>>>()?;
        let batches: Vec<Vec<f64>> = reps.iter().flat_map(|r| r.batches.iter().cloned()).collect();
        for &k in &ks {
            let est = stationary_tail(&batches, k, conf)?;
            tail.push(cells![
                p.n,
                p.d,
                p.lambda,
                service,
                discipline,
                k,
                est.value,
                est.half_width,
                asymptotic_tail(p.d, p.lambda, k),
                batches.len(),
            ]);
        }
        if !spec.l.is_empty() && p.n >= 2 {
            let pairs: Vec<(usize, usize)> = reps.iter().map(|r| r.pair).collect();
            for &k in &ks {
                for &l in &spec.l {
                    let est = pairwise_independence(&pairs, k, l, conf)?;
                    pairwise.push(cells![p.n, p.d, p.lambda, k, l, est.value, est.half_width]);
                }
            }
        }
    }
    let mut tables = vec![tail];
    if !spec.l.is_empty() {
        tables.push(pairwise);
    }
    Ok(Outcome { tables, files: Vec::new(), violations: 0 })
}
