use podd_core::estimators::{cov_mk, cov_pi, var_lambda_rate};
use podd_core::rates::{chaos_bound_cor, chaos_bound_prop1, tail_cov_bound, BoundInputs};
use podd_core::sim::{self, RunOptions};
use podd_core::{Result, TailCounts};

use super::{grid, horizon, initial, levels, params, sample_times};
use crate::cells;
use crate::config::ExperimentSpec;
use crate::output::{Outcome, Table};

/// Slack, in CI half-widths, before an estimate counts against a bound.
pub const CI_SLACK: f64 = 3.0;

/// Cross-replication covariances of the empirical measure and the tail
/// counts against the chaos bounds, plus the variance of the effective rate.
pub fn run(spec: &ExperimentSpec) -> Result<Outcome> {
    let conf = spec.confidence();
    let times = sample_times(spec);
    let horizon = horizon(spec)?;
    let ks = levels(&spec.k, &[0, 1, 2]);
    let ls = levels(&spec.l, &ks);
    let k_max = spec.k_max();

    let mut cov = Table::new(
        "chaos.csv",
        &["N", "D", "lambda", "t", "k", "l", "cov_mk", "ci", "chaos_bound_prop1", "chaos_bound_cor", "cor_valid", "violation"],
    );
    let mut tails = Table::new("tail_cov.csv", &["N", "D", "lambda", "t", "k", "l", "cov_pi", "ci", "tail_cov_bound", "violation"]);
    let mut rates =
        Table::new("rate_variance.csv", &["N", "D", "lambda", "t", "k", "direct", "direct_ci", "formula", "formula_ci"]);
    let mut violations = 0;

    for p in grid(spec) {
        let params = params(spec, p)?;
        let runs = sim::replicate(spec.replications, &p.stream(spec.seed), |_, stream| -> Result<Vec<TailCounts>> {
            let init = initial(spec, &params, stream)?;
            let out = sim::run(&params, &init, horizon, &times, &RunOptions::new(), &mut stream.rng())?;
            Ok(out.trajectory.snapshots)
        });
        let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
        for (g, &t) in times.iter().enumerate() {
            let snaps: Vec<&TailCounts> = runs.iter().map(|r| &r[g]).collect();
            let bounds = BoundInputs::new(p.n, p.d, p.lambda, t)?;
            let prop1 = chaos_bound_prop1(&bounds)?;
            let cor = chaos_bound_cor(&bounds);
            let tail_bound = tail_cov_bound(&bounds)?;
            for &k in &ks {
                for &l in &ls {
                    let est = cov_mk(&snaps, k.min(k_max), l.min(k_max), conf)?;
                    let bad = est.value - CI_SLACK * est.half_width > prop1;
                    violations += bad as u64;
                    cov.push(cells![p.n, p.d, p.lambda, t, k, l, est.value, est.half_width, prop1, cor.value, cor.valid, bad]);

                    let est = cov_pi(&snaps, k, l, conf)?;
                    let bad = est.value - CI_SLACK * est.half_width > tail_bound;
                    violations += bad as u64;
                    tails.push(cells![p.n, p.d, p.lambda, t, k, l, est.value, est.half_width, tail_bound, bad]);
                }
                let v = var_lambda_rate(&snaps, p.d, p.lambda, k, conf)?;
                let (f, f_ci) = v.formula.map_or((String::new(), String::new()), |f| (f.value.to_string(), f.half_width.to_string()));
                rates.push(cells![p.n, p.d, p.lambda, t, k, v.direct.value, v.direct.half_width, f, f_ci]);
            }
        }
    }
    Ok(Outcome { tables: vec![cov, tails, rates], files: Vec::new(), violations })
}
