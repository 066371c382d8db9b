use podd_core::ancestry::{clan_sample, clan_stats, sample_pairs, ClanSample, DEFAULT_PAIRS};
use podd_core::rates::{clan_intersection_bound, clan_size_bound, BoundInputs};
use podd_core::sim::{self, LogLevel, RunOptions};
use podd_core::Result;

use super::{grid, horizon, initial, params, sample_times};
use crate::cells;
use crate::config::ExperimentSpec;
use crate::output::{Outcome, Table};

/// Clan sizes and pairwise intersection frequencies against their bounds.
/// A row is a violation when the whole confidence interval lies above the
/// bound.
pub fn run(spec: &ExperimentSpec) -> Result<Outcome> {
    let conf = spec.confidence();
    let times = sample_times(spec);
    let horizon = horizon(spec)?;
    let mut table = Table::new(
        "clan.csv",
        &[
            "N",
            "D",
            "lambda",
            "t",
            "mean_size",
            "size_ci",
            "size_bound",
            "p_intersect",
            "p_ci",
            "intersect_bound",
            "violation",
        ],
    );
    let mut violations = 0;
    for p in grid(spec) {
        let params = params(spec, p)?;
        let stream = p.stream(spec.seed);
        let pairs = sample_pairs(p.n, spec.pairs.unwrap_or(DEFAULT_PAIRS), &mut stream.child("pairs", 0).rng());
        let options = RunOptions::new().with_log(LogLevel::Arrivals);
        let samples = sim::replicate(spec.replications, &stream, |_, rep| -> Result<ClanSample> {
            let init = initial(spec, &params, rep)?;
            let out = sim::run(&params, &init, horizon, &[], &options, &mut rep.rng())?;
            clan_sample(&out.log, &pairs, &times)
        });
        let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
        for s in clan_stats(&samples, conf)? {
            let b = BoundInputs::new(p.n, p.d, p.lambda, s.t)?;
            let (size_bound, meet_bound) = (clan_size_bound(&b)?, clan_intersection_bound(&b)?);
            let bad = s.mean_size.lower() > size_bound || s.p_intersect.lower() > meet_bound;
            violations += bad as u64;
            table.push(cells![
                p.n,
                p.d,
                p.lambda,
                s.t,
                s.mean_size.value,
                s.mean_size.half_width,
                size_bound,
                s.p_intersect.value,
                s.p_intersect.half_width,
                meet_bound,
                bad,
            ]);
        }
    }
    Ok(Outcome { tables: vec![table], files: Vec::new(), violations })
}
