use podd_core::cavity::{run_coupled, CoupledRun, StreamMask};
use podd_core::estimators::mean_ci;
use podd_core::sim::{self, InitProfile};
use podd_core::Result;

use super::{grid, horizon, initial, params, sample_times};
use crate::cells;
use crate::config::ExperimentSpec;
use crate::output::{Outcome, Table};

const TERMS: [&str; 3] = ["blue_below", "blue_equal", "blue_above"];

/// Colored coupling of the `N` and `N + 1` systems: stream counts against
/// their rates, and arrivals to the tagged server against the compensator of
/// each rate term. The extra server starts at the common level of an
/// `all_at` start and empty otherwise.
pub fn run(spec: &ExperimentSpec) -> Result<Outcome> {
    let conf = spec.confidence();
    let horizon = horizon(spec)?;
    let times: Vec<f64> = sample_times(spec).into_iter().filter(|t| *t <= horizon).collect();
    let extra = match spec.init {
        InitProfile::AllAt { level } => level,
        _ => 0,
    };
    let mut streams = Table::new("coupled_streams.csv", &["N", "D", "lambda", "horizon", "stream", "mean_count", "ci", "expected"]);
    let mut terms = Table::new("coupled_rates.csv", &["N", "D", "lambda", "term", "count", "compensator", "z"]);
    for p in grid(spec) {
        let params = params(spec, p)?;
        let runs = sim::replicate(spec.replications, &p.stream(spec.seed), |_, stream| -> Result<CoupledRun> {
            let init = initial(spec, &params, stream)?;
            run_coupled(&params, &init, extra, horizon, &times, StreamMask::default(), &mut stream.rng())
        });
        let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
        let (n, d) = (p.n as f64, p.d as f64);
        let rates = [
            ("yellow", p.lambda * n - (d - 1.0) * p.lambda),
            ("red", (d - 1.0) * p.lambda),
            ("blue", p.lambda * d),
        ];
        for (name, rate) in rates {
            let counts: Vec<f64> = runs
                .iter()
                .map(|r| match name {
                    "yellow" => r.counts.yellow,
                    "red" => r.counts.red,
                    _ => r.counts.blue,
                } as f64)
                .collect();
            let est = mean_ci(&counts, conf);
            streams.push(cells![p.n, p.d, p.lambda, horizon, name, est.value, est.half_width, rate * horizon]);
        }
        let shared: Vec<f64> = runs.iter().map(|r| r.shared_service as f64).collect();
        let est = mean_ci(&shared, conf);
        streams.push(cells![p.n, p.d, p.lambda, horizon, "shared_service", est.value, est.half_width, ""]);

        let mut push_term = |term: &str, count: u64, comp: f64| {
            let z = if comp > 0.0 { (count as f64 - comp) / comp.sqrt() } else { 0.0 };
            terms.push(cells![p.n, p.d, p.lambda, term, count, comp, z]);
        };
        push_term(
            "yellow",
            runs.iter().map(|r| r.decomposition.yellow_count).sum(),
            runs.iter().map(|r| r.decomposition.yellow_compensator).sum(),
        );
        for (j, term) in TERMS.iter().enumerate() {
            push_term(
                term,
                runs.iter().map(|r| r.decomposition.blue_count[j]).sum(),
                runs.iter().map(|r| r.decomposition.blue_compensator[j]).sum(),
            );
        }
    }
    Ok(Outcome { tables: vec![streams, terms], files: Vec::new(), violations: 0 })
}
