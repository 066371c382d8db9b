use podd_core::sim::{self, write_event_log_csv, write_trajectory_csv, LogLevel, RunOptions};
use podd_core::Result;

use super::{grid, horizon, initial, params, sample_times};
use crate::cells;
use crate::config::ExperimentSpec;
use crate::output::{Outcome, Table};

struct Rep {
    arrivals: u64,
    departures: u64,
    jobs: usize,
    trajectory: Vec<u8>,
    events: Option<Vec<u8>>,
}

/// Plain trajectories: one tail-count CSV (and optionally an event log) per
/// replication, plus a summary table.
pub fn run(spec: &ExperimentSpec) -> Result<Outcome> {
    let horizon = horizon(spec)?;
    let times = sample_times(spec);
    let level = if spec.log_events { LogLevel::Full } else { LogLevel::Off };
    let mut summary = Table::new("simulate.csv", &["N", "D", "lambda", "rep", "arrivals", "departures", "jobs_at_horizon"]);
    let mut files = Vec::new();
    for p in grid(spec) {
        let params = params(spec, p)?;
        let reps = sim::replicate(spec.replications, &p.stream(spec.seed), |_, stream| -> Result<Rep> {
            let init = initial(spec, &params, stream)?;
            let out = sim::run(&params, &init, horizon, &times, &RunOptions::new().with_log(level), &mut stream.rng())?;
            let mut trajectory = Vec::new();
            write_trajectory_csv(&out.trajectory, &mut trajectory).expect("in-memory write");
            let events = if spec.log_events {
                let mut buf = Vec::new();
                write_event_log_csv(&out.log, &mut buf).expect("in-memory write");
                Some(buf)
            } else {
                None
            };
            Ok(Rep {
                arrivals: out.arrivals,
                departures: out.departures,
                jobs: out.final_state.total_jobs(),
                trajectory,
                events,
            })
        });
        let dir = format!("runs/N{}_D{}_lambda{}", p.n, p.d, p.lambda);
        for (r, rep) in reps.into_iter().enumerate() {
            let rep = rep?;
            summary.push(cells![p.n, p.d, p.lambda, r, rep.arrivals, rep.departures, rep.jobs]);
            files.push((format!("{dir}/rep{r}_trajectory.csv"), rep.trajectory));
            if let Some(events) = rep.events {
                files.push((format!("{dir}/rep{r}_events.csv"), events));
            }
        }
    }
    Ok(Outcome { tables: vec![summary], files, violations: 0 })
}
