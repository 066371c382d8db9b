//! The canned experiment suite, embedded at build time.

use std::path::Path;

use crate::config::{parse_config, ExperimentSpec};
use crate::run::{run_experiment, RunError, RunReport};

macro_rules! canned {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../configs/", $name, ".json")))),*]
    };
}

/// `(name, JSON config)` in execution order.
pub const SUITE: &[(&str, &str)] = canned![
    "rates_identity",
    "rates_monotone",
    "bounds",
    "clan",
    "chaos",
    "stationary_fifo",
    "stationary_ps",
    "stationary_ps_deterministic",
    "stationary_ps_hyperexponential",
    "stationary_fifo_hyperexponential",
    "cavity_tail",
    "tagged_convergence",
    "decay_exponential",
    "decay_erlang",
    "coupled",
    "simulate",
];

pub fn spec(name: &str) -> Option<ExperimentSpec> {
    SUITE.iter().find(|(n, _)| *n == name).map(|(_, text)| parse_config(text).expect("canned config is valid"))
}

/// Run every canned experiment into `out/<name>/`, optionally overriding
/// the seed and keeping only names in `only`.
pub fn run_suite(out: &Path, workers: Option<usize>, seed: Option<u64>, only: &[String]) -> Result<Vec<(String, RunReport)>, RunError> {
    let mut reports = Vec::new();
    for (name, text) in SUITE {
        if !only.is_empty() && !only.iter().any(|o| o == name) {
            continue;
        }
        let mut spec = parse_config(text)?;
        if let Some(seed) = seed {
            spec.seed = seed;
        }
        reports.push((name.to_string(), run_experiment(&spec, &out.join(name), workers)?));
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canned_configs_parse() {
        for (name, text) in SUITE {
            let spec = parse_config(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(self::spec(name), Some(spec));
        }
    }
}
