use podd_core::rates::check::check_grid_point;
use podd_core::Result;
use rayon::prelude::*;

use crate::cells;
use crate::config::ExperimentSpec;
use crate::output::{Outcome, Table};

/// Default largest `N` decided in exact rational arithmetic.
pub const DEFAULT_EXACT_UP_TO: usize = 20;

/// Exhaustive check of the rate identities, the coupling consistency and the
/// uniform bound. Grid points with `D >= N` are skipped. Monotonicity counts
/// are reported but do not set the exit code.
pub fn run(spec: &ExperimentSpec) -> Result<Outcome> {
    let exact_up_to = spec.exact_up_to.unwrap_or(DEFAULT_EXACT_UP_TO);
    let mut points = Vec::new();
    for &n in &spec.n {
        for &d in &spec.d {
            if d < n {
                for &lambda in &spec.lambda {
                    points.push((n, d, lambda));
                }
            }
        }
    }
    let checks: Vec<_> = points.par_iter().map(|&(n, d, lambda)| check_grid_point(n, d, lambda, exact_up_to)).collect();
    let mut table = Table::new(
        "rates_check.csv",
        &[
            "N",
            "D",
            "lambda",
            "points",
            "exact",
            "identity_violations",
            "max_rel_error",
            "bound_violations",
            "coupling_violations",
            "monotone_claimed",
            "mono_below",
            "mono_equal",
            "mono_above",
        ],
    );
    let mut violations = 0;
    for c in checks {
        let c = c?;
        violations += c.identity_violations + c.bound_violations + c.coupling_violations;
        let [below, equal, above] = c.monotone_violations;
        table.push(cells![
            c.n,
            c.d,
            c.lambda,
            c.points,
            c.exact,
            c.identity_violations,
            c.max_rel_error,
            c.bound_violations,
            c.coupling_violations,
            c.monotone_claimed,
            below,
            equal,
            above,
        ]);
    }
    Ok(Outcome { tables: vec![table], files: Vec::new(), violations })
}
