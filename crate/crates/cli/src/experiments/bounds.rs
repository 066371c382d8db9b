use podd_core::rates::{
    chaos_bound_cor, chaos_bound_prop1, chaos_bound_prop1_proof, clan_intersection_bound, clan_size_bound, tail_cov_bound,
    u_n, BoundInputs,
};
use podd_core::Result;

use super::grid;
use crate::cells;
use crate::config::ExperimentSpec;
use crate::output::{Outcome, Table};

pub const COLUMNS: [&str; 12] = [
    "N",
    "D",
    "lambda",
    "t",
    "u_n",
    "clan_size_bound",
    "clan_intersection_bound",
    "chaos_bound_prop1",
    "chaos_bound_prop1_proof",
    "chaos_bound_cor",
    "cor_valid",
    "tail_cov_bound",
];

/// Tabulate every analytic bound on the grid.
pub fn run(spec: &ExperimentSpec) -> Result<Outcome> {
    let mut table = Table::new("bounds.csv", &COLUMNS);
    for p in grid(spec) {
        for &t in &spec.t_sorted() {
            let b = BoundInputs::new(p.n, p.d, p.lambda, t)?;
            let cor = chaos_bound_cor(&b);
            table.push(cells![
                p.n,
                p.d,
                p.lambda,
                t,
                u_n(&b)?,
                clan_size_bound(&b)?,
                clan_intersection_bound(&b)?,
                chaos_bound_prop1(&b)?,
                chaos_bound_prop1_proof(&b)?,
                cor.value,
                cor.valid,
                tail_cov_bound(&b)?,
            ]);
        }
    }
    Ok(Outcome { tables: vec![table], ..Outcome::default() })
}
