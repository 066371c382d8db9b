//! Exhaustive checks of the rate formulas over every admissible
//! `(pi_k, pi_{k+1})` at one `(N, D, lambda)`.

use num_traits::FromPrimitive;
use serde::Serialize;

use super::exact::{self, Rational};
use super::{c_d_bound, lambda_rate_closed, lambda_rate_hyper, lambda_rate_np1, monotone_threshold, RateInputs, Relation};
use crate::error::{Error, Result};

/// Relative tolerance for floating-point agreement.
pub const REL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GridCheck {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "D")]
    pub d: usize,
    pub lambda: f64,
    pub points: u64,
    /// Whether the identity was decided in exact arithmetic.
    pub exact: bool,
    pub identity_violations: u64,
    pub max_rel_error: f64,
    pub bound_violations: u64,
    pub coupling_violations: u64,
    /// Whether `N >= 3D - 4` (and `D >= 2`), so monotonicity is claimed.
    pub monotone_claimed: bool,
    /// Points with `lambda_rate_np1 < lambda_rate_closed`, per relation
    /// below, equal, above.
    pub monotone_violations: [u64; 3],
}

impl GridCheck {
    pub fn monotone_total(&self) -> u64 {
        self.monotone_violations.iter().sum()
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Compare the hypergeometric and closed forms (exactly when `n <= exact_up_to`),
/// bound every rate by `lambda D^D/(D-1)!`, check the `N + 1` decomposition
/// against the closed form at `N + 1` exactly, and count monotonicity
/// failures for each relation of the extra server.
pub fn check_grid_point(n: usize, d: usize, lambda: f64, exact_up_to: usize) -> Result<GridCheck> {
    if d == 0 || d >= n {
        return Err(Error::param("D", format!("need 1 <= D < N, got D = {d}, N = {n}")));
    }
    let lam = Rational::from_f64(lambda).ok_or_else(|| Error::param("lambda", "not finite"))?;
    if !(lambda > 0.0) {
        return Err(Error::param("lambda", "must be positive"));
    }
    let cap = c_d_bound(d, lambda) * (1.0 + REL_TOL);
    let exact_cap = exact::c_d_bound(d, &lam);
    let monotone_claimed = monotone_threshold(d).is_ok_and(|t| n >= t);
    let mut out = GridCheck { n, d, lambda, exact: n <= exact_up_to, monotone_claimed, ..GridCheck::default() };

    for pi_k in 1..=n {
        for pi_k1 in 0..pi_k {
            out.points += 1;
            let input = RateInputs { n, d, lambda, pi_k, pi_k1 };
            let hyper = lambda_rate_hyper(&input);
            let closed = lambda_rate_closed(&input);
            let closed_exact = exact::lambda_rate_closed(n, d, &lam, pi_k, pi_k1);
            let err = if out.exact {
                let hyper_exact = exact::lambda_rate_hyper(n, d, &lam, pi_k, pi_k1);
                let reference = exact::to_f64(&closed_exact);
                if hyper_exact != closed_exact {
                    out.identity_violations += 1;
                }
                rel_err(hyper, reference).max(rel_err(closed, reference))
            } else {
                rel_err(hyper, closed)
            };
            out.max_rel_error = out.max_rel_error.max(err);
            if err > REL_TOL && !(out.exact && err.is_nan()) {
                out.identity_violations += 1;
            }
            if hyper > cap || closed > cap || closed_exact > exact_cap {
                out.bound_violations += 1;
            }

            for (r, rel) in Relation::ALL.into_iter().enumerate() {
                let np1 = exact::lambda_rate_np1(n, d, &lam, pi_k, pi_k1, rel);
                let (a, b) = rel.extend(pi_k, pi_k1);
                if np1 != exact::lambda_rate_closed(n + 1, d, &lam, a, b) {
                    out.coupling_violations += 1;
                }
                if lambda_rate_np1(&input, rel) > cap || np1 > exact_cap {
                    out.bound_violations += 1;
                }
                if monotone_claimed && np1 < closed_exact {
                    out.monotone_violations[r] += 1;
                }
            }
        }
    }
    Ok(out)
}
