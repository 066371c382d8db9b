//! Closed-form effective arrival rates, correlation bounds and the
//! mean-field tail of power-of-D routing.
//!
//! Conventions: `C(n, r) = 0` whenever `r < 0` or `r > n`; the tagged server
//! is at level `k`, so `pi_k1 < pi_k` always.

mod bounds;
pub mod check;
pub mod exact;

pub use bounds::{
    chaos_bound_cor, chaos_bound_prop1, chaos_bound_prop1_proof, clan_intersection_bound, clan_size_bound,
    tail_cov_bound, u_n, BoundInputs, LargeNBound,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// State seen by a tagged server at level `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateInputs {
    pub n: usize,
    pub d: usize,
    pub lambda: f64,
    /// Servers with at least `k` jobs, the tagged one included.
    pub pi_k: usize,
    /// Servers with at least `k + 1` jobs.
    pub pi_k1: usize,
}

impl RateInputs {
    pub fn new(n: usize, d: usize, lambda: f64, pi_k: usize, pi_k1: usize) -> Result<Self> {
        let inputs = Self { n, d, lambda, pi_k, pi_k1 };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("N", "must be positive"));
        }
        if self.d == 0 || self.d > self.n {
            return Err(Error::param("D", format!("must lie in [1, N = {}], got {}", self.n, self.d)));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::param("lambda", format!("must be positive and finite, got {}", self.lambda)));
        }
        if !(self.pi_k1 < self.pi_k && self.pi_k <= self.n) {
            return Err(Error::param(
                "pi",
                format!("need pi_k1 < pi_k <= N, got pi_k = {}, pi_k1 = {}, N = {}", self.pi_k, self.pi_k1, self.n),
            ));
        }
        Ok(())
    }

    /// Servers sitting exactly at the tagged level.
    pub fn at_level(&self) -> usize {
        self.pi_k - self.pi_k1
    }
}

/// Queue length of the extra server `N + 1` relative to the tagged level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Below,
    Equal,
    Above,
}

impl Relation {
    pub const ALL: [Relation; 3] = [Relation::Below, Relation::Equal, Relation::Above];

    pub fn of(length: usize, k: usize) -> Self {
        match length.cmp(&k) {
            std::cmp::Ordering::Less => Relation::Below,
            std::cmp::Ordering::Equal => Relation::Equal,
            std::cmp::Ordering::Greater => Relation::Above,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Relation::Below => "below",
            Relation::Equal => "equal",
            Relation::Above => "above",
        }
    }

    /// Tail counts of the `N + 1` system given those of the first `N` servers.
    pub fn extend(self, pi_k: usize, pi_k1: usize) -> (usize, usize) {
        match self {
            Relation::Below => (pi_k, pi_k1),
            Relation::Equal => (pi_k + 1, pi_k1),
            Relation::Above => (pi_k + 1, pi_k1 + 1),
        }
    }
}

/// Exact binomial coefficient when it fits in 128 bits.
pub(crate) fn binomial_u128(n: usize, r: usize) -> Option<u128> {
    if r > n {
        return Some(0);
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for j in 1..=r as u128 {
        acc = acc.checked_mul(n as u128 - r as u128 + j)? / j;
    }
    Some(acc)
}

/// `C(n, r)` as a float, zero outside `0 <= r <= n`.
pub fn binomial(n: i64, r: i64) -> f64 {
    if n < 0 || r < 0 || r > n {
        return 0.0;
    }
    match binomial_u128(n as usize, r as usize) {
        Some(c) => c as f64,
        None => {
            let r = r.min(n - r);
            (1..=r).fold(1.0, |acc, j| acc * (n - r + j) as f64 / j as f64)
        }
    }
}

/// `a (a-1) ... (a-len+1)`.
fn falling(a: i128, len: usize) -> i128 {
    (0..len as i128).fold(1, |acc, j| acc * (a - j))
}

/// `S^D(a, b) = sum_{i<D} a(a-1)...(a-i+1) * (b-i-1)...(b-D+1)`.
pub fn s_sum(d: usize, a: usize, b: usize) -> Result<i128> {
    if d < 1 {
        return Err(Error::param("D", "must be at least 1"));
    }
    if a >= b {
        return Err(Error::param("a", format!("need a < b, got a = {a}, b = {b}")));
    }
    let (a, b) = (a as i128, b as i128);
    Ok((0..d)
        .map(|i| {
            let head = falling(a, i);
            let tail: i128 = (i + 1..d).map(|j| b - j as i128).product();
            head * tail
        })
        .sum())
}

/// Defining hypergeometric sum for the arrival rate to the tagged server.
pub fn lambda_rate_hyper(input: &RateInputs) -> f64 {
    let (n, d) = (input.n as i64, input.d as i64);
    let level = input.at_level() as i64;
    let above = input.pi_k1 as i64;
    let sum: f64 = (1..=d)
        .map(|i| binomial(level - 1, i - 1) * binomial(above, d - i) / i as f64)
        .sum();
    input.lambda * n as f64 * sum / binomial(n, d)
}

/// Binomial-difference closed form `lambda N [C(pi_k, D) - C(pi_k1, D)] / ((pi_k - pi_k1) C(N, D))`.
pub fn lambda_rate_closed(input: &RateInputs) -> f64 {
    let diff = match (binomial_u128(input.pi_k, input.d), binomial_u128(input.pi_k1, input.d)) {
        (Some(hi), Some(lo)) => (hi - lo) as f64,
        _ => binomial(input.pi_k as i64, input.d as i64) - binomial(input.pi_k1 as i64, input.d as i64),
    };
    input.lambda * input.n as f64 * diff / (input.at_level() as f64 * binomial(input.n as i64, input.d as i64))
}

/// `(N-D)!/N!` as a product of `D` reciprocals, largest factor first.
pub fn falling_reciprocal(n: usize, d: usize) -> f64 {
    (0..d).fold(1.0, |acc, j| acc / (n - j) as f64)
}

/// Falling-factorial form `lambda N (N-D)!/N! S^D(pi_k1, pi_k)`.
pub fn lambda_rate_falling(input: &RateInputs) -> Result<f64> {
    let s = s_sum(input.d, input.pi_k1, input.pi_k)?;
    Ok(input.lambda * input.n as f64 * falling_reciprocal(input.n, input.d) * s as f64)
}

/// `C_D lambda = lambda D^D / (D-1)!`, a bound on every effective rate.
pub fn c_d_bound(d: usize, lambda: f64) -> f64 {
    let d_f = d as f64;
    lambda * (1..d).fold(d_f, |acc, j| acc * d_f / j as f64)
}

/// `3D - 4`.
pub fn monotone_threshold(d: usize) -> Result<usize> {
    if d < 2 {
        return Err(Error::param("D", "threshold is defined for D >= 2"));
    }
    Ok(3 * d - 4)
}

/// Rate share of the stream common to the `N` and `N + 1` systems.
pub fn yellow_term(input: &RateInputs) -> f64 {
    let (n, d) = (input.n as f64, input.d as f64);
    let common = input.lambda * n - (d - 1.0) * input.lambda;
    common * lambda_rate_closed(input) / (input.lambda * n)
}

/// Blue-stream share when the extra server is above the tagged level.
pub fn b1_term(input: &RateInputs) -> f64 {
    let (n, d) = (input.n as i64, input.d as i64);
    let level = input.at_level() as i64;
    let above = input.pi_k1 as i64;
    let sum: f64 = (1..=d)
        .map(|i| binomial(level - 1, i - 1) * binomial(above, d - 1 - i) / i as f64)
        .sum();
    input.lambda * d as f64 * sum / binomial(n, d - 1)
}

/// Blue-stream share when the extra server sits at the tagged level.
///
/// Normalized by `C(N, D-1)`: the blue stream picks `D - 1` of the first `N`.
pub fn b2_term(input: &RateInputs) -> f64 {
    let (n, d) = (input.n as i64, input.d as i64);
    let level = input.at_level() as i64;
    let above = input.pi_k1 as i64;
    let sum: f64 = (2..=d)
        .map(|i| binomial(level - 1, i - 2) * binomial(above, d - i) / i as f64)
        .sum();
    input.lambda * d as f64 * sum / binomial(n, d - 1)
}

/// Rate to the tagged server in the `N + 1` system, decomposed by stream.
pub fn lambda_rate_np1(input: &RateInputs, extra: Relation) -> f64 {
    let yellow = yellow_term(input);
    match extra {
        Relation::Below => yellow,
        Relation::Equal => yellow + b2_term(input),
        Relation::Above => yellow + b1_term(input),
    }
}

/// Mean-field tail `P_k = lambda^{(D^k - 1)/(D - 1)}` (`lambda^k` for `D = 1`),
/// evaluated through `P_{k+1} = lambda P_k^D`.
pub fn asymptotic_tail(d: usize, lambda: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |p, _| lambda * p.powi(d as i32))
}

/// `P_0..=P_k_max`.
pub fn asymptotic_profile(d: usize, lambda: f64, k_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k_max + 1);
    let mut p: f64 = 1.0;
    for _ in 0..=k_max {
        out.push(p);
        p = lambda * p.powi(d as i32);
    }
    out
}

/// `N -> infinity` limit of the effective rate at tail fractions `p_k >= p_k1`:
/// `lambda sum_{i<D} p_k1^i p_k^{D-1-i}`.
pub fn cavity_rate(d: usize, lambda: f64, p_k: f64, p_k1: f64) -> f64 {
    lambda * (0..d as i32).map(|i| p_k1.powi(i) * p_k.powi(d as i32 - 1 - i)).sum::<f64>()
}
