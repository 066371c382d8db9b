//! Cross-replication statistics with normal-approximation confidence
//! intervals.
//!
//! Integer observations (queue counts) are accumulated exactly in `i128`,
//! so partial sums merge in any order to the same result.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TailCounts;
use crate::rates::{lambda_rate_closed, RateInputs};

/// Fewest replications accepted by the cross-replication estimators.
pub const MIN_REPLICATIONS: usize = 30;
/// Fewest batches accepted by [`stationary_tail`].
pub const MIN_BATCHES: usize = 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Confidence {
    #[serde(rename = "0.95")]
    P95,
    #[default]
    #[serde(rename = "0.99")]
    P99,
}

impl Confidence {
    pub fn level(self) -> f64 {
        match self {
            Confidence::P95 => 0.95,
            Confidence::P99 => 0.99,
        }
    }

    /// Two-sided standard normal quantile.
    pub fn z(self) -> f64 {
        match self {
            Confidence::P95 => 1.959_963_984_540_054,
            Confidence::P99 => 2.575_829_303_548_901,
        }
    }
}

/// Point estimate with a CI half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub half_width: f64,
    pub level: f64,
    pub replications: usize,
}

impl Estimate {
    pub fn lower(&self) -> f64 {
        self.value - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.value + self.half_width
    }

    /// Whether `value` is within `slack` half-widths of the estimate.
    pub fn covers(&self, value: f64, slack: f64) -> bool {
        (self.value - value).abs() <= slack * self.half_width
    }

    fn abs(mut self) -> Self {
        self.value = self.value.abs();
        self
    }
}

/// One output row of an estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub name: String,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "D")]
    pub d: Option<usize>,
    pub lambda: Option<f64>,
    pub t: Option<f64>,
    pub k: Option<usize>,
    pub l: Option<usize>,
    pub estimate: f64,
    pub ci: f64,
    pub level: f64,
    pub replications: usize,
}

impl EstimateRow {
    pub fn new(name: impl Into<String>, est: &Estimate) -> Self {
        Self {
            name: name.into(),
            n: None,
            d: None,
            lambda: None,
            t: None,
            k: None,
            l: None,
            estimate: est.value,
            ci: est.half_width,
            level: est.level,
            replications: est.replications,
        }
    }

    pub fn system(mut self, n: usize, d: usize, lambda: f64) -> Self {
        self.n = Some(n);
        self.d = Some(d);
        self.lambda = Some(lambda);
        self
    }

    pub fn at(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }

    pub fn levels(mut self, k: usize, l: Option<usize>) -> Self {
        self.k = Some(k);
        self.l = l;
        self
    }
}

/// Exact power sums `s[i][j] = sum x^i y^j` for `i, j <= 2` over integer pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PairMoments {
    count: u64,
    s: [[i128; 3]; 3],
}

impl PairMoments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: i64, y: i64) {
        let (x, y) = (x as i128, y as i128);
        let xs = [1, x, x * x];
        let ys = [1, y, y * y];
        for i in 0..3 {
            for j in 0..3 {
                self.s[i][j] += xs[i] * ys[j];
            }
        }
        self.count += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        self.count += other.count;
        for i in 0..3 {
            for j in 0..3 {
                self.s[i][j] += other.s[i][j];
            }
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean_x(&self) -> f64 {
        self.s[1][0] as f64 / self.count as f64
    }

    pub fn mean_y(&self) -> f64 {
        self.s[0][1] as f64 / self.count as f64
    }

    /// Unbiased sample covariance; the numerator is exact.
    pub fn covariance(&self) -> f64 {
        let n = self.count as i128;
        if n < 2 {
            return 0.0;
        }
        let num = n * self.s[1][1] - self.s[1][0] * self.s[0][1];
        num as f64 / (n * (n - 1)) as f64
    }

    /// Sample variance of the products `(x - mean_x)(y - mean_y)`, from
    /// which the covariance CI follows.
    fn product_variance(&self) -> f64 {
        let n = self.count as f64;
        if self.count < 2 {
            return 0.0;
        }
        let (a, b) = (self.mean_x(), self.mean_y());
        let c = [1.0, 2.0, 1.0];
        let pa = [a * a, -a, 1.0];
        let pb = [b * b, -b, 1.0];
        let mut second = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                second += c[i] * c[j] * pa[i] * pb[j] * self.s[i][j] as f64;
            }
        }
        let first = (self.s[1][1] as f64) - n * a * b;
        ((second - first * first / n) / (n - 1.0)).max(0.0)
    }

    pub fn covariance_estimate(&self, conf: Confidence) -> Estimate {
        let n = self.count as f64;
        Estimate {
            value: self.covariance(),
            half_width: conf.z() * (self.product_variance() / n).sqrt(),
            level: conf.level(),
            replications: self.count as usize,
        }
    }
}

/// Mean of real observations with a normal CI.
pub fn mean_ci(values: &[f64], conf: Confidence) -> Estimate {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = if n > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    Estimate { value: mean, half_width: conf.z() * (var / n as f64).sqrt(), level: conf.level(), replications: n }
}

/// Unbiased sample variance of real observations with a normal CI.
pub fn variance_ci(values: &[f64], conf: Confidence) -> Estimate {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    let scale = n as f64 / (n as f64 - 1.0).max(1.0);
    let mut est = mean_ci(&sq, conf);
    est.value *= scale;
    est.half_width *= scale;
    est
}

fn require(reps: usize) -> Result<()> {
    if reps < MIN_REPLICATIONS {
        return Err(Error::InsufficientReplications { needed: MIN_REPLICATIONS, got: reps });
    }
    Ok(())
}

fn moments(snapshots: &[&TailCounts], f: impl Fn(&TailCounts) -> (i64, i64)) -> Result<PairMoments> {
    require(snapshots.len())?;
    let mut acc = PairMoments::new();
    for s in snapshots {
        let (x, y) = f(s);
        acc.push(x, y);
    }
    Ok(acc)
}

/// `|Cov(m_k, m_l)|` across replications, one snapshot per replication.
pub fn cov_mk(snapshots: &[&TailCounts], k: usize, l: usize, conf: Confidence) -> Result<Estimate> {
    let n = snapshots.first().map_or(1, |s| s.n()) as f64;
    let acc = moments(snapshots, |s| (s.exactly(k) as i64, s.exactly(l) as i64))?;
    let mut est = acc.covariance_estimate(conf).abs();
    est.value /= n * n;
    est.half_width /= n * n;
    Ok(est)
}

/// `|Cov(pi_k, pi_l)|` across replications.
pub fn cov_pi(snapshots: &[&TailCounts], k: usize, l: usize, conf: Confidence) -> Result<Estimate> {
    let acc = moments(snapshots, |s| (s.get(k) as i64, s.get(l) as i64))?;
    Ok(acc.covariance_estimate(conf).abs())
}

/// Variance of the effective arrival rate to a server at level `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateVariance {
    /// `lambda^2/(N-1)^2 [Var pi_k + Var pi_{k+1} + 2 Cov(pi_k, pi_{k+1})]`, only for `D = 2`.
    pub formula: Option<Estimate>,
    /// Sample variance of `lambda_rate_closed` evaluated per replication.
    pub direct: Estimate,
}

pub fn var_lambda_rate(snapshots: &[&TailCounts], d: usize, lambda: f64, k: usize, conf: Confidence) -> Result<RateVariance> {
    require(snapshots.len())?;
    let n = snapshots[0].n();
    let mut rates = Vec::with_capacity(snapshots.len());
    for s in snapshots {
        let input = RateInputs::new(n, d, lambda, s.get(k) as usize, s.get(k + 1) as usize);
        rates.push(match input {
            Ok(input) => lambda_rate_closed(&input),
            // no server at level k: the rate at that level is not observed
            Err(_) => 0.0,
        });
    }
    let direct = variance_ci(&rates, conf);
    let formula = (d == 2).then(|| {
        let sums: Vec<f64> = snapshots.iter().map(|s| (s.get(k) + s.get(k + 1)) as f64).collect();
        let scale = (lambda / (n as f64 - 1.0)).powi(2);
        let mut v = variance_ci(&sums, conf);
        v.value *= scale;
        v.half_width *= scale;
        v
    });
    Ok(RateVariance { formula, direct })
}

/// Batch-means estimate of the stationary fraction `P_k` from per-batch
/// time averages (`batches[j][k]`), pooled over replications.
pub fn stationary_tail(batches: &[Vec<f64>], k: usize, conf: Confidence) -> Result<Estimate> {
    if batches.len() < MIN_BATCHES {
        return Err(Error::InsufficientReplications { needed: MIN_BATCHES, got: batches.len() });
    }
    let values: Vec<f64> = batches.iter().map(|b| b.get(k).copied().unwrap_or(0.0)).collect();
    Ok(mean_ci(&values, conf))
}

/// `|P(X(1) >= k, X(2) >= l) - P(X(1) >= k) P(X(2) >= l)|` from the lengths
/// of two distinct servers, one pair per replication.
pub fn pairwise_independence(pairs: &[(usize, usize)], k: usize, l: usize, conf: Confidence) -> Result<Estimate> {
    require(pairs.len())?;
    let mut acc = PairMoments::new();
    for &(a, b) in pairs {
        acc.push((a >= k) as i64, (b >= l) as i64);
    }
    Ok(acc.covariance_estimate(conf).abs())
}

/// Least-squares fit of `ln tv = ln c1 - c2 t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    pub c1: f64,
    pub c2: f64,
    /// Root-mean-square residual of `ln tv`.
    pub residual: f64,
    /// Coefficient of determination of the log-linear fit (1 for an exact fit).
    pub r_squared: f64,
}

impl ExpFit {
    pub fn rate(&self) -> f64 {
        self.c2
    }
}

pub fn fit_exp_decay(series: &[(f64, f64)]) -> Result<ExpFit> {
    if series.len() < 5 {
        return Err(Error::param("series", format!("need at least 5 points, got {}", series.len())));
    }
    if let Some((i, &(_, tv))) = series.iter().enumerate().find(|(_, p)| !(p.1 > 0.0)) {
        return Err(Error::NonPositive { index: i, value: tv });
    }
    let n = series.len() as f64;
    let mt = series.iter().map(|p| p.0).sum::<f64>() / n;
    let my = series.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxx: f64 = series.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = series.iter().map(|p| (p.0 - mt) * (p.1.ln() - my)).sum();
    if sxx == 0.0 {
        return Err(Error::param("series", "time points must not all coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mt;
    let sse: f64 = series.iter().map(|p| (p.1.ln() - intercept - slope * p.0).powi(2)).sum();
    let sst: f64 = series.iter().map(|p| (p.1.ln() - my).powi(2)).sum();
    let r_squared = if sst > 0.0 { 1.0 - sse / sst } else { 1.0 };
    Ok(ExpFit { c1: intercept.exp(), c2: -slope, residual: (sse / n).sqrt(), r_squared })
}
