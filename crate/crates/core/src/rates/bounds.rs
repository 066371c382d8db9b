use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundInputs {
    pub n: usize,
    pub d: usize,
    pub lambda: f64,
    pub t: f64,
}

impl BoundInputs {
    pub fn new(n: usize, d: usize, lambda: f64, t: f64) -> Result<Self> {
        let inputs = Self { n, d, lambda, t };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::param("D", "must be at least 1"));
        }
        if self.n <= self.d {
            return Err(Error::param("N", format!("bounds need N > D, got N = {}, D = {}", self.n, self.d)));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::param("lambda", "must be positive and finite"));
        }
        if !(self.t >= 0.0) || !self.t.is_finite() {
            return Err(Error::param("t", "must be finite and non-negative"));
        }
        Ok(())
    }

    /// Exponent `2^{D-1} lambda D N t / (N - D)` of `u_N(t)`.
    fn growth(&self) -> f64 {
        let (n, d) = (self.n as f64, self.d as f64);
        2f64.powi(self.d as i32 - 1) * self.lambda * d * n * self.t / (n - d)
    }

    fn n_over_gap(&self) -> f64 {
        self.n as f64 / (self.n - self.d) as f64
    }
}

/// `u_N(t) = exp(2^{D-1} lambda D N t / (N - D))`.
pub fn u_n(input: &BoundInputs) -> Result<f64> {
    input.validate()?;
    Ok(input.growth().exp())
}

/// `N ln((N + u - 1)/N) - (N - 1)(u - 1)/(N + u - 1)`, evaluated without
/// cancellation at small `t`.
fn bracket(input: &BoundInputs) -> f64 {
    let n = input.n as f64;
    let um1 = input.growth().exp_m1();
    if !um1.is_finite() {
        // u overflowed: the logarithm is ~ growth, the second term ~ N - 1.
        return n * (input.growth() - n.ln()) - (n - 1.0);
    }
    n * (um1 / n).ln_1p() - (n - 1.0) * um1 / (n + um1)
}

/// Logistic bound `N u / (N + u - 1)` on the expected clan size.
pub fn clan_size_bound(input: &BoundInputs) -> Result<f64> {
    input.validate()?;
    let n = input.n as f64;
    let um1 = input.growth().exp_m1();
    if !um1.is_finite() {
        return Ok(n);
    }
    // written so that rounding keeps it monotone in t
    Ok(n - n * (n - 1.0) / (n + um1))
}

/// Bound on the probability that the clans of two distinct servers meet.
pub fn clan_intersection_bound(input: &BoundInputs) -> Result<f64> {
    input.validate()?;
    Ok(1.5f64.powi(input.d as i32) * input.n_over_gap() * bracket(input))
}

/// Covariance bound for two entries of the empirical measure, with the
/// `N/(N - D)` prefactor of the statement.
pub fn chaos_bound_prop1(input: &BoundInputs) -> Result<f64> {
    Ok(1.0 / input.n as f64 + 2.0 * clan_intersection_bound(input)?)
}

/// Same bound with the `(N - 1)/(N - D)` prefactor reached at the end of the
/// pairwise summation; slightly tighter.
pub fn chaos_bound_prop1_proof(input: &BoundInputs) -> Result<f64> {
    input.validate()?;
    let (n, d) = (input.n as f64, input.d as f64);
    Ok(1.0 / n + 2.0 * 1.5f64.powi(input.d as i32) * (n - 1.0) / (n - d) * bracket(input))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LargeNBound {
    pub value: f64,
    /// False when `N < 10 D`: the large-`N` regime the bound assumes is not
    /// quantified, so small systems are flagged rather than trusted.
    pub valid: bool,
}

/// `(1 + (3/2)^D (e^{2^D lambda D t} - 1)) / N` for `D` fixed.
pub fn chaos_bound_cor(input: &BoundInputs) -> LargeNBound {
    let d = input.d as f64;
    let growth = 2f64.powi(input.d as i32) * input.lambda * d * input.t;
    let value = (1.0 + 1.5f64.powi(input.d as i32) * growth.exp_m1()) / input.n as f64;
    LargeNBound { value, valid: input.n >= 10 * input.d }
}

/// Covariance bound for the non-normalized tail counts.
pub fn tail_cov_bound(input: &BoundInputs) -> Result<f64> {
    input.validate()?;
    let (n, d) = (input.n as f64, input.d as f64);
    Ok(2.0 * 1.5f64.powi(input.d as i32) * n * n * (n - 1.0) / (n - d) * bracket(input) + n)
}
