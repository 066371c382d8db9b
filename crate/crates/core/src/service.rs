//! Service-time distributions, all rescaled to mean 1.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, LogNormal, Weibull};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// User-facing parameters, as they appear in experiment configs.
///
/// Parameters are taken in their natural form and rescaled to mean 1 when
/// the [`ServiceDistribution`] is built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
#[derive(Default)]
pub enum ServiceSpec {
    #[default]
    Exponential,
    Deterministic,
    Erlang { shape: u32 },
    Hyperexponential { weights: Vec<f64>, rates: Vec<f64> },
    Lognormal { sigma: f64 },
    Weibull { shape: f64 },
}

impl ServiceSpec {
    /// Two-phase hyperexponential with balanced means and squared
    /// coefficient of variation `cv2 > 1`.
    pub fn balanced_hyperexponential(cv2: f64) -> Self {
        let root = ((cv2 - 1.0) / (cv2 + 1.0)).sqrt();
        let p = 0.5 * (1.0 + root);
        ServiceSpec::Hyperexponential { weights: vec![p, 1.0 - p], rates: vec![2.0 * p, 2.0 * (1.0 - p)] }
    }
}


#[derive(Clone, Debug)]
enum Law {
    Exponential,
    Deterministic,
    Erlang { shape: u32, scale: f64, sampler: Gamma<f64> },
    Hyperexponential { cumulative: Vec<f64>, rates: Vec<f64> },
    Lognormal { mu: f64, sigma: f64, sampler: LogNormal<f64> },
    Weibull { shape: f64, scale: f64, sampler: Weibull<f64> },
}

/// A validated service-time law with mean exactly 1 (up to rounding).
#[derive(Clone, Debug)]
pub struct ServiceDistribution {
    spec: ServiceSpec,
    law: Law,
}

impl PartialEq for ServiceDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl TryFrom<ServiceSpec> for ServiceDistribution {
    type Error = Error;

    fn try_from(spec: ServiceSpec) -> Result<Self> {
        let law = match &spec {
            ServiceSpec::Exponential => Law::Exponential,
            ServiceSpec::Deterministic => Law::Deterministic,
            &ServiceSpec::Erlang { shape } => {
                if shape == 0 {
                    return Err(Error::param("shape", "Erlang shape must be positive"));
                }
                let scale = 1.0 / shape as f64;
                let sampler = Gamma::new(shape as f64, scale).map_err(|e| Error::param("shape", e.to_string()))?;
                Law::Erlang { shape, scale, sampler }
            }
            ServiceSpec::Hyperexponential { weights, rates } => {
                if weights.is_empty() || weights.len() != rates.len() {
                    return Err(Error::param("weights", "need one weight per rate"));
                }
                if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
                    return Err(Error::param("weights", "weights must be finite and non-negative"));
                }
                if rates.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
                    return Err(Error::param("rates", "rates must be finite and positive"));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::param("weights", format!("weights sum to {total}, expected 1")));
                }
                let mean: f64 = weights.iter().zip(rates).map(|(w, r)| w / r).sum();
                let mut acc = 0.0;
                let cumulative = weights
                    .iter()
                    .map(|w| {
                        acc += w / total;
                        acc
                    })
                    .collect();
                Law::Hyperexponential { cumulative, rates: rates.iter().map(|r| r * mean).collect() }
            }
            &ServiceSpec::Lognormal { sigma } => {
                if !(sigma > 0.0) || !sigma.is_finite() {
                    return Err(Error::param("sigma", "must be finite and positive"));
                }
                let mu = -0.5 * sigma * sigma;
                let sampler = LogNormal::new(mu, sigma).map_err(|e| Error::param("sigma", e.to_string()))?;
                Law::Lognormal { mu, sigma, sampler }
            }
            &ServiceSpec::Weibull { shape } => {
                if !(shape > 0.0) || !shape.is_finite() {
                    return Err(Error::param("shape", "Weibull shape must be finite and positive"));
                }
                let scale = 1.0 / gamma(1.0 + 1.0 / shape);
                let sampler = Weibull::new(scale, shape).map_err(|e| Error::param("shape", e.to_string()))?;
                Law::Weibull { shape, scale, sampler }
            }
        };
        Ok(Self { spec, law })
    }
}

impl ServiceDistribution {
    pub fn new(spec: ServiceSpec) -> Result<Self> {
        Self::try_from(spec)
    }

    pub fn exponential() -> Self {
        Self { spec: ServiceSpec::Exponential, law: Law::Exponential }
    }

    pub fn deterministic() -> Self {
        Self { spec: ServiceSpec::Deterministic, law: Law::Deterministic }
    }

    pub fn spec(&self) -> &ServiceSpec {
        &self.spec
    }

    /// Short label for CSV output, e.g. `erlang4`.
    pub fn label(&self) -> String {
        match &self.spec {
            ServiceSpec::Exponential => "exponential".into(),
            ServiceSpec::Deterministic => "deterministic".into(),
            ServiceSpec::Erlang { shape } => format!("erlang{shape}"),
            ServiceSpec::Hyperexponential { .. } => format!("hyperexp_cv2_{}", round6(self.scv())),
            ServiceSpec::Lognormal { sigma } => format!("lognormal_{sigma}"),
            ServiceSpec::Weibull { shape } => format!("weibull_{shape}"),
        }
    }

    /// Closed-form mean of the normalized law.
    pub fn mean(&self) -> f64 {
        match &self.law {
            Law::Exponential | Law::Deterministic => 1.0,
            Law::Erlang { shape, scale, .. } => *shape as f64 * scale,
            Law::Hyperexponential { cumulative, rates } => weights(cumulative).zip(rates).map(|(w, r)| w / r).sum(),
            Law::Lognormal { mu, sigma, .. } => (mu + 0.5 * sigma * sigma).exp(),
            Law::Weibull { shape, scale, .. } => scale * gamma(1.0 + 1.0 / shape),
        }
    }

    /// Closed-form variance of the normalized law.
    pub fn variance(&self) -> f64 {
        match &self.law {
            Law::Exponential => 1.0,
            Law::Deterministic => 0.0,
            Law::Erlang { shape, scale, .. } => *shape as f64 * scale * scale,
            Law::Hyperexponential { cumulative, rates } => {
                let second: f64 = weights(cumulative).zip(rates).map(|(w, r)| 2.0 * w / (r * r)).sum();
                second - 1.0
            }
            Law::Lognormal { mu, sigma, .. } => ((sigma * sigma).exp() - 1.0) * (2.0 * mu + sigma * sigma).exp(),
            Law::Weibull { shape, scale, .. } => {
                let g1 = gamma(1.0 + 1.0 / shape);
                scale * scale * (gamma(1.0 + 2.0 / shape) - g1 * g1)
            }
        }
    }

    /// Squared coefficient of variation (equal to the variance at mean 1).
    pub fn scv(&self) -> f64 {
        self.variance() / (self.mean() * self.mean())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x: f64 = match &self.law {
            Law::Exponential => Exp1.sample(rng),
            Law::Deterministic => 1.0,
            Law::Erlang { sampler, .. } => sampler.sample(rng),
            Law::Hyperexponential { cumulative, rates } => {
                let u: f64 = rng.gen();
                let phase = cumulative.iter().position(|&c| u < c).unwrap_or(rates.len() - 1);
                let e: f64 = Exp1.sample(rng);
                e / rates[phase]
            }
            Law::Lognormal { sampler, .. } => sampler.sample(rng),
            Law::Weibull { sampler, .. } => sampler.sample(rng),
        };
        // Residual work must stay strictly positive.
        x.max(f64::MIN_POSITIVE)
    }
}

fn weights(cumulative: &[f64]) -> impl Iterator<Item = f64> + '_ {
    cumulative.iter().scan(0.0, |prev, &c| {
        let w = c - *prev;
        *prev = c;
        Some(w)
    })
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Draw one service requirement.
pub fn sample_service<R: Rng + ?Sized>(dist: &ServiceDistribution, rng: &mut R) -> f64 {
    dist.sample(rng)
}
