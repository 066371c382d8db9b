//! Declarative experiment descriptions.

use serde::{Deserialize, Serialize};

use podd_core::cavity::DEFAULT_KNOTS;
use podd_core::estimators::Confidence;
use podd_core::sim::InitProfile;
use podd_core::{Discipline, ServiceDistribution, ServiceSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Bounds,
    Simulate,
    Chaos,
    Clan,
    Tagged,
    Stationary,
    RatesCheck,
    Coupled,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::Bounds,
        Kind::Simulate,
        Kind::Chaos,
        Kind::Clan,
        Kind::Tagged,
        Kind::Stationary,
        Kind::RatesCheck,
        Kind::Coupled,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Bounds => "bounds",
            Kind::Simulate => "simulate",
            Kind::Chaos => "chaos",
            Kind::Clan => "clan",
            Kind::Tagged => "tagged",
            Kind::Stationary => "stationary",
            Kind::RatesCheck => "rates-check",
            Kind::Coupled => "coupled",
        }
    }
}

/// What a `tagged` experiment measures.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaggedMode {
    /// TV between the tagged server of the `N` system and the cavity queue.
    #[default]
    Convergence,
    /// Stationary tail of the cavity queue against the fixed point.
    CavityTail,
    /// TV between the cavity queue at time `t` and its stationary law.
    Decay,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: Kind,
    #[serde(rename = "N", default)]
    pub n: Vec<usize>,
    #[serde(rename = "D", default)]
    pub d: Vec<usize>,
    #[serde(default)]
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub t: Vec<f64>,
    #[serde(default)]
    pub k: Vec<usize>,
    #[serde(default)]
    pub l: Vec<usize>,
    #[serde(default)]
    pub service: ServiceSpec,
    #[serde(default)]
    pub discipline: Discipline,
    #[serde(default)]
    pub init: InitProfile,
    #[serde(default = "default_replications")]
    pub replications: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Run length; for `stationary` the span measured after the warm-up.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batches: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knots: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<Confidence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<TaggedMode>,
    /// Replications of the cavity queue in `tagged` runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity_replications: Option<usize>,
    /// System size of the runs that measure the empirical profile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_n: Option<usize>,
    /// Largest `N` decided in exact arithmetic by `rates-check`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_up_to: Option<usize>,
    /// Also write full event logs (`simulate` only).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub log_events: bool,
}

fn default_replications() -> usize {
    1
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{field}: {reason}")]
    Domain { field: &'static str, reason: String },
}

impl ConfigError {
    fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        ConfigError::Domain { field, reason: reason.into() }
    }
}

/// Parse and validate a JSON experiment description.
pub fn parse_config(text: &str) -> Result<ExperimentSpec, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let spec: ExperimentSpec = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.to_string();
        // missing top-level fields report the root path; name the field instead
        let path = if path == "." { missing_field(&message).unwrap_or(path) } else { path };
        ConfigError::Schema { path, message }
    })?;
    spec.validate()?;
    Ok(spec)
}

fn missing_field(message: &str) -> Option<String> {
    let rest = message.strip_prefix("missing field `")?;
    Some(rest[..rest.find('`')?].to_owned())
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mode = self.mode.unwrap_or_default();
        let cavity_only = self.kind == Kind::Tagged && mode != TaggedMode::Convergence;
        if self.n.is_empty() && !cavity_only {
            return Err(ConfigError::domain("N", "grid must not be empty"));
        }
        if self.d.is_empty() {
            return Err(ConfigError::domain("D", "grid must not be empty"));
        }
        if self.lambda.is_empty() {
            return Err(ConfigError::domain("lambda", "grid must not be empty"));
        }
        if let Some(l) = self.lambda.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
            return Err(ConfigError::domain("lambda", format!("must lie in (0, 1), got {l}")));
        }
        if self.d.contains(&0) {
            return Err(ConfigError::domain("D", "must be at least 1"));
        }
        if self.replications == 0 {
            return Err(ConfigError::domain("replications", "must be at least 1"));
        }
        if let Some(t) = self.t.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(ConfigError::domain("t", format!("must be finite and non-negative, got {t}")));
        }
        if let Some(h) = self.horizon {
            if !(h.is_finite() && h > 0.0) {
                return Err(ConfigError::domain("horizon", format!("must be finite and positive, got {h}")));
            }
        }
        ServiceDistribution::new(self.service.clone()).map_err(|e| ConfigError::domain("service", e.to_string()))?;
        let max_d = *self.d.iter().max().unwrap();
        let min_n = self.n.iter().min().copied().unwrap_or(usize::MAX);
        match self.kind {
            Kind::Bounds | Kind::Chaos | Kind::Clan => {
                if min_n <= max_d {
                    return Err(ConfigError::domain("N", format!("need N > D, got N = {min_n}, D = {max_d}")));
                }
            }
            // pairs with D >= N are skipped
            Kind::RatesCheck => {
                let min_d = *self.d.iter().min().unwrap();
                if self.n.iter().all(|&n| n <= min_d) {
                    return Err(ConfigError::domain("N", "no grid point has N > D"));
                }
            }
            _ => {
                if min_n < max_d {
                    return Err(ConfigError::domain("N", format!("need N >= D, got N = {min_n}, D = {max_d}")));
                }
            }
        }
        let needs_t = match self.kind {
            Kind::Bounds | Kind::Chaos | Kind::Clan | Kind::Simulate => true,
            Kind::Tagged => mode != TaggedMode::CavityTail,
            _ => false,
        };
        if needs_t && self.t.is_empty() {
            return Err(ConfigError::domain("t", "grid must not be empty"));
        }
        if self.kind == Kind::Chaos && self.replications < podd_core::estimators::MIN_REPLICATIONS {
            return Err(ConfigError::domain(
                "replications",
                format!("need at least {} for covariance estimates", podd_core::estimators::MIN_REPLICATIONS),
            ));
        }
        if self.kind == Kind::Stationary && !self.l.is_empty() && self.replications < podd_core::estimators::MIN_REPLICATIONS {
            return Err(ConfigError::domain(
                "replications",
                format!("pairwise estimates need at least {}", podd_core::estimators::MIN_REPLICATIONS),
            ));
        }
        if self.mode.is_some() && self.kind != Kind::Tagged {
            return Err(ConfigError::domain("mode", "only used by tagged experiments"));
        }
        Ok(())
    }

    pub fn service_distribution(&self) -> ServiceDistribution {
        ServiceDistribution::new(self.service.clone()).expect("validated")
    }

    pub fn confidence(&self) -> Confidence {
        self.confidence.unwrap_or_default()
    }

    pub fn knots(&self) -> usize {
        self.knots.unwrap_or(DEFAULT_KNOTS)
    }

    pub fn k_max(&self) -> usize {
        self.k_max.unwrap_or(podd_core::DEFAULT_K_MAX)
    }

    pub fn t_max(&self) -> f64 {
        self.t.iter().copied().fold(0.0, f64::max)
    }

    /// `t` grid in increasing order without duplicates.
    pub fn t_sorted(&self) -> Vec<f64> {
        let mut t = self.t.clone();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }
}
