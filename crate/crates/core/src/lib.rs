//! Analytic toolkit and discrete-event laboratory for power-of-D (JSQ(D))
//! load balancing over `N` parallel single-server queues.
//!
//! Server indices are zero-based throughout: "server 1" of the usual
//! notation is index `0`, and the extra server of the `N + 1` system is
//! index `N`.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`], [`service`], [`discipline`], [`rng`]: state, service-time
//!   laws, scheduling and seeded randomness.
//! * [`rates`]: closed forms for the effective arrival rate to a tagged
//!   server, the correlation and clan bounds, and the mean-field tail.
//! * [`sim`]: the event-driven `N`-server simulator.
//! * [`ancestry`]: clan-of-ancestors sets built from arrival logs.
//! * [`cavity`]: the single-queue cavity process, the colored coupling of
//!   the `N` and `N + 1` systems, and total-variation distances.
//! * [`estimators`]: cross-replication covariances, batch means and fits.

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::needless_range_loop)]

pub mod ancestry;
pub mod cavity;
pub mod discipline;
pub mod error;
pub mod estimators;
pub mod model;
pub mod rates;
pub mod rng;
pub mod service;
pub mod sim;

pub use discipline::{allocate_service, Discipline};
pub use error::{Error, Result};
pub use model::{empirical_measure, tail_counts, Configuration, EmpiricalMeasure, Job, ServerState, TailCounts};
pub use rng::RngStream;
pub use service::{ServiceDistribution, ServiceSpec};
pub use sim::{SystemParams, Trajectory};

/// Default cap on queue levels tracked by summaries.
pub const DEFAULT_K_MAX: usize = 32;
