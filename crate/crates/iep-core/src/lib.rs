//! Statistics built on the integrated empirical distribution function
//!
//! The integrated empirical d.f. of a sample is the running integral of the
//! ordinary empirical d.f. against itself,
//!
//! ```text
//! IF_n(t) = (1/2) (F_n(t)^2 + F_n(t)/n),
//! ```
//!
//! and the integrated empirical process is its centered, root-n rescaled
//! version `a_n(t) = sqrt(n) (IF_n(t) - F(t)^2 / 2)`.  Everything in this
//! crate derives from that object:
//!
//! * [`empirical`] — empirical and integrated empirical d.f.s and processes;
//! * [`gaussian`] — the Gaussian limits (Brownian bridge, Kiefer sheet and
//!   their weighted/tied-down variants) sampled exactly on grids;
//! * [`coupling`] — a dyadic quantile coupling of the uniform empirical
//!   process with a Brownian bridge, and rate experiments built on it;
//! * [`gof`] — one-sample goodness-of-fit statistics (sup and integral type)
//!   with simulated null tables;
//! * [`multisample`] — two-sample and K-sample versions;
//! * [`changepoint`] — a retrospective change-point statistic, weighted
//!   variants, and its Gaussian approximant;
//! * [`estimated`] — the estimated-parameter version of the process for
//!   parametric families with an asymptotically linear estimator;
//! * [`localtime`] — local time and self-intersection local time of the
//!   uniform-increment random walk, and the Brownian analogues.
//!
//! Shared plumbing lives in [`model`] (hypothesized distributions),
//! [`seed`] (deterministic seed derivation for parallel replication),
//! [`report`] (serializable result types) and [`stats`] (small numeric
//! helpers used by tests and experiments).

pub mod changepoint;
pub mod coupling;
pub mod empirical;
pub mod error;
pub mod estimated;
pub mod gaussian;
pub mod gof;
pub mod localtime;
pub mod model;
pub mod multisample;
pub mod report;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
