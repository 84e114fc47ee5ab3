//! Learning domain-randomization distributions jointly with a
//! context-conditioned policy.
//!
//! The crate alternates between three phases every epoch: collect experience
//! in environments whose simulator parameters (the *context*) are drawn from
//! a trainable distribution `pφ(z)`, move `φ` toward contexts where the
//! current policy does well while a `KL(p(z) ‖ pφ(z))` penalty keeps it wide,
//! and improve the policy with PPO. The result is a training distribution
//! that concentrates on the region where the task is solvable.
//!
//! - [`distributions`]: discrete and Gaussian `pφ`, the uniform prior, scores
//!   and closed-form KL terms.
//! - [`envs`]: context-parameterized environments, including a point-mass
//!   reacher whose solvable contexts are known in closed form.
//! - [`policy`]: MLP with hand-written backprop, Gaussian policy, PPO, GAE
//!   and the EPOpt worst-percentile filter.
//! - [`train`]: the outer loop and the distribution update.
//! - [`eval`]: test sets, fine-tuning curves, grid sweeps, range reports and
//!   Savitzky-Golay smoothing.
//! - [`config`], [`run`], [`plot`]: run configuration, on-disk artifacts and
//!   SVG figures used by the `lsdr` binary.

pub mod config;
pub mod distributions;
pub mod envs;
pub mod error;
pub mod eval;
pub mod plot;
pub mod policy;
pub mod rng;
pub mod run;
pub mod train;

pub use distributions::{Context, DrDistribution, Family, SupportBox, UniformPrior};
pub use error::{Error, Result};
