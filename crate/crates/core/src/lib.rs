//! Alpha-Wiener bridges: the diffusion
//!
//! ```text
//! dX_t = -alpha / (T - t) * X_t dt + sigma dB_t,   X_0 = 0,   t in [0, T)
//! ```
//!
//! `alpha = 0` is Brownian motion, `alpha = 1` the Brownian bridge. The crate
//! provides closed-form moments ([`model`]), exact and approximate samplers
//! ([`samplers`]), maximum likelihood and quadratic-variation estimators
//! ([`estimators`]), limit-behavior diagnostics ([`path_stats`]) and a
//! seeded, parallel Monte Carlo runner ([`experiments`]).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod model;
pub mod path_stats;
pub mod pathio;
pub mod samplers;

pub use error::{BridgeError, Result};
pub use estimators::EstimateReport;
pub use experiments::{ExperimentSpec, ExperimentSummary};
pub use model::{BridgeParams, SamplePath, TimeGrid};
pub use path_stats::WindowSpec;
pub use samplers::{SamplerKind, SeedSpec};
