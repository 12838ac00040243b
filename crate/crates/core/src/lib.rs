//! Bayesian Mendelian randomization with many, possibly pleiotropic,
//! instruments.
//!
//! The crate provides
//!
//! * [`model`]: the Gaussian structural model with the confounder integrated
//!   out, a horseshoe prior on per-instrument direct effects, and the
//!   log-posterior with its analytic gradient on unconstrained coordinates;
//! * [`sampler`]: Hamiltonian Monte Carlo with step-size and diagonal-metric
//!   adaptation, split-R̂ and effective sample size;
//! * [`init`]: MAP and mean-field variational starting points;
//! * [`baselines`]: per-instrument regressions and the weighted median
//!   estimator;
//! * [`simgen`], [`metrics`] and [`study`]: the simulation-study harness.
//!
//! See the guide in `book/` for a narrative walk-through.

pub mod baselines;
pub mod data;
pub mod error;
pub mod fit;
pub mod init;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod simgen;
pub mod stats;
pub mod study;
pub mod target;

pub use data::MRDataset;
pub use error::{Error, Result};
pub use model::{ModelConfig, MrModel, ParameterSet, UnconstrainedState};
pub use sampler::{DrawStore, HmcConfig};
pub use target::LogDensity;

// Compile and run the guide's code listings as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/horseshoe.md")]
    mod horseshoe {}
    #[doc = include_str!("../../../book/src/sampler.md")]
    mod sampler {}
    #[doc = include_str!("../../../book/src/initialization.md")]
    mod initialization {}
    #[doc = include_str!("../../../book/src/fitting.md")]
    mod fitting {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
