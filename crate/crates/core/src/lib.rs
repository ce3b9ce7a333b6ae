//! Bayesian variable selection for censored time-to-event outcomes.
//!
//! The model places a sum-of-single-effects prior on the coefficients of a
//! Cox proportional-hazards model and replaces the likelihood with the Cox
//! partial likelihood. Fitting proceeds by generalised iterative Bayesian
//! stepwise selection: each single effect is a Bayesian single-effect
//! regression whose per-variable Bayes factors come from a Laplace
//! approximation around the univariate maximum partial-likelihood estimate.
//!
//! Module map:
//!
//! - [`cox`]: partial likelihood, derivatives, univariate and multivariate Newton fits
//! - [`bayes_factor`] and [`quadrature`]: Laplace, asymptotic and Gauss–Hermite Bayes factors
//! - [`ser`]: single-effect regression and the prior-variance EM step
//! - [`gibss`] and [`credible`]: the outer fitting loop, PIPs and credible sets
//! - [`simulate`]: genotype and censored outcome generator
//! - [`metrics`]: calibration, power/FDR and credible-set summaries
//!
//! Per-column univariate fits and per-replicate simulation run on rayon when
//! the `parallel` feature is enabled (the default); see [`Execution`].

pub mod bayes_factor;
pub mod cox;
pub mod credible;
pub mod data;
pub mod error;
pub mod exec;
pub mod gibss;
pub mod metrics;
pub mod quadrature;
pub mod ser;
pub mod simulate;

pub use data::{DesignMatrix, LinearPredictor, SurvivalOutcome};
pub use error::{Error, Result};
pub use exec::Execution;
pub use gibss::{fit_susie, SusieFit, SusieOptions};
pub use ser::{fit_ser, PriorWeights, SingleEffectPosterior};
