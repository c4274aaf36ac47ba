//! Information-regularized counterfactual estimation.
//!
//! A static estimator ([`sice`]) and a sequential one ([`dice`]) learn a
//! stochastic representation that predicts outcomes while carrying little
//! information about the treatment, using a variational upper bound on that
//! information instead of an adversarial discriminator. Supporting modules
//! provide the differentiation engine, synthetic benchmarks with known
//! effects, evaluation metrics and an exact checker for the underlying
//! information-theoretic inequalities.

pub mod autodiff;
pub mod cli;
pub mod bounds;
pub mod dice;
pub mod error;
pub mod metrics;
pub mod rng;
pub mod sice;
pub mod synthgen;
pub mod variational;

pub use error::{Error, Result};
