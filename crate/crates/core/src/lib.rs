//! Bayesian ordered probit for in-play match outcome forecasting.
//!
//! A match at minute `t` is described by two standardized team strengths and
//! per-minute counts of each event kind for both sides. Outcomes
//! (loss, draw, win from the home side's view) are modeled as a latent
//! Gaussian score crossing two ordered cutoffs. One model is fitted per cut
//! minute with a Gibbs sampler and queried through its closed-form
//! posterior predictive.

// Negated comparisons deliberately reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod data;
pub mod design;
pub mod diagnostics;
pub mod dist;
pub mod error;
pub mod evaluation;
pub mod fit;
pub mod forecast;
pub mod linalg;
pub mod precise;
pub mod prior;
pub mod sampler;
pub mod seed;

pub use error::{Error, Result};
