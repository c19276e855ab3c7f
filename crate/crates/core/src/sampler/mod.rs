//! Gibbs sampler for the ordered probit with data augmentation.
//!
//! Each sweep draws the latent scores Π from normals truncated to their
//! observed categories, then ν from its Gaussian conditional, then the two
//! cutoffs from affine-Beta conditionals.

mod chain;
mod coefficients;
mod cutoffs;
mod latent;

pub use chain::{
    gibbs_step, initial_delta, run_chain, run_chains, ChainState, Draw, PosteriorDraws, Problem, SamplerConfig,
};
pub use coefficients::{factorization_count, CoefficientPosterior, DEFAULT_JITTER};
pub use cutoffs::{sample_cutoff, Cutoff, CutoffBounds, CutoffDraw, CutoffScale};
pub use latent::{category_interval, sample_latent, LatentMode};
