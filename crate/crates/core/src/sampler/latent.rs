use nalgebra::DVector;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::data::Outcome;
use crate::dist::sample_truncated_normal;

/// How the latent step treats the observed category.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatentMode {
    /// Π_i truncated to the interval of its observed outcome.
    #[default]
    Truncated,
    /// Π_i drawn from the untruncated N(mᵢ, σ_y²), ignoring the outcome.
    Untruncated,
}

/// Interval of the latent scale that maps to `y` under cutoffs `delta`.
pub fn category_interval(y: Outcome, delta: (f64, f64)) -> (f64, f64) {
    match y {
        Outcome::Loss => (f64::NEG_INFINITY, delta.0),
        Outcome::Draw => (delta.0, delta.1),
        Outcome::Win => (delta.1, f64::INFINITY),
    }
}

/// Draw every Π_i given its latent mean.
pub fn sample_latent<R: RngCore + ?Sized>(
    mean: &DVector<f64>,
    delta: (f64, f64),
    y: &[Outcome],
    sigma_y2: f64,
    mode: LatentMode,
    rng: &mut R,
) -> DVector<f64> {
    debug_assert_eq!(mean.len(), y.len());
    let sd = sigma_y2.sqrt();
    DVector::from_iterator(
        y.len(),
        mean.iter().zip(y).map(|(&m, &yi)| match mode {
            LatentMode::Truncated => {
                let (lo, hi) = category_interval(yi, delta);
                sample_truncated_normal(m, sd, lo, hi, rng)
            }
            LatentMode::Untruncated => {
                let z: f64 = StandardNormal.sample(rng);
                m + sd * z
            }
        }),
    )
}
