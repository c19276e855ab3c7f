//! Cutoff step.
//!
//! Under the Dirichlet(α₁, α₂, α₃) construction with base CDF F, the full
//! conditional of δ_j given the other cutoff is an affine Beta on the F
//! scale:
//!
//! ```text
//! F(δ_j) = a + (b - a) ω,   ω ~ Beta(α_j, α_{j+1}),
//! a = F(δ_{j-1}) (0 for j = 1),   b = F(δ_{j+1}) (1 for j = 2),
//! ```
//!
//! truncated to `[F(c_{j,1}), F(c_{j,2})]`, where the bounds are the largest
//! latent value of the category below and the smallest of the category
//! above. F is the CDF of the N(0, τ²) cutoff prior.

use rand::RngCore;

use crate::data::Outcome;
use crate::dist::{normal_cdf, normal_quantile, sample_truncated_beta};

/// Which cutoff is being drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cutoff {
    /// δ₁, between loss and draw.
    Lower,
    /// δ₂, between draw and win.
    Upper,
}

impl Cutoff {
    fn categories(self) -> (Outcome, Outcome) {
        match self {
            Cutoff::Lower => (Outcome::Loss, Outcome::Draw),
            Cutoff::Upper => (Outcome::Draw, Outcome::Win),
        }
    }
}

/// Admissible range `[c_lower, c_upper]` for a cutoff given the latents.
/// Empty categories give infinite bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffBounds {
    pub c_lower: f64,
    pub c_upper: f64,
}

impl CutoffBounds {
    pub const UNBOUNDED: CutoffBounds = CutoffBounds { c_lower: f64::NEG_INFINITY, c_upper: f64::INFINITY };

    pub fn from_latents(which: Cutoff, pi: &[f64], y: &[Outcome]) -> Self {
        let (below, above) = which.categories();
        let mut c_lower = f64::NEG_INFINITY;
        let mut c_upper = f64::INFINITY;
        for (&p, &yi) in pi.iter().zip(y) {
            if yi == below {
                c_lower = c_lower.max(p);
            } else if yi == above {
                c_upper = c_upper.min(p);
            }
        }
        Self { c_lower, c_upper }
    }
}

/// Base CDF F(x) = Φ(x/τ) and its inverse.
#[derive(Clone, Copy, Debug)]
pub struct CutoffScale {
    pub tau: f64,
}

impl CutoffScale {
    pub fn cdf(&self, x: f64) -> f64 {
        normal_cdf(x / self.tau)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        self.tau * normal_quantile(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffDraw {
    pub value: f64,
    /// The truncation window was empty and the previous value was kept.
    pub degenerate: bool,
}

/// Draw δ_j from its full conditional.
pub fn sample_cutoff<R: RngCore + ?Sized>(
    which: Cutoff,
    delta: (f64, f64),
    bounds: CutoffBounds,
    alpha: [f64; 3],
    scale: CutoffScale,
    rng: &mut R,
) -> CutoffDraw {
    let (previous, a, b, shape) = match which {
        Cutoff::Lower => (delta.0, 0.0, scale.cdf(delta.1), (alpha[0], alpha[1])),
        Cutoff::Upper => (delta.1, scale.cdf(delta.0), 1.0, (alpha[1], alpha[2])),
    };
    let keep = CutoffDraw { value: previous, degenerate: true };
    let width = b - a;
    if !(width > 0.0) {
        return keep;
    }
    let lo = ((scale.cdf(bounds.c_lower) - a) / width).max(0.0);
    let hi = ((scale.cdf(bounds.c_upper) - a) / width).min(1.0);
    if !(lo <= hi) {
        return keep;
    }
    let omega = sample_truncated_beta(shape.0, shape.1, lo, hi, rng);
    let mut value = scale.quantile(a + width * omega);
    value = value.max(bounds.c_lower).min(bounds.c_upper);
    let ordered = match which {
        Cutoff::Lower => value < delta.1,
        Cutoff::Upper => value > delta.0,
    };
    if !value.is_finite() || !ordered {
        return keep;
    }
    CutoffDraw { value, degenerate: false }
}
