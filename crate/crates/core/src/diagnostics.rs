//! Gelman-Rubin convergence diagnostic.
//!
//! For m chains of n draws with chain means θ̄ᵢ and grand mean θ̄:
//!
//! ```text
//! W = Σᵢ Σⱼ (θᵢⱼ - θ̄ᵢ)² / (m (n - 1))
//! B = n Σᵢ (θ̄ᵢ - θ̄)² / (m - 1)
//! R̂ = sqrt(((n - 1) W / n + B (m + 1) / (m n)) / W)
//! ```

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::design::RowLayout;
use crate::error::{Error, Result};
use crate::precise;
use crate::sampler::PosteriorDraws;

pub const RHAT_THRESHOLD: f64 = 1.1;

/// Number of ν coordinates monitored when the coefficient vector is larger.
pub const MONITORED_COEFFICIENTS: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrEntry {
    pub parameter: String,
    #[serde(with = "precise")]
    pub w: f64,
    #[serde(with = "precise")]
    pub b: f64,
    /// `None` when W = 0.
    #[serde(with = "precise")]
    pub rhat: Option<f64>,
    pub converged: bool,
    pub degenerate: bool,
}

/// R̂ for one scalar parameter. Chains must have equal length n ≥ 2 and
/// there must be at least two of them.
pub fn gelman_rubin(parameter: impl Into<String>, chains: &[Vec<f64>]) -> Result<GrEntry> {
    let m = chains.len();
    if m < 2 {
        return Err(Error::InvalidArgument(format!("Gelman-Rubin needs at least 2 chains, got {m}")));
    }
    let n = chains[0].len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("Gelman-Rubin needs at least 2 draws per chain, got {n}")));
    }
    if let Some(c) = chains.iter().find(|c| c.len() != n) {
        return Err(Error::Dimension { expected: n, got: c.len() });
    }
    let (mf, nf) = (m as f64, n as f64);
    let means: Vec<f64> = chains.iter().map(|c| c.iter().sum::<f64>() / nf).collect();
    let grand = means.iter().sum::<f64>() / mf;
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|x| (x - mu).powi(2)).sum::<f64>())
        .sum::<f64>()
        / (mf * (nf - 1.0));
    let b = nf * means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>() / (mf - 1.0);

    let rhat = (w > 0.0).then(|| (((nf - 1.0) * w / nf + b * (mf + 1.0) / (mf * nf)) / w).sqrt());
    let rhat = rhat.filter(|r| r.is_finite());
    Ok(GrEntry {
        parameter: parameter.into(),
        w,
        b,
        rhat,
        converged: rhat.is_some_and(|r| r < RHAT_THRESHOLD),
        degenerate: rhat.is_none(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrReport {
    pub chains: usize,
    pub draws_per_chain: usize,
    #[serde(with = "precise")]
    pub threshold: f64,
    pub monitor_seed: u64,
    pub entries: Vec<GrEntry>,
    pub converged: bool,
}

/// Seed-determined subsample of ν coordinates to monitor, sorted. Every
/// coordinate is returned when `dim ≤ MONITORED_COEFFICIENTS`.
pub fn monitored_coordinates(dim: usize, seed: u64) -> Vec<usize> {
    if dim <= MONITORED_COEFFICIENTS {
        return (0..dim).collect();
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut idx = index::sample(&mut rng, dim, MONITORED_COEFFICIENTS).into_vec();
    idx.sort_unstable();
    idx
}

/// Gelman-Rubin over δ₁, δ₂ and the monitored ν coordinates.
pub fn diagnose(chains: &[PosteriorDraws], layout: &RowLayout, monitor_seed: u64) -> Result<GrReport> {
    let series = |f: &dyn Fn(&crate::sampler::Draw) -> f64| -> Vec<Vec<f64>> {
        chains.iter().map(|c| c.draws.iter().map(f).collect()).collect()
    };
    let mut entries = vec![
        gelman_rubin("delta1", &series(&|d| d.delta.0))?,
        gelman_rubin("delta2", &series(&|d| d.delta.1))?,
    ];
    let coords = monitored_coordinates(layout.dim(), monitor_seed);
    log::debug!("monitoring {} coefficient coordinates: {coords:?}", coords.len());
    for j in coords {
        entries.push(gelman_rubin(layout.label(j).name(), &series(&|d| d.nu[j]))?);
    }
    Ok(GrReport {
        chains: chains.len(),
        draws_per_chain: chains.first().map_or(0, |c| c.draws.len()),
        threshold: RHAT_THRESHOLD,
        monitor_seed,
        converged: entries.iter().all(|e| e.converged),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn hand_computed_case() {
        let e = gelman_rubin("x", &[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(e.w, 1.0);
        assert_eq!(e.b, 0.0);
        assert!((e.rhat.unwrap() - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(e.converged);
    }

    #[test]
    fn constant_chains_are_degenerate() {
        let e = gelman_rubin("x", &[vec![4.0; 5], vec![4.0; 5], vec![4.0; 5]]).unwrap();
        assert!(e.degenerate && !e.converged && e.rhat.is_none());
    }

    #[test]
    fn separated_chains_fail() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mut noise = |c: f64| -> Vec<f64> {
            (0..500).map(|_| c + Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect()
        };
        let e = gelman_rubin("x", &[noise(0.0), noise(100.0)]).unwrap();
        assert!(e.rhat.unwrap() > 10.0 && !e.converged);
    }

    #[test]
    fn affine_invariance() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let chains: Vec<Vec<f64>> =
            (0..3).map(|c| (0..40).map(|_| c as f64 * 0.3 + Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect()).collect();
        let moved: Vec<Vec<f64>> = chains.iter().map(|c| c.iter().map(|x| -3.5 * x + 12.0).collect()).collect();
        let a = gelman_rubin("x", &chains).unwrap().rhat.unwrap();
        let b = gelman_rubin("x", &moved).unwrap().rhat.unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn iid_split_is_near_one() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let chains: Vec<Vec<f64>> =
            (0..4).map(|_| (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
        let r = gelman_rubin("x", &chains).unwrap().rhat.unwrap();
        assert!((r - 1.0).abs() < 0.05, "{r}");
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(gelman_rubin("x", &[vec![1.0, 2.0]]).is_err());
        assert!(gelman_rubin("x", &[vec![1.0], vec![2.0]]).is_err());
        assert!(gelman_rubin("x", &[vec![1.0, 2.0], vec![2.0, 3.0, 4.0]]).is_err());
    }

    #[test]
    fn monitor_subsample() {
        assert_eq!(monitored_coordinates(20, 0), (0..20).collect::<Vec<_>>());
        let a = monitored_coordinates(1442, 9);
        assert_eq!(a.len(), MONITORED_COEFFICIENTS);
        assert!(a.windows(2).all(|w| w[0] < w[1]) && *a.last().unwrap() < 1442);
        assert_eq!(a, monitored_coordinates(1442, 9));
        assert_ne!(a, monitored_coordinates(1442, 10));
    }
}
