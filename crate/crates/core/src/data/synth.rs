use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, EventKind, MatchRecord, Outcome, Side};
use crate::design::{DesignMatrix, RowLabel, RowLayout, Standardizer};
use crate::error::{Error, Result};

/// Per-minute event rates (both sides) roughly matching top-flight
/// per-match averages, in [`EventKind::ALL`] order.
pub const DEFAULT_EVENT_RATES: [f64; 8] = [0.015, 0.066, 0.066, 0.0009, 0.018, 0.10, 0.16, 0.12];

/// Generating parameters for a synthetic dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    /// Coefficients in the layout of `RowLayout::for_matches(kinds, t_max)`.
    pub nu: Vec<f64>,
    pub delta: [f64; 2],
    pub n: usize,
    pub kinds: usize,
    pub t_max: usize,
    /// Per-minute Poisson rate for each of the first `kinds` event kinds.
    pub event_rates: Vec<f64>,
    pub strength_mean: f64,
    pub strength_sd: f64,
    pub sigma_y: f64,
    pub seed: u64,
}

/// Everything needed to regenerate and to score recovery of a synthetic
/// dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    #[serde(flatten)]
    pub config: SynthesisConfig,
    /// Strength transform under which `nu` generated the latent values.
    pub standardizer: Standardizer,
}

impl SynthesisConfig {
    /// A configuration with structured coefficients: strengths ±0.8, goals
    /// ±1.0 at every minute, and small alternating effects for other kinds.
    pub fn structured(n: usize, kinds: usize, t_max: usize, seed: u64) -> Result<Self> {
        let layout = RowLayout::for_matches(kinds, t_max)?;
        let nu = structured_coefficients(&layout);
        Ok(Self {
            nu,
            delta: [-0.5, 0.5],
            n,
            kinds,
            t_max,
            event_rates: DEFAULT_EVENT_RATES[..kinds.min(8)].to_vec(),
            strength_mean: 76.0,
            strength_sd: 3.8,
            sigma_y: 1.0,
            seed,
        })
    }

    pub fn layout(&self) -> Result<RowLayout> {
        RowLayout::for_matches(self.kinds, self.t_max)
    }
}

pub fn structured_coefficients(layout: &RowLayout) -> Vec<f64> {
    (0..layout.dim())
        .map(|r| match layout.label(r) {
            RowLabel::Static(0) => 0.8,
            RowLabel::Static(_) => -0.8,
            RowLabel::Event { kind, side, .. } => {
                let sign = if side == Side::Home { 1.0 } else { -1.0 };
                if kind == 0 {
                    sign
                } else {
                    sign * if kind % 2 == 0 { 0.1 } else { -0.1 }
                }
            }
        })
        .collect()
}

/// Draw a dataset from the ordered probit model.
///
/// Strengths are N(mean, sd²), counts independent Poisson per minute for
/// minutes 1..=t_max (zero afterwards), and Π = Mᵀν + ε with M built on the
/// dataset's own z-scored strengths.
pub fn synthesize_dataset(cfg: &SynthesisConfig) -> Result<(Dataset, GroundTruth)> {
    let [d1, d2] = cfg.delta;
    if !(d1 < d2) {
        return Err(Error::InvalidArgument(format!("cutoffs must increase, got ({d1}, {d2})")));
    }
    if cfg.kinds == 0 || cfg.kinds > EventKind::COUNT {
        return Err(Error::InvalidArgument(format!("kinds {} outside 1..=8", cfg.kinds)));
    }
    let layout = cfg.layout()?;
    if cfg.nu.len() != layout.dim() {
        return Err(Error::Dimension { expected: layout.dim(), got: cfg.nu.len() });
    }
    if cfg.event_rates.len() != cfg.kinds || cfg.event_rates.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::InvalidArgument("need one non-negative event rate per kind".into()));
    }
    if cfg.n == 0 || !(cfg.sigma_y > 0.0) || !(cfg.strength_sd >= 0.0) {
        return Err(Error::InvalidArgument("n, sigma_y and strength sd must be positive".into()));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let strength = Normal::new(cfg.strength_mean, cfg.strength_sd)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let rates = cfg
        .event_rates
        .iter()
        .map(|&r| if r > 0.0 { Poisson::new(r).ok() } else { None })
        .collect::<Vec<_>>();

    let mut matches = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let home = strength.sample(&mut rng);
        let away = strength.sample(&mut rng);
        let mut m = MatchRecord::new(format!("s{i:05}"), Outcome::Draw, home, away, cfg.kinds);
        for (kind, rate) in rates.iter().enumerate() {
            let Some(rate) = rate else { continue };
            for minute in 1..=cfg.t_max {
                for side in Side::BOTH {
                    let c: f64 = rate.sample(&mut rng);
                    m.counts.add(kind, minute, side, c as u32);
                }
            }
        }
        matches.push(m);
    }

    let provisional = Dataset::new(cfg.kinds, matches)?;
    let standardizer = Standardizer::fit(&provisional);
    let design = DesignMatrix::build(&provisional, cfg.t_max, &standardizer)?;
    let mean = design.latent_mean(&DVector::from_column_slice(&cfg.nu))?;
    let mut matches = provisional.matches().to_vec();
    for (m, mu) in matches.iter_mut().zip(mean.iter()) {
        let eps: f64 = StandardNormal.sample(&mut rng);
        m.outcome = Outcome::classify(mu + cfg.sigma_y * eps, (d1, d2));
    }
    let dataset = Dataset::new(cfg.kinds, matches)?;
    Ok((dataset, GroundTruth { config: cfg.clone(), standardizer }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::normal_cdf;

    #[test]
    fn null_model_outcome_frequencies_match_threshold_integrals() {
        let n = 20_000;
        let mut cfg = SynthesisConfig::structured(n, 1, 1, 17).unwrap();
        cfg.nu = vec![0.0; cfg.layout().unwrap().dim()];
        let (d, _) = synthesize_dataset(&cfg).unwrap();
        let expected = [normal_cdf(-0.5), normal_cdf(0.5) - normal_cdf(-0.5), 1.0 - normal_cdf(0.5)];
        let mut freq = [0usize; 3];
        for m in d.matches() {
            freq[m.outcome.index()] += 1;
        }
        for (f, p) in freq.iter().zip(expected) {
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((*f as f64 / n as f64 - p).abs() < 3.0 * se, "{f} vs {p}");
        }
        assert!((expected[0] - 0.309).abs() < 1e-3 && (expected[1] - 0.383).abs() < 1e-3);
    }

    #[test]
    fn zero_rates_leave_counts_empty() {
        let mut cfg = SynthesisConfig::structured(50, 3, 5, 1).unwrap();
        cfg.event_rates = vec![0.0; 3];
        let (d, _) = synthesize_dataset(&cfg).unwrap();
        assert!(d.matches().iter().all(|m| (0..3).all(|k| m.counts.total(k, Side::Home) + m.counts.total(k, Side::Away) == 0)));
    }

    #[test]
    fn same_seed_same_dataset() {
        let cfg = SynthesisConfig::structured(40, 2, 10, 99).unwrap();
        assert_eq!(synthesize_dataset(&cfg).unwrap(), synthesize_dataset(&cfg).unwrap());
        let mut other = cfg.clone();
        other.seed = 100;
        assert_ne!(synthesize_dataset(&cfg).unwrap().0, synthesize_dataset(&other).unwrap().0);
    }

    #[test]
    fn validates_inputs() {
        let mut cfg = SynthesisConfig::structured(10, 2, 10, 1).unwrap();
        cfg.delta = [0.5, 0.5];
        assert!(synthesize_dataset(&cfg).is_err());
        let mut cfg = SynthesisConfig::structured(10, 2, 10, 1).unwrap();
        cfg.nu.pop();
        assert!(matches!(synthesize_dataset(&cfg), Err(Error::Dimension { .. })));
    }

    #[test]
    fn counts_stop_after_t_max() {
        let mut cfg = SynthesisConfig::structured(30, 2, 4, 3).unwrap();
        cfg.event_rates = vec![1.0, 1.0];
        let (d, _) = synthesize_dataset(&cfg).unwrap();
        let m = &d.matches()[0];
        assert!((5..=90).all(|t| m.counts.get(0, t, Side::Home) == 0));
        assert!(m.counts.total(0, Side::Home) + m.counts.total(1, Side::Away) > 0);
    }
}
