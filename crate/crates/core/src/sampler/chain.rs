use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use super::coefficients::{CoefficientPosterior, DEFAULT_JITTER};
use super::cutoffs::{sample_cutoff, Cutoff, CutoffBounds, CutoffScale};
use super::latent::{sample_latent, LatentMode};
use crate::data::Outcome;
use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::prior::PriorSpec;
use crate::seed::chain_seed;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub latent_mode: LatentMode,
    /// Store Π in every retained snapshot.
    pub keep_latent: bool,
    #[serde(with = "crate::precise")]
    pub jitter: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            iterations: 10_000,
            burn_in: 7_000,
            thin: 10,
            latent_mode: LatentMode::Truncated,
            keep_latent: false,
            jitter: DEFAULT_JITTER,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::InvalidArgument(format!(
                "burn-in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidArgument("thin must be at least 1".into()));
        }
        Ok(())
    }

    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// Everything a chain reads but never mutates.
#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub design: &'a DesignMatrix,
    pub outcomes: &'a [Outcome],
    pub prior: &'a PriorSpec,
    pub posterior: &'a CoefficientPosterior,
}

impl Problem<'_> {
    fn check(&self) -> Result<()> {
        if self.outcomes.len() != self.design.n() {
            return Err(Error::Dimension { expected: self.design.n(), got: self.outcomes.len() });
        }
        if self.posterior.dim() != self.design.dim() {
            return Err(Error::Dimension { expected: self.design.dim(), got: self.posterior.dim() });
        }
        self.prior.validate()
    }
}

#[derive(Clone, Debug)]
pub struct ChainState {
    pub pi: DVector<f64>,
    pub nu: DVector<f64>,
    pub delta: (f64, f64),
    pub iteration: usize,
    rng: ChaCha20Rng,
}

impl ChainState {
    /// ν = 0, the given cutoffs, and Π from the truncated prior predictive.
    pub fn initial(problem: &Problem<'_>, delta: (f64, f64), mode: LatentMode, mut rng: ChaCha20Rng) -> Result<Self> {
        if !(delta.0 < delta.1) {
            return Err(Error::InvalidArgument(format!("initial cutoffs must increase, got {delta:?}")));
        }
        let n = problem.design.n();
        let nu = DVector::zeros(problem.design.dim());
        let pi = sample_latent(&DVector::zeros(n), delta, problem.outcomes, problem.prior.sigma_y2, mode, &mut rng);
        Ok(Self { pi, nu, delta, iteration: 0, rng })
    }
}

/// Starting cutoffs: (−1, 1) for chain 0, otherwise two signed
/// `U(0.5, 3)` magnitudes, sorted.
pub fn initial_delta<R: Rng + ?Sized>(chain: usize, rng: &mut R) -> (f64, f64) {
    if chain == 0 {
        return (-1.0, 1.0);
    }
    loop {
        let mut draw = || {
            let u: f64 = rng.random_range(0.5..3.0);
            if rng.random_bool(0.5) { u } else { -u }
        };
        let (a, b) = (draw(), draw());
        if a != b {
            return (a.min(b), a.max(b));
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Draw {
    pub nu: DVector<f64>,
    pub delta: (f64, f64),
    pub pi: Option<DVector<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorDraws {
    pub chain_id: usize,
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub initial_delta: (f64, f64),
    pub draws: Vec<Draw>,
    /// Means over every post-burn-in iteration, not only retained ones.
    pub nu_mean: DVector<f64>,
    pub pi_mean: DVector<f64>,
    /// Cutoff updates that kept the previous value.
    pub degenerate_steps: usize,
}

/// One full Gibbs sweep: Π, then ν, then δ₁, then δ₂. Returns the number
/// of degenerate cutoff steps.
pub fn gibbs_step(problem: &Problem<'_>, state: &mut ChainState, mode: LatentMode) -> Result<usize> {
    let sigma_y2 = problem.prior.sigma_y2;
    let y = problem.outcomes;
    let mean = problem.design.latent_mean(&state.nu)?;
    state.pi = sample_latent(&mean, state.delta, y, sigma_y2, mode, &mut state.rng);
    state.nu = problem.posterior.sample(problem.design, &state.pi, &mut state.rng)?;

    let scale = CutoffScale { tau: problem.prior.tau };
    let pi = state.pi.as_slice();
    let mut degenerate = 0;
    for which in [Cutoff::Lower, Cutoff::Upper] {
        let bounds = CutoffBounds::from_latents(which, pi, y);
        let d = sample_cutoff(which, state.delta, bounds, problem.prior.alpha, scale, &mut state.rng);
        if d.degenerate {
            degenerate += 1;
            log::debug!("iteration {}: {which:?} cutoff kept at {} (bounds {bounds:?})", state.iteration, d.value);
        }
        match which {
            Cutoff::Lower => state.delta.0 = d.value,
            Cutoff::Upper => state.delta.1 = d.value,
        }
    }
    debug_assert!(state.delta.0 < state.delta.1);
    state.iteration += 1;
    Ok(degenerate)
}

/// Run one chain from `init` cutoffs, seeding its generator with `seed`.
pub fn run_chain(
    problem: &Problem<'_>,
    cfg: &SamplerConfig,
    chain_id: usize,
    init: Option<(f64, f64)>,
    seed: u64,
) -> Result<PosteriorDraws> {
    cfg.validate()?;
    problem.check()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let delta0 = init.unwrap_or_else(|| initial_delta(chain_id, &mut rng));
    let mut state = ChainState::initial(problem, delta0, cfg.latent_mode, rng)?;

    let mut draws = Vec::with_capacity(cfg.retained());
    let mut nu_sum = DVector::zeros(problem.design.dim());
    let mut pi_sum = DVector::zeros(problem.design.n());
    let mut degenerate_steps = 0;
    for m in 1..=cfg.iterations {
        degenerate_steps += gibbs_step(problem, &mut state, cfg.latent_mode)?;
        if m > cfg.burn_in {
            nu_sum += &state.nu;
            pi_sum += &state.pi;
            if (m - cfg.burn_in).is_multiple_of(cfg.thin) {
                draws.push(Draw {
                    nu: state.nu.clone(),
                    delta: state.delta,
                    pi: cfg.keep_latent.then(|| state.pi.clone()),
                });
            }
        }
    }
    if degenerate_steps > 0 {
        log::info!("chain {chain_id}: {degenerate_steps} degenerate cutoff steps kept their previous value");
    }
    let kept = (cfg.iterations - cfg.burn_in) as f64;
    Ok(PosteriorDraws {
        chain_id,
        seed,
        iterations: cfg.iterations,
        burn_in: cfg.burn_in,
        thin: cfg.thin,
        initial_delta: delta0,
        draws,
        nu_mean: nu_sum / kept,
        pi_mean: pi_sum / kept,
        degenerate_steps,
    })
}

/// Run `count` independent chains in parallel with seeds derived from
/// `fit_seed`. Output order is chain order.
pub fn run_chains(problem: &Problem<'_>, cfg: &SamplerConfig, count: usize, fit_seed: u64) -> Result<Vec<PosteriorDraws>> {
    if count == 0 {
        return Err(Error::InvalidArgument("at least one chain is required".into()));
    }
    (0..count).into_par_iter().map(|c| run_chain(problem, cfg, c, None, chain_seed(fit_seed, c))).collect()
}
