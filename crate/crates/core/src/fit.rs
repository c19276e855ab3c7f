//! Fitting one cut minute: canonical ordering, design, prior, chains and
//! the posterior summaries a forecaster needs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::design::{DesignMatrix, RowLayout, Standardizer};
use crate::error::{Error, Result};
use crate::precise;
use crate::prior::{PriorCovariance, PriorSpec};
use crate::sampler::{run_chains, CoefficientPosterior, PosteriorDraws, Problem, SamplerConfig};
use crate::seed::chain_seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub prior: PriorSpec,
    pub sampler: SamplerConfig,
    pub chains: usize,
    /// Keep retained ν and δ draws in the fitted model.
    pub keep_draws: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { prior: PriorSpec::default(), sampler: SamplerConfig::default(), chains: 4, keep_draws: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSummary {
    #[serde(with = "precise")]
    pub mean: f64,
    #[serde(with = "precise")]
    pub q025: f64,
    #[serde(with = "precise")]
    pub q975: f64,
}

impl CutoffSummary {
    fn from_samples(mut xs: Vec<f64>) -> Self {
        xs.sort_by(f64::total_cmp);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        Self { mean, q025: quantile_sorted(&xs, 0.025), q975: quantile_sorted(&xs, 0.975) }
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(xs: &[f64], q: f64) -> f64 {
    debug_assert!(!xs.is_empty());
    let h = (xs.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    xs[lo] + (h - lo as f64) * (xs[hi] - xs[lo])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetainedDraws {
    /// Per chain, per retained iteration.
    #[serde(with = "precise")]
    pub delta: Vec<Vec<(f64, f64)>>,
    #[serde(with = "precise")]
    pub nu: Vec<Vec<Vec<f64>>>,
}

/// Posterior summaries of one cut-minute fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub t: usize,
    pub layout: RowLayout,
    pub prior: PriorSpec,
    pub sampler: SamplerConfig,
    pub standardizer: Standardizer,
    /// Mean of ν over post-burn-in iterations of all chains.
    #[serde(with = "precise")]
    pub nu_hat: Vec<f64>,
    /// σ_y⁻² Σ̃ M Π̂: the ν implied by the posterior-mean latents.
    #[serde(with = "precise")]
    pub nu_bar: Vec<f64>,
    /// Training match ids in fitting order, aligned with `pi_hat_train`.
    pub train_ids: Vec<String>,
    #[serde(with = "precise")]
    pub pi_hat_train: Vec<f64>,
    /// Σ̃, dense row-major.
    #[serde(with = "precise")]
    pub sigma_tilde: Vec<f64>,
    #[serde(with = "precise")]
    pub delta_hat: (f64, f64),
    pub delta1: CutoffSummary,
    pub delta2: CutoffSummary,
    pub fit_seed: u64,
    pub chain_seeds: Vec<u64>,
    #[serde(with = "precise")]
    pub chain_initial_delta: Vec<(f64, f64)>,
    pub degenerate_steps: usize,
    #[serde(with = "precise")]
    pub jitter: f64,
    pub draws: Option<RetainedDraws>,
}

impl FittedModel {
    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn sigma_tilde_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim(), self.dim(), &self.sigma_tilde)
    }

    pub fn nu_bar(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.nu_bar)
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if self.layout.t != self.t {
            return Err(Error::InvalidArgument(format!("model t {} disagrees with layout t {}", self.t, self.layout.t)));
        }
        for (name, len, want) in [
            ("nu_hat", self.nu_hat.len(), dim),
            ("nu_bar", self.nu_bar.len(), dim),
            ("sigma_tilde", self.sigma_tilde.len(), dim * dim),
            ("pi_hat_train", self.pi_hat_train.len(), self.train_ids.len()),
        ] {
            if len != want {
                return Err(Error::InvalidArgument(format!("model field {name} has length {len}, expected {want}")));
            }
        }
        if !(self.delta_hat.0 < self.delta_hat.1) {
            return Err(Error::InvalidArgument(format!("model cutoffs are not increasing: {:?}", self.delta_hat)));
        }
        Ok(())
    }
}

/// Result of a fit: the model plus the raw chains for diagnostics.
#[derive(Clone, Debug)]
pub struct FitOutput {
    pub model: FittedModel,
    pub chains: Vec<PosteriorDraws>,
}

/// Training data in canonical (match id) order, so a fit does not depend on
/// the order matches were supplied in.
pub fn canonical_order(d: &Dataset) -> Result<Dataset> {
    let mut idx: Vec<usize> = (0..d.n()).collect();
    idx.sort_by(|&a, &b| d.matches()[a].match_id.cmp(&d.matches()[b].match_id));
    d.subset(&idx)
}

/// Fit the model at cut minute `t` on `train`.
pub fn fit_minute(train: &Dataset, t: usize, cfg: &FitConfig, fit_seed: u64) -> Result<FitOutput> {
    cfg.prior.validate()?;
    cfg.sampler.validate()?;
    let train = canonical_order(train)?;
    let standardizer = Standardizer::fit(&train);
    let design = DesignMatrix::build(&train, t, &standardizer)?;
    let outcomes = train.outcomes();
    let prior_cov = PriorCovariance::build(*design.layout(), &cfg.prior)?;
    let posterior = CoefficientPosterior::new(&design, &prior_cov.precision(), cfg.prior.sigma_y2, cfg.sampler.jitter)?;
    let problem = Problem { design: &design, outcomes: &outcomes, prior: &cfg.prior, posterior: &posterior };
    let chains = run_chains(&problem, &cfg.sampler, cfg.chains, fit_seed)?;

    let k = chains.len() as f64;
    let nu_hat = chains.iter().fold(DVector::zeros(design.dim()), |acc, c| acc + &c.nu_mean) / k;
    let pi_hat = chains.iter().fold(DVector::zeros(design.n()), |acc, c| acc + &c.pi_mean) / k;
    let nu_bar = posterior.mean(&design, &pi_hat)?;

    let d1: Vec<f64> = chains.iter().flat_map(|c| c.draws.iter().map(|d| d.delta.0)).collect();
    let d2: Vec<f64> = chains.iter().flat_map(|c| c.draws.iter().map(|d| d.delta.1)).collect();
    let delta1 = CutoffSummary::from_samples(d1);
    let delta2 = CutoffSummary::from_samples(d2);
    if !(delta1.mean < delta2.mean) {
        return Err(Error::InvalidArgument(format!(
            "posterior mean cutoffs are not increasing at t = {t}: {} vs {}",
            delta1.mean, delta2.mean
        )));
    }

    let sigma = posterior.covariance();
    let dim = design.dim();
    let sigma_tilde = (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).map(|(i, j)| sigma[(i, j)]).collect();
    let draws = cfg.keep_draws.then(|| RetainedDraws {
        delta: chains.iter().map(|c| c.draws.iter().map(|d| d.delta).collect()).collect(),
        nu: chains.iter().map(|c| c.draws.iter().map(|d| d.nu.as_slice().to_vec()).collect()).collect(),
    });

    let model = FittedModel {
        t,
        layout: *design.layout(),
        prior: cfg.prior,
        sampler: cfg.sampler,
        standardizer,
        nu_hat: nu_hat.as_slice().to_vec(),
        nu_bar: nu_bar.as_slice().to_vec(),
        train_ids: design.match_ids().to_vec(),
        pi_hat_train: pi_hat.as_slice().to_vec(),
        sigma_tilde,
        delta_hat: (delta1.mean, delta2.mean),
        delta1,
        delta2,
        fit_seed,
        chain_seeds: (0..cfg.chains).map(|c| chain_seed(fit_seed, c)).collect(),
        chain_initial_delta: chains.iter().map(|c| c.initial_delta).collect(),
        degenerate_steps: chains.iter().map(|c| c.degenerate_steps).sum(),
        jitter: posterior.jitter(),
        draws,
    };
    model.validate()?;
    Ok(FitOutput { model, chains })
}
