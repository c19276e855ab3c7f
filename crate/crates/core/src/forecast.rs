//! Closed-form posterior predictive forecasts.
//!
//! For test columns M* the predictive latent is Gaussian with mean
//! `σ_y⁻² M*ᵀ Σ̃ M Π̂ = M*ᵀ ν̄` and covariance `v I + M*ᵀ Σ̃ M*`, where the
//! noise term v is σ_y² by default.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, MatchRecord, Outcome};
use crate::design::{fill_column, DesignMatrix};
use crate::dist::{normal_cdf, normal_sf};
use crate::error::{Error, Result};
use crate::fit::FittedModel;

/// Noise term of the predictive covariance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictiveVariance {
    /// σ_y² + m*ᵀ Σ̃ m*.
    #[default]
    Corrected,
    /// σ_y⁻² + m*ᵀ Σ̃ m*.
    InverseNoise,
}

impl PredictiveVariance {
    fn noise(self, sigma_y2: f64) -> f64 {
        match self {
            PredictiveVariance::Corrected => sigma_y2,
            PredictiveVariance::InverseNoise => 1.0 / sigma_y2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastTriple {
    pub p_loss: f64,
    pub p_draw: f64,
    pub p_win: f64,
}

impl ForecastTriple {
    pub const UNIFORM: ForecastTriple = ForecastTriple { p_loss: 1.0 / 3.0, p_draw: 1.0 / 3.0, p_win: 1.0 / 3.0 };

    /// Checked constructor: entries in [0, 1] summing to 1 within 1e-9.
    pub fn new(p_loss: f64, p_draw: f64, p_win: f64) -> Result<Self> {
        let t = Self { p_loss, p_draw, p_win };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let ps = self.as_array();
        if ps.iter().any(|p| !(0.0..=1.0).contains(p)) || ((ps[0] + ps[1] + ps[2]) - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("malformed probability triple {ps:?}")));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.p_loss, self.p_draw, self.p_win]
    }

    pub fn get(&self, y: Outcome) -> f64 {
        self.as_array()[y.index()]
    }
}

/// Category probabilities of N(mean, var) against cutoffs `delta`.
pub fn outcome_probabilities(mean: f64, var: f64, delta: (f64, f64)) -> ForecastTriple {
    debug_assert!(var > 0.0 && delta.0 < delta.1);
    let sd = var.sqrt();
    let a = (delta.0 - mean) / sd;
    let b = (delta.1 - mean) / sd;
    let p_loss = normal_cdf(a);
    let p_win = normal_sf(b);
    // each tail evaluated on the side where it is small
    let p_draw = if a > 0.0 {
        normal_sf(a) - normal_sf(b)
    } else if b < 0.0 {
        normal_cdf(b) - normal_cdf(a)
    } else {
        1.0 - normal_cdf(a) - normal_sf(b)
    };
    ForecastTriple { p_loss, p_draw: p_draw.max(0.0), p_win }
}

fn check_layout(model: &FittedModel, m_star: &DesignMatrix) -> Result<()> {
    if m_star.layout() != &model.layout {
        return Err(Error::InvalidArgument(format!(
            "test design layout {:?} does not match model layout {:?}",
            m_star.layout(),
            model.layout
        )));
    }
    Ok(())
}

/// Predictive mean M*ᵀ ν̄.
pub fn predictive_mean(model: &FittedModel, m_star: &DesignMatrix) -> Result<DVector<f64>> {
    check_layout(model, m_star)?;
    m_star.latent_mean(&model.nu_bar())
}

/// Predictive mean by the long route σ_y⁻² M*ᵀ Σ̃ M Π̂ from the training
/// design. Agrees with [`predictive_mean`] up to round-off.
pub fn predictive_mean_from_training(
    model: &FittedModel,
    m_star: &DesignMatrix,
    m_train: &DesignMatrix,
) -> Result<DVector<f64>> {
    check_layout(model, m_star)?;
    check_layout(model, m_train)?;
    if m_train.match_ids() != model.train_ids.as_slice() {
        return Err(Error::InvalidArgument("training design does not match the model's training matches".into()));
    }
    let pi_hat = DVector::from_column_slice(&model.pi_hat_train);
    let b = m_train.weighted_sum(&pi_hat)?;
    let nu = model.sigma_tilde_matrix() * b / model.prior.sigma_y2;
    m_star.latent_mean(&nu)
}

/// Full predictive covariance `v I + M*ᵀ Σ̃ M*`.
pub fn predictive_covariance(model: &FittedModel, m_star: &DesignMatrix, mode: PredictiveVariance) -> Result<DMatrix<f64>> {
    check_layout(model, m_star)?;
    let x = m_star.values();
    let mut cov = x.tr_mul(&(model.sigma_tilde_matrix() * x));
    for i in 0..cov.nrows() {
        cov[(i, i)] += mode.noise(model.prior.sigma_y2);
    }
    Ok(cov)
}

/// Diagonal of the predictive covariance.
pub fn predictive_variances(model: &FittedModel, m_star: &DesignMatrix, mode: PredictiveVariance) -> Result<DVector<f64>> {
    check_layout(model, m_star)?;
    let x = m_star.values();
    let sx = model.sigma_tilde_matrix() * x;
    let noise = mode.noise(model.prior.sigma_y2);
    Ok(DVector::from_iterator(x.ncols(), (0..x.ncols()).map(|i| noise + x.column(i).dot(&sx.column(i)))))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchForecast {
    pub match_id: String,
    pub minute: usize,
    pub probabilities: ForecastTriple,
    pub predicted: Outcome,
}

/// How the predicted category is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PointForecast {
    /// Classify the predictive mean.
    #[default]
    Mean,
    /// Classify one draw from the predictive distribution.
    Sample,
}

/// Forecast every match of `test` with the model for its cut minute.
pub fn forecast_dataset<R: RngCore + ?Sized>(
    model: &FittedModel,
    test: &Dataset,
    mode: PredictiveVariance,
    point: PointForecast,
    rng: &mut R,
) -> Result<Vec<MatchForecast>> {
    model.validate()?;
    if test.kinds() != model.layout.kinds {
        return Err(Error::InvalidArgument(format!(
            "test data has {} event kinds, model expects {}",
            test.kinds(),
            model.layout.kinds
        )));
    }
    let m_star = DesignMatrix::build(test, model.t, &model.standardizer)?;
    let mean = predictive_mean(model, &m_star)?;
    let var = predictive_variances(model, &m_star, mode)?;
    Ok(test
        .matches()
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let latent = match point {
                PointForecast::Mean => mean[i],
                PointForecast::Sample => {
                    let z: f64 = StandardNormal.sample(rng);
                    mean[i] + var[i].sqrt() * z
                }
            };
            MatchForecast {
                match_id: m.match_id.clone(),
                minute: model.t,
                probabilities: outcome_probabilities(mean[i], var[i], model.delta_hat),
                predicted: Outcome::classify(latent, model.delta_hat),
            }
        })
        .collect())
}

/// Forecast one match at every minute for which a model is supplied.
pub fn forecast_match_timeline(
    models: &BTreeMap<usize, FittedModel>,
    minutes: &[usize],
    m: &MatchRecord,
    mode: PredictiveVariance,
) -> Result<Vec<MatchForecast>> {
    minutes
        .iter()
        .map(|&t| {
            let model = models
                .get(&t)
                .ok_or_else(|| Error::InvalidArgument(format!("no fitted model for minute {t}")))?;
            let mut col = vec![0.0; model.dim()];
            fill_column(&model.layout, m, &model.standardizer, &mut col);
            let x = DVector::from_vec(col);
            let mean = x.dot(&model.nu_bar());
            let var = mode.noise(model.prior.sigma_y2) + x.dot(&(model.sigma_tilde_matrix() * &x));
            Ok(MatchForecast {
                match_id: m.match_id.clone(),
                minute: t,
                probabilities: outcome_probabilities(mean, var, model.delta_hat),
                predicted: Outcome::classify(mean, model.delta_hat),
            })
        })
        .collect()
}
