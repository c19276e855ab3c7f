//! Maximum-likelihood ordered probit, the non-Bayesian comparison model.
//!
//! Parameters are packed as `θ = (ν, δ₁, s)` with `δ₂ = δ₁ + exp(s)`, so any
//! θ has ordered cutoffs. The objective is the negative log-likelihood plus
//! `ridge · ‖ν‖² / 2`, minimized by L-BFGS from ν = 0 and cutoffs at the
//! empirical category quantiles.

use argmin::core::{CostFunction, Executor, Gradient, State, TerminationReason, TerminationStatus};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::Outcome;
use crate::design::{DesignMatrix, RowLayout};
use crate::dist::{log_normal_sf, normal_quantile};
use crate::error::{Error, Result};
use crate::forecast::{outcome_probabilities, ForecastTriple};
use crate::precise;

/// Ridge applied when the design has more rows than half the matches.
pub const DEFAULT_RIDGE: f64 = 1e-4;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    /// `None` applies [`default_ridge`].
    pub ridge: Option<f64>,
    pub max_iterations: u64,
    /// Gradient norm tolerance on the per-match objective.
    pub gradient_tolerance: f64,
    /// A fit whose final per-match gradient norm is below this counts as
    /// converged even if the line search stalled first.
    pub accept_gradient: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { ridge: None, max_iterations: 5000, gradient_tolerance: 1e-11, accept_gradient: 1e-7 }
    }
}

/// [`DEFAULT_RIDGE`] when `dim > n / 2`, otherwise 0.
pub fn default_ridge(dim: usize, n: usize) -> f64 {
    if 2 * dim > n { DEFAULT_RIDGE } else { 0.0 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleFit {
    pub layout: RowLayout,
    #[serde(with = "precise")]
    pub nu: Vec<f64>,
    #[serde(with = "precise")]
    pub delta: (f64, f64),
    #[serde(with = "precise")]
    pub neg_log_lik: f64,
    #[serde(with = "precise")]
    pub ridge: f64,
    pub converged: bool,
    pub iterations: u64,
}

fn ln_cdf(x: f64) -> f64 {
    log_normal_sf(-x)
}

/// ln(Φ(b) − Φ(a)) for a < b, evaluated on the side where the masses are
/// small.
fn ln_interval(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        ln_cdf(b)
    } else if b == f64::INFINITY {
        log_normal_sf(a)
    } else if a > 0.0 {
        let (la, lb) = (log_normal_sf(a), log_normal_sf(b));
        la + (-(lb - la).exp()).ln_1p()
    } else if b < 0.0 {
        let (la, lb) = (ln_cdf(a), ln_cdf(b));
        lb + (-(la - lb).exp()).ln_1p()
    } else {
        (-ln_cdf(a).exp() - log_normal_sf(b).exp()).ln_1p()
    }
}

fn ln_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Ordered-probit objective over a column-per-match design.
pub struct OrderedProbitObjective<'a> {
    design: &'a DesignMatrix,
    outcomes: &'a [Outcome],
    ridge: f64,
}

impl<'a> OrderedProbitObjective<'a> {
    pub fn new(design: &'a DesignMatrix, outcomes: &'a [Outcome], ridge: f64) -> Result<Self> {
        if outcomes.len() != design.n() {
            return Err(Error::Dimension { expected: design.n(), got: outcomes.len() });
        }
        if !(ridge >= 0.0) {
            return Err(Error::InvalidArgument(format!("ridge must be non-negative, got {ridge}")));
        }
        Ok(Self { design, outcomes, ridge })
    }

    pub fn unpack(&self, theta: &[f64]) -> (DVector<f64>, (f64, f64)) {
        let dim = self.design.dim();
        let nu = DVector::from_column_slice(&theta[..dim]);
        let d1 = theta[dim];
        (nu, (d1, d1 + theta[dim + 1].exp()))
    }

    fn bounds(y: Outcome, delta: (f64, f64)) -> (f64, f64) {
        match y {
            Outcome::Loss => (f64::NEG_INFINITY, delta.0),
            Outcome::Draw => (delta.0, delta.1),
            Outcome::Win => (delta.1, f64::INFINITY),
        }
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        let (nu, delta) = self.unpack(theta);
        let eta = self.design.values().tr_mul(&nu);
        let nll: f64 = self
            .outcomes
            .iter()
            .zip(eta.iter())
            .map(|(&y, &e)| {
                let (l, u) = Self::bounds(y, delta);
                -ln_interval(l - e, u - e)
            })
            .sum();
        nll + 0.5 * self.ridge * nu.norm_squared()
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let dim = self.design.dim();
        let (nu, delta) = self.unpack(theta);
        let gap = theta[dim + 1].exp();
        let eta = self.design.values().tr_mul(&nu);
        // per match, d(log P)/dη; accumulated into ν through M
        let mut d_eta = DVector::zeros(self.design.n());
        let (mut g_d1, mut g_s) = (0.0, 0.0);
        for (i, (&y, &e)) in self.outcomes.iter().zip(eta.iter()).enumerate() {
            let (l, u) = Self::bounds(y, delta);
            let (a, b) = (l - e, u - e);
            let lp = ln_interval(a, b);
            let ga = if a.is_finite() { (ln_pdf(a) - lp).exp() } else { 0.0 };
            let gb = if b.is_finite() { (ln_pdf(b) - lp).exp() } else { 0.0 };
            d_eta[i] = ga - gb;
            match y {
                Outcome::Loss => g_d1 += gb,
                Outcome::Draw => {
                    g_d1 += gb - ga;
                    g_s += gb * gap;
                }
                Outcome::Win => {
                    g_d1 -= ga;
                    g_s -= ga * gap;
                }
            }
        }
        let g_nu = -(self.design.values() * d_eta) + &nu * self.ridge;
        let mut g = g_nu.as_slice().to_vec();
        g.push(-g_d1);
        g.push(-g_s);
        g
    }
}

/// The objective divided by n, which keeps the first quasi-Newton step of
/// sensible length. Non-finite values are reported as +∞ so line searches
/// back off.
struct MeanObjective<'a>(OrderedProbitObjective<'a>);

impl CostFunction for MeanObjective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, theta: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        let v = self.0.value(theta) / self.0.outcomes.len() as f64;
        Ok(if v.is_finite() { v } else { f64::INFINITY })
    }
}

impl Gradient for MeanObjective<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, theta: &Vec<f64>) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        let n = self.0.outcomes.len() as f64;
        Ok(self.0.gradient(theta).into_iter().map(|g| g / n).collect())
    }
}

/// Cutoffs at the empirical category quantiles, kept finite when a
/// category is empty.
fn initial_cutoffs(y: &[Outcome]) -> (f64, f64) {
    let n = y.len() as f64;
    let floor = 0.5 / n;
    let loss = (y.iter().filter(|&&o| o == Outcome::Loss).count() as f64 / n).max(floor);
    let draw = (y.iter().filter(|&&o| o == Outcome::Draw).count() as f64 / n).max(floor);
    let d1 = normal_quantile(loss.min(1.0 - 2.0 * floor));
    let d2 = normal_quantile((loss + draw).min(1.0 - floor));
    (d1, d2.max(d1 + 1e-3))
}

/// Fit the ordered probit by maximum likelihood.
pub fn fit_ordered_probit_mle(design: &DesignMatrix, y: &[Outcome], opts: &MleOptions) -> Result<MleFit> {
    if y.is_empty() {
        return Err(Error::InvalidArgument("cannot fit an ordered probit to zero matches".into()));
    }
    let ridge = opts.ridge.unwrap_or_else(|| default_ridge(design.dim(), design.n()));
    if ridge > 0.0 {
        log::info!("ordered probit at t = {}: ridge {ridge:e} (dim {}, n {})", design.t(), design.dim(), design.n());
    }
    let objective = MeanObjective(OrderedProbitObjective::new(design, y, ridge)?);
    let (d1, d2) = initial_cutoffs(y);
    let mut theta0 = vec![0.0; design.dim()];
    theta0.push(d1);
    theta0.push((d2 - d1).ln());

    let solver = LBFGS::new(MoreThuenteLineSearch::new(), 10)
        .with_tolerance_grad(opts.gradient_tolerance)
        .and_then(|s| s.with_tolerance_cost(0.0))
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let res = Executor::new(objective, solver)
        .configure(|s| s.param(theta0).max_iters(opts.max_iterations))
        .run()
        .map_err(|e| Error::InvalidArgument(format!("ordered probit optimizer failed: {e}")))?;
    let state = res.state();
    let theta = state.get_best_param().cloned().unwrap_or_default();
    let objective = OrderedProbitObjective::new(design, y, ridge)?;
    let (nu, delta) = objective.unpack(&theta);
    let penalized = objective.value(&theta);
    let grad_norm = objective.gradient(&theta).iter().map(|g| g * g).sum::<f64>().sqrt() / y.len() as f64;
    let solver_converged = matches!(
        state.get_termination_status(),
        TerminationStatus::Terminated(TerminationReason::SolverConverged)
    );
    let converged = solver_converged || grad_norm <= opts.accept_gradient;
    if !converged {
        log::warn!(
            "ordered probit at t = {} stopped without converging (gradient {grad_norm:e}): {:?}",
            design.t(),
            state.get_termination_status()
        );
    }
    Ok(MleFit {
        layout: *design.layout(),
        neg_log_lik: penalized - 0.5 * ridge * nu.norm_squared(),
        nu: nu.as_slice().to_vec(),
        delta,
        ridge,
        converged,
        iterations: state.get_iter(),
    })
}

/// Probabilities for test columns with unit latent variance.
pub fn predict_ordered_probit(fit: &MleFit, m_star: &DesignMatrix) -> Result<Vec<ForecastTriple>> {
    if m_star.layout() != &fit.layout {
        return Err(Error::InvalidArgument(format!(
            "test design layout {:?} does not match fitted layout {:?}",
            m_star.layout(),
            fit.layout
        )));
    }
    let eta = m_star.latent_mean(&DVector::from_column_slice(&fit.nu))?;
    Ok(eta.iter().map(|&e| outcome_probabilities(e, 1.0, fit.delta)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn probit_data(n: usize, nu: &[f64], delta: (f64, f64), seed: u64) -> (DesignMatrix, Vec<Outcome>) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let p = nu.len();
        let x = DMatrix::from_fn(p, n, |_, _| StandardNormal.sample(&mut rng));
        let y = (0..n)
            .map(|i| {
                let e: f64 = StandardNormal.sample(&mut rng);
                let eta: f64 = (0..p).map(|j| x[(j, i)] * nu[j]).sum();
                Outcome::classify(eta + e, delta)
            })
            .collect();
        let ids = (0..n).map(|i| i.to_string()).collect();
        (DesignMatrix::from_parts(RowLayout::new(p, 0, 1), x, ids).unwrap(), y)
    }

    fn central_difference(f: &OrderedProbitObjective<'_>, theta: &[f64], h: f64) -> Vec<f64> {
        (0..theta.len())
            .map(|j| {
                let mut up = theta.to_vec();
                let mut dn = theta.to_vec();
                up[j] += h;
                dn[j] -= h;
                (f.value(&up) - f.value(&dn)) / (2.0 * h)
            })
            .collect()
    }

    /// Fourth-order central difference; the likelihood of 5000 matches has
    /// third derivatives large enough to swamp the three-point stencil.
    fn five_point_difference(f: &OrderedProbitObjective<'_>, theta: &[f64], h: f64) -> Vec<f64> {
        let at = |j: usize, k: f64| {
            let mut x = theta.to_vec();
            x[j] += k * h;
            f.value(&x)
        };
        (0..theta.len()).map(|j| (at(j, -2.0) - 8.0 * at(j, -1.0) + 8.0 * at(j, 1.0) - at(j, 2.0)) / (12.0 * h)).collect()
    }

    #[test]
    fn interval_log_probability_is_stable() {
        assert!((ln_interval(-0.5, 0.5) - (0.382_924_922_548_026_2f64).ln()).abs() < 1e-14);
        assert!(ln_interval(40.0, 41.0).is_finite());
        assert!(ln_interval(-41.0, -40.0).is_finite());
        assert!((ln_interval(40.0, 41.0) - ln_interval(-41.0, -40.0)).abs() < 1e-9);
        assert!((ln_interval(f64::NEG_INFINITY, 0.0) - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let (m, y) = probit_data(80, &[0.7, -0.4, 0.2], (-0.3, 0.6), 1);
        let f = OrderedProbitObjective::new(&m, &y, 0.3).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for _ in 0..20 {
            let theta: Vec<f64> = (0..5).map(|_| 0.5 * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
            let g = f.gradient(&theta);
            let fd = central_difference(&f, &theta, 1e-5);
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn recovers_generating_parameters() {
        let truth = [0.8, -0.5];
        let (m, y) = probit_data(5000, &truth, (-0.5, 0.5), 3);
        let fit = fit_ordered_probit_mle(&m, &y, &MleOptions::default()).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.ridge, 0.0);
        // asymptotic standard errors from a finite-difference Hessian
        let f = OrderedProbitObjective::new(&m, &y, 0.0).unwrap();
        let mut theta = fit.nu.clone();
        theta.push(fit.delta.0);
        theta.push((fit.delta.1 - fit.delta.0).ln());
        let k = theta.len();
        let h = 1e-5;
        let hess = DMatrix::from_fn(k, k, |i, j| {
            let mut up = theta.clone();
            let mut dn = theta.clone();
            up[j] += h;
            dn[j] -= h;
            (f.gradient(&up)[i] - f.gradient(&dn)[i]) / (2.0 * h)
        });
        let cov = hess.try_inverse().unwrap();
        for j in 0..2 {
            let se = cov[(j, j)].sqrt();
            assert!((fit.nu[j] - truth[j]).abs() < 3.0 * se, "coef {j}: {} vs {}", fit.nu[j], truth[j]);
        }
        let g = five_point_difference(&f, &theta, 1e-3);
        assert!(g.iter().all(|v| v.abs() < 1e-6), "{g:?}");
    }

    #[test]
    fn single_category_with_ridge_spreads_cutoffs() {
        let (m, _) = probit_data(200, &[1.0, 1.0], (-1.0, 1.0), 4);
        let y = vec![Outcome::Draw; 200];
        let fit = fit_ordered_probit_mle(&m, &y, &MleOptions { ridge: Some(1.0), ..MleOptions::default() }).unwrap();
        assert!(fit.nu.iter().all(|v| v.abs() < 1e-3), "{:?}", fit.nu);
        assert!(fit.delta.0 < -2.0 && fit.delta.1 > 2.0, "{:?}", fit.delta);
    }

    #[test]
    fn ridge_rule() {
        assert_eq!(default_ridge(10, 100), 0.0);
        assert_eq!(default_ridge(51, 100), DEFAULT_RIDGE);
        assert_eq!(default_ridge(1442, 2736), DEFAULT_RIDGE);
    }

    #[test]
    fn prediction_matches_normal_table() {
        let layout = RowLayout::new(2, 0, 1);
        let fit = MleFit {
            layout,
            nu: vec![0.0, 0.0],
            delta: (-0.5, 0.5),
            neg_log_lik: 0.0,
            ridge: 0.0,
            converged: true,
            iterations: 0,
        };
        let m = DesignMatrix::from_parts(layout, DMatrix::from_row_slice(2, 2, &[1.0, 30.0, -2.0, -30.0]), vec![
            "a".into(),
            "b".into(),
        ])
        .unwrap();
        let p = predict_ordered_probit(&fit, &m).unwrap();
        assert!((p[0].p_loss - 0.308_537_538_725_986_9).abs() < 1e-15);
        assert!((p[0].p_draw - 0.382_924_922_548_026_2).abs() < 1e-15);
        let fit = MleFit { nu: vec![1.0, 0.0], ..fit };
        let p = predict_ordered_probit(&fit, &m).unwrap();
        assert!(p[1].p_win > 1.0 - 1e-12);
        assert!(p.iter().all(|t| (t.as_array().iter().sum::<f64>() - 1.0).abs() < 1e-12));
    }
}
