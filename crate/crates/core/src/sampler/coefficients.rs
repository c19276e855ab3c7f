use std::cell::Cell;

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::CholeskyFactor;

/// Default relative diagonal jitter tried once when the posterior precision
/// fails to factor.
pub const DEFAULT_JITTER: f64 = 1e-10;

thread_local! {
    static FACTORIZATIONS: Cell<usize> = const { Cell::new(0) };
}

/// Number of posterior precision factorizations performed on this thread.
pub fn factorization_count() -> usize {
    FACTORIZATIONS.with(Cell::get)
}

/// Conditional posterior of ν given Π:
/// `N(σ_y⁻² Σ̃ M Π, Σ̃)` with `Σ̃ = (σ_y⁻² M Mᵀ + Σ₀⁻¹)⁻¹`.
///
/// M is fixed within a fit, so the precision is factored once here and
/// every ν draw reuses the factor.
#[derive(Clone, Debug)]
pub struct CoefficientPosterior {
    precision: CholeskyFactor,
    sigma_y2: f64,
}

impl CoefficientPosterior {
    pub fn new(m: &DesignMatrix, prior_precision: &DMatrix<f64>, sigma_y2: f64, jitter: f64) -> Result<Self> {
        let dim = m.dim();
        if prior_precision.nrows() != dim || prior_precision.ncols() != dim {
            return Err(Error::Dimension { expected: dim, got: prior_precision.nrows() });
        }
        if !(sigma_y2 > 0.0) {
            return Err(Error::InvalidArgument(format!("sigma_y2 must be positive, got {sigma_y2}")));
        }
        let x = m.values();
        let mut q = prior_precision.clone();
        q.gemm(1.0 / sigma_y2, x, &x.transpose(), 1.0);
        let precision = CholeskyFactor::with_jitter(&q, jitter)?;
        FACTORIZATIONS.with(|c| c.set(c.get() + 1));
        Ok(Self { precision, sigma_y2 })
    }

    pub fn dim(&self) -> usize {
        self.precision.dim()
    }

    pub fn jitter(&self) -> f64 {
        self.precision.jitter
    }

    /// σ_y⁻² Σ̃ M Π.
    pub fn mean(&self, m: &DesignMatrix, pi: &DVector<f64>) -> Result<DVector<f64>> {
        let b = m.weighted_sum(pi)? / self.sigma_y2;
        Ok(self.precision.solve(&b))
    }

    /// Σ̃ as a dense matrix.
    pub fn covariance(&self) -> DMatrix<f64> {
        self.precision.inverse()
    }

    pub fn sample<R: RngCore + ?Sized>(&self, m: &DesignMatrix, pi: &DVector<f64>, rng: &mut R) -> Result<DVector<f64>> {
        let mean = self.mean(m, pi)?;
        let z = DVector::from_iterator(self.dim(), (0..self.dim()).map(|_| StandardNormal.sample(rng)));
        Ok(mean + self.precision.solve_upper(&z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::RowLayout;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn scalar_conjugate_update() {
        // prior N(0, 1), one observation Π = 2 with unit design: N(1, 1/2)
        let m = DesignMatrix::from_parts(RowLayout::new(1, 0, 1), DMatrix::from_element(1, 1, 1.0), vec!["a".into()])
            .unwrap();
        let post = CoefficientPosterior::new(&m, &DMatrix::identity(1, 1), 1.0, DEFAULT_JITTER).unwrap();
        let pi = DVector::from_element(1, 2.0);
        assert!((post.mean(&m, &pi).unwrap()[0] - 1.0).abs() < 1e-15);
        assert!((post.covariance()[(0, 0)] - 0.5).abs() < 1e-15);

        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| post.sample(&m, &pi, &mut rng).unwrap()[0]).collect();
        let mu = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mu - 1.0).abs() < 3.0 * (0.5 / n as f64).sqrt());
        // SE of a sample variance is σ² sqrt(2/(n-1))
        assert!((var - 0.5).abs() < 3.0 * 0.5 * (2.0 / (n - 1) as f64).sqrt());
    }

    #[test]
    fn no_data_gives_prior() {
        let prior_prec = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let m = DesignMatrix::from_parts(RowLayout::new(2, 0, 1), DMatrix::zeros(2, 0), vec![]).unwrap();
        let post = CoefficientPosterior::new(&m, &prior_prec, 1.0, DEFAULT_JITTER).unwrap();
        let cov = post.covariance();
        let want = prior_prec.try_inverse().unwrap();
        assert!((cov - want).abs().max() < 1e-14);
        assert_eq!(post.mean(&m, &DVector::zeros(0)).unwrap(), DVector::zeros(2));
    }

    #[test]
    fn collinear_design_without_prior_reports_pivot() {
        let vals = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        let m = DesignMatrix::from_parts(RowLayout::new(2, 0, 1), vals, vec!["a".into(), "b".into(), "c".into()])
            .unwrap();
        let err = CoefficientPosterior::new(&m, &DMatrix::zeros(2, 2), 1.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { index: 1, .. }));
        // the jittered retry succeeds
        assert!(CoefficientPosterior::new(&m, &DMatrix::zeros(2, 2), 1.0, DEFAULT_JITTER).is_ok());
    }
}
