//! Dense symmetric positive-definite factorization.
//!
//! nalgebra's `Cholesky::new` reports failure as `None`; the sampler needs
//! the failing pivot to explain collinear designs, so the factorization is
//! done here and the triangular solves are delegated back to nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Lower Cholesky factor L with A = L Lᵀ.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    l: DMatrix<f64>,
    /// Diagonal jitter added before the factorization succeeded (0 if none).
    pub jitter: f64,
}

impl CholeskyFactor {
    /// Factor a symmetric matrix, reading only its lower triangle.
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension { expected: n, got: a.ncols() });
        }
        let mut l = a.clone();
        for j in 0..n {
            let mut d = l[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { index: j, pivot: d });
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            // column j below the diagonal: contiguous in column-major storage
            for k in 0..j {
                let ljk = l[(j, k)];
                if ljk != 0.0 {
                    for i in (j + 1)..n {
                        let v = l[(i, k)];
                        l[(i, j)] -= v * ljk;
                    }
                }
            }
            for i in (j + 1)..n {
                l[(i, j)] /= d;
            }
        }
        for j in 1..n {
            for i in 0..j {
                l[(i, j)] = 0.0;
            }
        }
        Ok(Self { l, jitter: 0.0 })
    }

    /// Factor `a`; on failure retry once with `rel_jitter · trace/dim` added
    /// to the diagonal.
    pub fn with_jitter(a: &DMatrix<f64>, rel_jitter: f64) -> Result<Self> {
        match Self::new(a) {
            Ok(f) => Ok(f),
            Err(Error::NotPositiveDefinite { index, pivot }) if rel_jitter > 0.0 => {
                let n = a.nrows();
                let jitter = rel_jitter * a.trace() / n as f64;
                log::warn!(
                    "cholesky failed at pivot {index} ({pivot:e}); retrying with diagonal jitter {jitter:e}"
                );
                let mut b = a.clone();
                for i in 0..n {
                    b[(i, i)] += jitter;
                }
                let mut f = Self::new(&b)?;
                f.jitter = jitter;
                Ok(f)
            }
            Err(e) => Err(e),
        }
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Solve A x = b.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        self.l.solve_lower_triangular_mut(&mut x);
        self.l.tr_solve_lower_triangular_mut(&mut x);
        x
    }

    /// Solve Lᵀ x = b; maps iid N(0, 1) draws to N(0, A⁻¹).
    pub fn solve_upper(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        self.l.tr_solve_lower_triangular_mut(&mut x);
        x
    }

    /// A⁻¹, symmetrized from its lower triangle.
    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut inv = DMatrix::identity(n, n);
        self.l.solve_lower_triangular_mut(&mut inv);
        self.l.tr_solve_lower_triangular_mut(&mut inv);
        for j in 0..n {
            for i in 0..j {
                inv[(i, j)] = inv[(j, i)];
            }
        }
        inv
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }
}
