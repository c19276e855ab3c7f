//! Prior hyperparameters and the block-diagonal prior covariance of ν.
//!
//! Strength coefficients get an identity block. Each event kind gets a
//! `2t × 2t` block `diag(C, C)` (home minutes, then away minutes) with
//! `C[a][b] = g(|a - b|)` and `g(x) = scale · exp(-rate · x)`. Distinct kinds
//! and the two sides are uncorrelated.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::design::RowLayout;
use crate::error::{Error, Result};
use crate::linalg::CholeskyFactor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    /// Latent error variance σ_y², held fixed.
    #[serde(with = "crate::precise")]
    pub sigma_y2: f64,
    /// Scale of the N(0, τ²) distribution whose CDF maps cutoffs onto the
    /// Dirichlet simplex.
    #[serde(with = "crate::precise")]
    pub tau: f64,
    /// Dirichlet concentrations for (loss, draw, win).
    #[serde(with = "crate::precise")]
    pub alpha: [f64; 3],
    #[serde(with = "crate::precise")]
    pub kernel_scale: f64,
    #[serde(with = "crate::precise")]
    pub kernel_rate: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self { sigma_y2: 1.0, tau: 300.0, alpha: [2.0; 3], kernel_scale: 1.0, kernel_rate: 1.0 }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("sigma_y2", self.sigma_y2),
            ("tau", self.tau),
            ("alpha1", self.alpha[0]),
            ("alpha2", self.alpha[1]),
            ("alpha3", self.alpha[2]),
            ("kernel_scale", self.kernel_scale),
            ("kernel_rate", self.kernel_rate),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("prior {name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}

/// Prior covariance between coefficients of the same kind and side that are
/// `dt` minutes apart.
pub fn kernel_g(dt: f64, spec: &PriorSpec) -> f64 {
    debug_assert!(dt >= 0.0);
    spec.kernel_scale * (-spec.kernel_rate * dt).exp()
}

/// The `t × t` within-side kernel matrix C.
pub fn kernel_matrix(t: usize, spec: &PriorSpec) -> DMatrix<f64> {
    DMatrix::from_fn(t, t, |a, b| kernel_g(a.abs_diff(b) as f64, spec))
}

#[derive(Clone, Debug)]
pub struct PriorCovariance {
    layout: RowLayout,
    sigma0: DMatrix<f64>,
    kernel_factor: Option<CholeskyFactor>,
}

impl PriorCovariance {
    /// Assemble Σ₀ for the given layout.
    pub fn build(layout: RowLayout, spec: &PriorSpec) -> Result<Self> {
        spec.validate()?;
        let dim = layout.dim();
        let t = layout.t;
        let c = kernel_matrix(t, spec);
        let kernel_factor = if layout.kinds > 0 { Some(CholeskyFactor::new(&c)?) } else { None };

        let mut sigma0 = DMatrix::zeros(dim, dim);
        for i in 0..layout.p {
            sigma0[(i, i)] = 1.0;
        }
        for kind in 0..layout.kinds {
            for side in 0..2 {
                let off = layout.block_start(kind) + side * t;
                for b in 0..t {
                    for a in b..t {
                        sigma0[(off + a, off + b)] = c[(a, b)];
                    }
                }
            }
        }
        // mirror the lower triangle so symmetry is exact
        for j in 0..dim {
            for i in 0..j {
                sigma0[(i, j)] = sigma0[(j, i)];
            }
        }
        Ok(Self { layout, sigma0, kernel_factor })
    }

    /// Σ₀ for `p` static covariates, `kinds` event kinds and cut minute `t`.
    pub fn for_dims(p: usize, kinds: usize, t: usize, spec: &PriorSpec) -> Result<Self> {
        if p == 0 || t == 0 {
            return Err(Error::InvalidArgument("p and t must be at least 1".into()));
        }
        Self::build(RowLayout::new(p, kinds, t), spec)
    }

    pub fn layout(&self) -> &RowLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.sigma0
    }

    /// Σ₀⁻¹, built blockwise from a single inversion of C.
    pub fn precision(&self) -> DMatrix<f64> {
        let dim = self.layout.dim();
        let t = self.layout.t;
        let mut prec = DMatrix::zeros(dim, dim);
        for i in 0..self.layout.p {
            prec[(i, i)] = 1.0;
        }
        if let Some(f) = &self.kernel_factor {
            let c_inv = f.inverse();
            for kind in 0..self.layout.kinds {
                for side in 0..2 {
                    let off = self.layout.block_start(kind) + side * t;
                    prec.view_mut((off, off), (t, t)).copy_from(&c_inv);
                }
            }
        }
        prec
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Side;
    use crate::design::RowLabel;

    fn spec(scale: f64, rate: f64) -> PriorSpec {
        PriorSpec { kernel_scale: scale, kernel_rate: rate, ..PriorSpec::default() }
    }

    #[test]
    fn kernel_values() {
        let s = spec(1.0, 1.0);
        assert_eq!(kernel_g(0.0, &s), 1.0);
        assert!((kernel_g(1.0, &s) - 0.367_879_441_171_442_3).abs() < 1e-15);
        for &(a, b) in &[(0.3, 1.7), (2.0, 5.0), (0.0, 9.5)] {
            assert!((kernel_g(a, &s) * kernel_g(b, &s) - kernel_g(a + b, &s)).abs() < 1e-12);
        }
        assert!(kernel_g(3.0, &s) < kernel_g(2.0, &s));
    }

    #[test]
    fn smallest_case() {
        let s = spec(2.5, 1.0);
        let p = PriorCovariance::for_dims(2, 1, 1, &s).unwrap();
        let expected = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, 2.5, 2.5]));
        assert_eq!(p.matrix(), &expected);
    }

    #[test]
    fn two_minute_block_has_no_cross_side_covariance() {
        let p = PriorCovariance::for_dims(2, 1, 2, &spec(1.0, 1.0)).unwrap();
        let e = (-1.0f64).exp();
        let m = p.matrix();
        let block = m.view((2, 2), (4, 4)).into_owned();
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(4, 4, &[
            1.0, e, 0.0, 0.0,
            e, 1.0, 0.0, 0.0,
            0.0, 0.0, 1.0, e,
            0.0, 0.0, e, 1.0,
        ]);
        assert!((block - expected).abs().max() < 1e-15);
    }

    /// Independent assembly: decide every entry from the row labels alone.
    fn oracle(layout: RowLayout, s: &PriorSpec) -> DMatrix<f64> {
        DMatrix::from_fn(layout.dim(), layout.dim(), |i, j| match (layout.label(i), layout.label(j)) {
            (RowLabel::Static(a), RowLabel::Static(b)) => f64::from(u8::from(a == b)),
            (
                RowLabel::Event { kind: k1, minute: m1, side: s1 },
                RowLabel::Event { kind: k2, minute: m2, side: s2 },
            ) if k1 == k2 && s1 == s2 => s.kernel_scale * (-s.kernel_rate * (m1 as f64 - m2 as f64).abs()).exp(),
            _ => 0.0,
        })
    }

    #[test]
    fn matches_entrywise_oracle() {
        let s = spec(1.7, 0.4);
        for &(p, k, t) in &[(2, 1, 1), (2, 3, 4), (1, 2, 9), (3, 8, 5)] {
            let got = PriorCovariance::for_dims(p, k, t, &s).unwrap();
            let want = oracle(RowLayout::new(p, k, t), &s);
            assert!((got.matrix() - want).abs().max() < 1e-14);
            assert_eq!(got.matrix(), &got.matrix().transpose());
        }
    }

    #[test]
    fn precision_matches_closed_form_ar1_inverse() {
        // C = s ρ^|a-b| has the tridiagonal inverse
        // (1/(s(1-ρ²))) · tridiag(-ρ; 1, 1+ρ², …, 1+ρ², 1; -ρ).
        let s = spec(1.3, 0.7);
        let t = 6;
        let p = PriorCovariance::for_dims(2, 2, t, &s).unwrap();
        let prec = p.precision();
        let rho = (-0.7f64).exp();
        let k = 1.0 / (1.3 * (1.0 - rho * rho));
        let layout = *p.layout();
        for kind in 0..2 {
            for side in Side::BOTH {
                for a in 1..=t {
                    for b in 1..=t {
                        let want = if a == b {
                            if a == 1 || a == t { k } else { k * (1.0 + rho * rho) }
                        } else if a.abs_diff(b) == 1 {
                            -k * rho
                        } else {
                            0.0
                        };
                        let got = prec[(layout.event_row(kind, a, side), layout.event_row(kind, b, side))];
                        assert!((got - want).abs() < 1e-10, "{a},{b}: {got} vs {want}");
                    }
                }
            }
        }
        let id = p.matrix() * &prec;
        assert!((id - DMatrix::identity(layout.dim(), layout.dim())).abs().max() < 1e-10);
    }

    #[test]
    fn positive_definite_up_to_full_match() {
        for t in [1, 10, 45, 90] {
            let c = kernel_matrix(t, &PriorSpec::default());
            assert!(CholeskyFactor::new(&c).is_ok());
        }
    }

    #[test]
    fn fast_decay_is_diagonal() {
        let c = kernel_matrix(90, &spec(1.0, 50.0));
        let off = (0..90)
            .flat_map(|a| (0..90).map(move |b| (a, b)))
            .filter(|(a, b)| a != b)
            .map(|(a, b)| c[(a, b)].abs())
            .fold(0.0, f64::max);
        assert!(off < 1e-12);
    }

    #[test]
    fn rejects_bad_spec() {
        let bad = PriorSpec { tau: 0.0, ..PriorSpec::default() };
        assert!(PriorCovariance::for_dims(2, 1, 3, &bad).is_err());
        let bad = PriorSpec { alpha: [2.0, -1.0, 2.0], ..PriorSpec::default() };
        assert!(bad.validate().is_err());
    }
}
