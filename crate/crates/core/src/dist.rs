//! Scalar distribution helpers: the standard normal CDF and quantile, a
//! tail-safe truncated normal sampler, and a truncated Beta sampler.
//!
//! Every sampler here works by inverting a CDF on a single uniform draw,
//! so the draws are reproducible from the generator state alone.

use rand::RngCore;
use statrs::function::beta::{beta_reg, inv_beta_reg};
use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

/// ln(sqrt(2π))
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Upper-tail mass below which the inverse CDF switches to the
/// log-space Mills-ratio solver.
pub const TAIL_SWITCH: f64 = 1e-15;

/// Uniform draw on the open interval (0, 1).
pub fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Standard normal CDF Φ(x).
pub fn normal_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * erfc(-x * FRAC_1_SQRT_2)
    }
}

/// Standard normal survival function 1 - Φ(x), accurate in the upper tail.
pub fn normal_sf(x: f64) -> f64 {
    normal_cdf(-x)
}

/// Standard normal quantile Φ⁻¹(p). Returns ±∞ at the endpoints.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        -SQRT_2 * erfc_inv(2.0 * p)
    }
}

/// Mills ratio Q(x)/φ(x) by backward evaluation of Laplace's continued
/// fraction. Only used for x ≥ 5, where 80 terms reach machine precision.
fn mills_ratio(x: f64) -> f64 {
    debug_assert!(x >= 5.0);
    let mut t = x;
    for k in (1..=80).rev() {
        t = x + k as f64 / t;
    }
    1.0 / t
}

/// ln(1 - Φ(x)), finite for every finite x.
pub fn log_normal_sf(x: f64) -> f64 {
    if x == f64::INFINITY {
        f64::NEG_INFINITY
    } else if x >= 5.0 {
        -0.5 * x * x - LN_SQRT_2PI + mills_ratio(x).ln()
    } else {
        normal_sf(x).ln()
    }
}

/// Inverse of `log_normal_sf` on [a, ∞) for a ≥ 5 by Newton iteration.
/// ln Q is concave, so after the first step the iterates approach the root
/// monotonically from the right.
fn inverse_log_sf(target: f64, start: f64) -> f64 {
    let mut x = start;
    for _ in 0..100 {
        let step = (log_normal_sf(x) - target) * mills_ratio(x);
        x += step;
        if step.abs() <= 1e-15 * x {
            break;
        }
    }
    x
}

/// Draw from the standard normal truncated to the upper region [a, b], a ≥ 0.
fn upper_truncated(a: f64, b: f64, u: f64) -> f64 {
    let qa = normal_sf(a);
    if qa >= TAIL_SWITCH {
        let qb = normal_sf(b);
        let q = qa - u * (qa - qb);
        -normal_quantile(q)
    } else {
        let lqa = log_normal_sf(a);
        let lqb = log_normal_sf(b);
        // ln(Q(a) - u (Q(a) - Q(b))) without forming Q(a)
        let target = lqa + (-u * -(lqb - lqa).exp_m1()).ln_1p();
        inverse_log_sf(target, a)
    }
}

/// Inverse CDF of the standard normal truncated to [a, b] evaluated at u.
///
/// The result always lies in [a, b]; equal bounds return the bound.
pub fn truncated_standard_normal_inv(a: f64, b: f64, u: f64) -> f64 {
    debug_assert!(a <= b, "empty truncation interval [{a}, {b}]");
    if a >= b {
        return a;
    }
    let x = if a >= 0.0 {
        upper_truncated(a, b, u)
    } else if b <= 0.0 {
        -upper_truncated(-b, -a, 1.0 - u)
    } else {
        // Interval straddles zero: invert from whichever side the target
        // mass falls on so neither end rounds to a probability of 0 or 1.
        let lower_mass = 0.5 - normal_cdf(a);
        let upper_mass = 0.5 - normal_sf(b);
        let mass = lower_mass + upper_mass;
        let from_below = u * mass;
        if from_below <= lower_mass {
            normal_quantile(normal_cdf(a) + from_below)
        } else {
            -normal_quantile(normal_sf(b) + (1.0 - u) * mass)
        }
    };
    x.clamp(a, b)
}

/// Draw from N(mean, sd²) truncated to [lower, upper].
pub fn sample_truncated_normal<R: RngCore + ?Sized>(
    mean: f64,
    sd: f64,
    lower: f64,
    upper: f64,
    rng: &mut R,
) -> f64 {
    let a = (lower - mean) / sd;
    let b = (upper - mean) / sd;
    let z = truncated_standard_normal_inv(a, b, open_unit(rng));
    (mean + sd * z).clamp(lower, upper)
}

/// Mean of N(mean, sd²) truncated to [lower, upper]; used by tests and
/// diagnostics, not by the sampler.
pub fn truncated_normal_mean(mean: f64, sd: f64, lower: f64, upper: f64) -> f64 {
    let a = (lower - mean) / sd;
    let b = (upper - mean) / sd;
    mean + sd * standard_truncated_mean(a, b)
}

fn standard_truncated_mean(a: f64, b: f64) -> f64 {
    if b <= 0.0 {
        return -standard_truncated_mean(-b, -a);
    }
    if a >= 5.0 && b == f64::INFINITY {
        return 1.0 / mills_ratio(a);
    }
    let pa = if a.is_finite() { normal_pdf(a) } else { 0.0 };
    let pb = if b.is_finite() { normal_pdf(b) } else { 0.0 };
    let mass = if a > 0.0 { normal_sf(a) - normal_sf(b) } else { normal_cdf(b) - normal_cdf(a) };
    (pa - pb) / mass
}

/// Regularized incomplete beta I_x(a, b), clamped to the unit interval.
pub fn beta_cdf(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        beta_reg(a, b, x)
    }
}

/// Beta(a, b) quantile.
pub fn beta_quantile(a: f64, b: f64, p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else if p >= 1.0 {
        1.0
    } else {
        inv_beta_reg(a, b, p).clamp(0.0, 1.0)
    }
}

/// Draw from Beta(a, b) restricted to [lo, hi] ⊂ [0, 1] by inverse CDF.
///
/// When the window sits in the upper half the complementary variable
/// 1 - ω ~ Beta(b, a) is inverted instead, which keeps resolution near 1.
pub fn sample_truncated_beta<R: RngCore + ?Sized>(
    a: f64,
    b: f64,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> f64 {
    debug_assert!(lo <= hi);
    if lo >= hi {
        return lo;
    }
    let u = open_unit(rng);
    let w = if lo > 0.5 {
        let (clo, chi) = (1.0 - hi, 1.0 - lo);
        let (flo, fhi) = (beta_cdf(b, a, clo), beta_cdf(b, a, chi));
        1.0 - beta_quantile(b, a, flo + u * (fhi - flo))
    } else {
        let (flo, fhi) = (beta_cdf(a, b, lo), beta_cdf(a, b, hi));
        beta_quantile(a, b, flo + u * (fhi - flo))
    };
    w.clamp(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn cdf_table_values() {
        assert_relative_eq!(normal_cdf(0.0), 0.5, epsilon = 1e-16);
        assert_relative_eq!(normal_cdf(-0.5), 0.308_537_538_725_986_9, epsilon = 1e-15);
        assert_relative_eq!(normal_cdf(1.959_963_984_540_054), 0.975, epsilon = 1e-15);
        assert_relative_eq!(normal_sf(10.0), 7.619_853_024_160_527e-24, max_relative = 1e-12);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-300, 1e-20, 1e-8, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-12] {
            let x = normal_quantile(p);
            assert_relative_eq!(normal_cdf(x), p, max_relative = 1e-10);
        }
    }

    #[test]
    fn log_sf_continuous_at_switch() {
        let below = normal_sf(4.999_999_999).ln();
        let above = log_normal_sf(5.0);
        assert!((below - above).abs() < 1e-8);
        // asymptotic form: ln Q(x) ≈ -x²/2 - ln(x √(2π))
        let x = 40.0;
        let approx = -0.5 * x * x - (x * (2.0 * std::f64::consts::PI).sqrt()).ln();
        assert!((log_normal_sf(x) - approx).abs() < 1e-3);
    }

    #[test]
    fn far_tail_draws_are_finite_and_bounded() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for &a in &[8.5, 20.0, 60.0] {
            let mut sum = 0.0;
            for _ in 0..2000 {
                let x = sample_truncated_normal(0.0, 1.0, a, f64::INFINITY, &mut rng);
                assert!(x.is_finite() && x >= a);
                sum += x;
            }
            // E[X | X > a] ≈ a + 1/a for large a
            let mean = sum / 2000.0;
            assert!((mean - truncated_normal_mean(0.0, 1.0, a, f64::INFINITY)).abs() < 0.05 / a.sqrt());
        }
    }

    #[test]
    fn interval_inverse_hits_endpoints() {
        let x0 = truncated_standard_normal_inv(-1.0, 2.0, 1e-17);
        let x1 = truncated_standard_normal_inv(-1.0, 2.0, 1.0 - 1e-16);
        assert!((x0 + 1.0).abs() < 1e-9 && (x1 - 2.0).abs() < 1e-6);
        assert_eq!(truncated_standard_normal_inv(3.0, 3.0, 0.4), 3.0);
        // left tail via reflection
        let x = truncated_standard_normal_inv(f64::NEG_INFINITY, -30.0, 0.5);
        assert!(x <= -30.0 && x > -30.1);
    }

    #[test]
    fn beta_quantile_matches_bisection() {
        for &(a, b) in &[(2.0, 2.0), (0.5, 3.0), (7.0, 1.5)] {
            for &p in &[1e-6, 0.1, 0.5, 0.93] {
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if beta_cdf(a, b, mid) < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                assert_relative_eq!(beta_quantile(a, b, p), 0.5 * (lo + hi), max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn truncated_beta_respects_window() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for &(lo, hi) in &[(0.0, 1.0), (0.2, 0.3), (0.9, 0.999_999), (0.5, 0.5)] {
            for _ in 0..500 {
                let w = sample_truncated_beta(2.0, 2.0, lo, hi, &mut rng);
                assert!(w >= lo && w <= hi);
            }
        }
    }
}
