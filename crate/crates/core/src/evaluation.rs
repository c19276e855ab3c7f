//! Per-minute scoring: one-vs-rest F1 per outcome class and the multiclass
//! Brier score.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Outcome};
use crate::error::{Error, Result};
use crate::forecast::ForecastTriple;

/// 3×3 tally indexed `[true][predicted]` in loss, draw, win order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; 3]; 3],
}

/// One-vs-rest collapse for a class: `a11` true and predicted in the class,
/// `a12` true in the class but predicted elsewhere, `a21` predicted in the
/// class but true elsewhere, `a22` neither.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OneVsRest {
    pub a11: usize,
    pub a12: usize,
    pub a21: usize,
    pub a22: usize,
}

impl ConfusionMatrix {
    pub fn tally(y_true: &[Outcome], y_pred: &[Outcome]) -> Result<Self> {
        if y_true.len() != y_pred.len() {
            return Err(Error::Dimension { expected: y_true.len(), got: y_pred.len() });
        }
        if y_true.is_empty() {
            return Err(Error::InvalidArgument("confusion matrix needs at least one match".into()));
        }
        let mut counts = [[0; 3]; 3];
        for (t, p) in y_true.iter().zip(y_pred) {
            counts[t.index()][p.index()] += 1;
        }
        Ok(Self { counts })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn collapse(&self, class: Outcome) -> OneVsRest {
        let c = class.index();
        let a11 = self.counts[c][c];
        let actual: usize = self.counts[c].iter().sum();
        let predicted: usize = (0..3).map(|r| self.counts[r][c]).sum();
        let a12 = actual - a11;
        let a21 = predicted - a11;
        OneVsRest { a11, a12, a21, a22: self.total() - a11 - a12 - a21 }
    }
}

/// Second component of the F1 harmonic mean.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum F1Variant {
    /// Precision a11 / (a11 + a21): standard one-vs-rest F1.
    #[default]
    Precision,
    /// True-negative rate a22 / (a22 + a21).
    Tnr,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// F1 per class in loss, draw, win order; `None` where a rate is undefined.
pub fn f1_per_class(c: &ConfusionMatrix, variant: F1Variant) -> [Option<f64>; 3] {
    Outcome::ALL.map(|class| {
        let k = c.collapse(class);
        let sen = ratio(k.a11, k.a11 + k.a12)?;
        let spc = match variant {
            F1Variant::Precision => ratio(k.a11, k.a11 + k.a21)?,
            F1Variant::Tnr => ratio(k.a22, k.a22 + k.a21)?,
        };
        Some(if sen + spc == 0.0 { 0.0 } else { 2.0 * sen * spc / (sen + spc) })
    })
}

/// Mean of the defined entries.
pub fn mean_defined(xs: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = xs.iter().flatten().copied().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Mean over matches of Σ_r (p_r − 1{y = r})².
pub fn brier(y_true: &[Outcome], probs: &[ForecastTriple]) -> Result<f64> {
    if y_true.len() != probs.len() {
        return Err(Error::Dimension { expected: y_true.len(), got: probs.len() });
    }
    if y_true.is_empty() {
        return Err(Error::InvalidArgument("Brier score needs at least one match".into()));
    }
    // Neumaier summation keeps the mean within an ulp or two of exact
    // however many matches there are.
    let (mut total, mut carry) = (0.0f64, 0.0f64);
    for (y, p) in y_true.iter().zip(probs) {
        p.validate()?;
        let term: f64 = p
            .as_array()
            .iter()
            .enumerate()
            .map(|(r, pr)| (pr - f64::from(u8::from(r == y.index()))).powi(2))
            .sum();
        let next = total + term;
        carry += if total.abs() >= term.abs() { (total - next) + term } else { (term - next) + total };
        total = next;
    }
    Ok((total + carry) / y_true.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinuteMetrics {
    pub minute: usize,
    pub f1: [Option<f64>; 3],
    pub brier: f64,
    pub n_test: usize,
    pub confusion: ConfusionMatrix,
}

impl MinuteMetrics {
    pub fn compute(
        minute: usize,
        y_true: &[Outcome],
        y_pred: &[Outcome],
        probs: &[ForecastTriple],
        variant: F1Variant,
    ) -> Result<Self> {
        let confusion = ConfusionMatrix::tally(y_true, y_pred)?;
        Ok(Self {
            minute,
            f1: f1_per_class(&confusion, variant),
            brier: brier(y_true, probs)?,
            n_test: y_true.len(),
            confusion,
        })
    }
}

/// Anything that turns a cut minute and a test set into per-match
/// probabilities and point predictions, in the test set's order.
pub trait Forecaster {
    fn forecast(&self, minute: usize, test: &Dataset) -> Result<Vec<(ForecastTriple, Outcome)>>;
}

/// Forecasts the same triple for every match.
pub struct ConstantForecaster(pub ForecastTriple);

impl Forecaster for ConstantForecaster {
    fn forecast(&self, _minute: usize, test: &Dataset) -> Result<Vec<(ForecastTriple, Outcome)>> {
        let p = self.0.as_array();
        let best = (0..3).fold(0, |b, i| if p[i] > p[b] { i } else { b });
        Ok(vec![(self.0, Outcome::ALL[best]); test.n()])
    }
}

/// Score `forecaster` at each minute.
pub fn metric_timeline<F: Forecaster + ?Sized>(
    forecaster: &F,
    minutes: &[usize],
    test: &Dataset,
    variant: F1Variant,
) -> Result<Vec<MinuteMetrics>> {
    let y = test.outcomes();
    minutes
        .iter()
        .map(|&t| {
            let out = forecaster.forecast(t, test)?;
            let probs: Vec<ForecastTriple> = out.iter().map(|o| o.0).collect();
            let pred: Vec<Outcome> = out.iter().map(|o| o.1).collect();
            MinuteMetrics::compute(t, &y, &pred, &probs, variant)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::MatchRecord;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    const L: Outcome = Outcome::Loss;
    const D: Outcome = Outcome::Draw;
    const W: Outcome = Outcome::Win;

    fn random_labels(n: usize, rng: &mut ChaCha20Rng) -> Vec<Outcome> {
        (0..n).map(|_| Outcome::ALL[rng.random_range(0..3)]).collect()
    }

    #[test]
    fn perfect_predictions() {
        let y = [L, D, W, W, L, D, D, W, L, W];
        let c = ConfusionMatrix::tally(&y, &y).unwrap();
        for class in Outcome::ALL {
            let k = c.collapse(class);
            assert_eq!((k.a12, k.a21), (0, 0));
        }
        assert_eq!(c.total(), 10);
        assert_eq!(f1_per_class(&c, F1Variant::Precision), [Some(1.0); 3]);
    }

    #[test]
    fn total_miss() {
        let c = ConfusionMatrix::tally(&[L; 6], &[W; 6]).unwrap();
        assert_eq!(c.collapse(W).a11, 0);
        let f1 = f1_per_class(&c, F1Variant::Precision);
        // loss: recall 0, precision undefined; draw: nothing at all; win: recall undefined
        assert_eq!(f1, [None, None, None]);
    }

    #[test]
    fn empty_class_is_undefined_not_zero() {
        let c = ConfusionMatrix::tally(&[L, W, L, W], &[L, W, W, W]).unwrap();
        let f1 = f1_per_class(&c, F1Variant::Precision);
        assert!(f1[1].is_none());
        assert_eq!(f1[0], Some(2.0 * 0.5 * 1.0 / 1.5));
        assert_eq!(mean_defined(&f1), Some((f1[0].unwrap() + f1[2].unwrap()) / 2.0));
    }

    #[test]
    fn tally_matches_double_loop_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let y = random_labels(20, &mut rng);
        let p = random_labels(20, &mut rng);
        let c = ConfusionMatrix::tally(&y, &p).unwrap();
        for (r, &tr) in Outcome::ALL.iter().enumerate() {
            for (s, &pr) in Outcome::ALL.iter().enumerate() {
                let n = (0..20).filter(|&i| y[i] == tr && p[i] == pr).count();
                assert_eq!(c.counts[r][s], n);
            }
        }
        for class in Outcome::ALL {
            let k = c.collapse(class);
            assert_eq!(k.a11 + k.a12 + k.a21 + k.a22, 20);
            assert_eq!(k.a11 + k.a12, y.iter().filter(|&&v| v == class).count());
            assert_eq!(k.a11 + k.a21, p.iter().filter(|&&v| v == class).count());
        }
    }

    #[test]
    fn f1_matches_formula_on_known_counts() {
        // rows true, columns predicted
        let c = ConfusionMatrix { counts: [[5, 2, 1], [3, 4, 2], [0, 1, 7]] };
        let f1 = f1_per_class(&c, F1Variant::Precision);
        let want = |tp: f64, fnn: f64, fp: f64| {
            let (r, p) = (tp / (tp + fnn), tp / (tp + fp));
            2.0 * r * p / (r + p)
        };
        assert!((f1[0].unwrap() - want(5.0, 3.0, 3.0)).abs() < 1e-15);
        assert!((f1[1].unwrap() - want(4.0, 5.0, 3.0)).abs() < 1e-15);
        assert!((f1[2].unwrap() - want(7.0, 1.0, 3.0)).abs() < 1e-15);
        let tnr = f1_per_class(&c, F1Variant::Tnr);
        // loss: recall 5/8, tnr 14/17
        let (r, s) = (5.0 / 8.0, 14.0 / 17.0);
        assert!((tnr[0].unwrap() - 2.0 * r * s / (r + s)).abs() < 1e-15);
    }

    #[test]
    fn brier_extremes() {
        let y = [L, D, W];
        let perfect: Vec<ForecastTriple> =
            y.iter().map(|o| ForecastTriple::new(f64::from(*o == L), f64::from(*o == D), f64::from(*o == W)).unwrap()).collect();
        assert_eq!(brier(&y, &perfect).unwrap(), 0.0);
        assert!((brier(&y, &[ForecastTriple::UNIFORM; 3]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let many = vec![D; 100_003];
        let u = brier(&many, &vec![ForecastTriple::UNIFORM; many.len()]).unwrap();
        assert!((u - 2.0 / 3.0).abs() <= 2.0 * f64::EPSILON, "{u}");
        let wrong = ForecastTriple::new(0.0, 0.0, 1.0).unwrap();
        assert_eq!(brier(&[L], &[wrong]).unwrap(), 2.0);
        let bad = ForecastTriple { p_loss: 0.5, p_draw: 0.5, p_win: 0.5 };
        assert!(brier(&[L], &[bad]).is_err());
    }

    #[test]
    fn true_probabilities_beat_perturbations() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let truth = [0.2, 0.3, 0.5];
        let n = 200_000;
        let y: Vec<Outcome> = (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                if u < truth[0] { L } else if u < truth[0] + truth[1] { D } else { W }
            })
            .collect();
        let score = |p: [f64; 3]| brier(&y, &vec![ForecastTriple::new(p[0], p[1], p[2]).unwrap(); n]).unwrap();
        let best = score(truth);
        for p in [[0.25, 0.25, 0.5], [0.2, 0.35, 0.45], [0.15, 0.3, 0.55]] {
            assert!(best <= score(p));
        }
    }

    #[test]
    fn ordering_does_not_change_scores() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let y = random_labels(30, &mut rng);
        let p = random_labels(30, &mut rng);
        let mut idx: Vec<usize> = (0..30).collect();
        idx.reverse();
        let a = f1_per_class(&ConfusionMatrix::tally(&y, &p).unwrap(), F1Variant::Precision);
        let yr: Vec<Outcome> = idx.iter().map(|&i| y[i]).collect();
        let pr: Vec<Outcome> = idx.iter().map(|&i| p[i]).collect();
        assert_eq!(a, f1_per_class(&ConfusionMatrix::tally(&yr, &pr).unwrap(), F1Variant::Precision));
    }

    #[test]
    fn constant_forecaster_gives_flat_series() {
        let matches = (0..12)
            .map(|i| MatchRecord::new(format!("m{i}"), Outcome::ALL[i % 3], 0.0, 0.0, 1))
            .collect();
        let test = Dataset::new(1, matches).unwrap();
        let f = ConstantForecaster(ForecastTriple::new(0.3, 0.3, 0.4).unwrap());
        let series = metric_timeline(&f, &[1, 30, 90], &test, F1Variant::Precision).unwrap();
        assert!(series.windows(2).all(|w| w[0].brier == w[1].brier && w[0].f1 == w[1].f1));
        assert!(series.iter().all(|m| m.confusion.total() == 12));
    }
}
