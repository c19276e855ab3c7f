//! Covariate matrix at a cut minute t.
//!
//! The matrix is stored column-per-match, `(p + 2Kt) × n`. Rows follow one
//! fixed layout shared with the prior:
//!
//! ```text
//! [ z_1 .. z_p | kind 1: H minutes 1..t, A minutes 1..t | kind 2: ... ]
//! ```
//!
//! Event rows hold per-minute counts, not cumulative totals.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, EventKind, MatchRecord, Side, MINUTES};
use crate::error::{Error, Result};

/// Time-invariant covariates: home and away strength.
pub const STRENGTH_COVARIATES: usize = 2;

/// Row ordering for a given (p, K, t).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowLayout {
    pub p: usize,
    pub kinds: usize,
    pub t: usize,
}

/// What a design row (equivalently a coefficient) refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowLabel {
    Static(usize),
    Event { kind: usize, minute: usize, side: Side },
}

impl RowLabel {
    pub fn name(&self) -> String {
        match *self {
            RowLabel::Static(0) => "gamma_home".to_string(),
            RowLabel::Static(1) => "gamma_away".to_string(),
            RowLabel::Static(i) => format!("gamma_{}", i + 1),
            RowLabel::Event { kind, minute, side } => {
                let name = EventKind::from_index(kind).map_or_else(|| format!("kind{}", kind + 1), |k| k.to_string());
                format!("beta_{name}_{}_{}", side.code(), minute)
            }
        }
    }
}

impl RowLayout {
    pub fn new(p: usize, kinds: usize, t: usize) -> Self {
        Self { p, kinds, t }
    }

    /// Layout for match data at cut minute `t`.
    pub fn for_matches(kinds: usize, t: usize) -> Result<Self> {
        if !(1..=MINUTES).contains(&t) {
            return Err(Error::InvalidArgument(format!("cut minute {t} outside 1..=90")));
        }
        Ok(Self::new(STRENGTH_COVARIATES, kinds, t))
    }

    pub fn dim(&self) -> usize {
        self.p + 2 * self.kinds * self.t
    }

    /// 0-based row of the count for 0-based `kind`, 1-based `minute ≤ t`.
    pub fn event_row(&self, kind: usize, minute: usize, side: Side) -> usize {
        debug_assert!(kind < self.kinds && (1..=self.t).contains(&minute));
        self.p + kind * 2 * self.t + side.index() * self.t + (minute - 1)
    }

    /// First row of the 2t-wide block for `kind`.
    pub fn block_start(&self, kind: usize) -> usize {
        self.p + kind * 2 * self.t
    }

    pub fn label(&self, row: usize) -> RowLabel {
        assert!(row < self.dim(), "row {row} out of range");
        if row < self.p {
            return RowLabel::Static(row);
        }
        let r = row - self.p;
        let kind = r / (2 * self.t);
        let within = r % (2 * self.t);
        let side = if within < self.t { Side::Home } else { Side::Away };
        RowLabel::Event { kind, minute: within % self.t + 1, side }
    }
}

/// Z-score transform for the two strength columns, fitted on training data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    #[serde(with = "crate::precise")]
    pub home_mean: f64,
    #[serde(with = "crate::precise")]
    pub home_sd: f64,
    #[serde(with = "crate::precise")]
    pub away_mean: f64,
    #[serde(with = "crate::precise")]
    pub away_sd: f64,
}

impl Standardizer {
    pub fn identity() -> Self {
        Self { home_mean: 0.0, home_sd: 1.0, away_mean: 0.0, away_sd: 1.0 }
    }

    /// Population mean and standard deviation per column; a zero spread
    /// falls back to unit scale.
    pub fn fit(d: &Dataset) -> Self {
        fn moments(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
            let n = xs.clone().count() as f64;
            let mean = xs.clone().sum::<f64>() / n;
            let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            (mean, if sd > 0.0 && sd.is_finite() { sd } else { 1.0 })
        }
        let (home_mean, home_sd) = moments(d.matches().iter().map(|m| m.home_strength));
        let (away_mean, away_sd) = moments(d.matches().iter().map(|m| m.away_strength));
        Self { home_mean, home_sd, away_mean, away_sd }
    }

    pub fn home(&self, x: f64) -> f64 {
        (x - self.home_mean) / self.home_sd
    }

    pub fn away(&self, x: f64) -> f64 {
        (x - self.away_mean) / self.away_sd
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    layout: RowLayout,
    values: DMatrix<f64>,
    match_ids: Vec<String>,
}

/// Write one match's covariate column at the layout's cut minute into `col`.
pub fn fill_column(layout: &RowLayout, m: &MatchRecord, std: &Standardizer, col: &mut [f64]) {
    debug_assert_eq!(col.len(), layout.dim());
    col[0] = std.home(m.home_strength);
    col[1] = std.away(m.away_strength);
    for kind in 0..layout.kinds {
        for side in Side::BOTH {
            for minute in 1..=layout.t {
                col[layout.event_row(kind, minute, side)] = f64::from(m.counts.get(kind, minute, side));
            }
        }
    }
}

impl DesignMatrix {
    /// Assemble from an explicit `dim × n` matrix.
    pub fn from_parts(layout: RowLayout, values: DMatrix<f64>, match_ids: Vec<String>) -> Result<Self> {
        if values.nrows() != layout.dim() {
            return Err(Error::Dimension { expected: layout.dim(), got: values.nrows() });
        }
        if values.ncols() != match_ids.len() {
            return Err(Error::Dimension { expected: values.ncols(), got: match_ids.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("design matrix has non-finite entries".into()));
        }
        Ok(Self { layout, values, match_ids })
    }

    /// Design at cut minute `t` for every match of `d`.
    pub fn build(d: &Dataset, t: usize, std: &Standardizer) -> Result<Self> {
        let layout = RowLayout::for_matches(d.kinds(), t)?;
        let mut values = DMatrix::zeros(layout.dim(), d.n());
        for (i, m) in d.matches().iter().enumerate() {
            fill_column(&layout, m, std, values.column_mut(i).as_mut_slice());
        }
        let match_ids = d.matches().iter().map(|m| m.match_id.clone()).collect();
        Ok(Self { layout, values, match_ids })
    }

    pub fn layout(&self) -> &RowLayout {
        &self.layout
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn match_ids(&self) -> &[String] {
        &self.match_ids
    }

    pub fn t(&self) -> usize {
        self.layout.t
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn n(&self) -> usize {
        self.values.ncols()
    }

    /// Mᵀν, one latent mean per match.
    pub fn latent_mean(&self, nu: &DVector<f64>) -> Result<DVector<f64>> {
        if nu.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: nu.len() });
        }
        Ok(self.values.tr_mul(nu))
    }

    /// M v for a length-n vector v.
    pub fn weighted_sum(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.n() {
            return Err(Error::Dimension { expected: self.n(), got: v.len() });
        }
        Ok(&self.values * v)
    }

    /// Debug dump: one line per row with its label, one column per match.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["row".to_string(), "label".to_string()];
        header.extend(self.match_ids.iter().cloned());
        wtr.write_record(&header)?;
        for r in 0..self.dim() {
            let mut rec = vec![r.to_string(), self.layout.label(r).name()];
            rec.extend(self.values.row(r).iter().map(|v| v.to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{MatchRecord, Outcome};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use std::collections::HashSet;

    fn dataset(n: usize) -> Dataset {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let ms = (0..n)
            .map(|i| {
                let mut m = MatchRecord::new(format!("m{i}"), Outcome::Win, rng.random_range(60.0..85.0), 75.0, 8);
                for _ in 0..20 {
                    let side = if rng.random_bool(0.5) { Side::Home } else { Side::Away };
                    m.counts.add(rng.random_range(0..8), rng.random_range(1..=90), side, 1);
                }
                m
            })
            .collect();
        Dataset::new(8, ms).unwrap()
    }

    #[test]
    fn shapes_follow_dimension_formula() {
        let d = dataset(100);
        let m = DesignMatrix::build(&d, 30, &Standardizer::fit(&d)).unwrap();
        assert_eq!((m.dim(), m.n()), (482, 100));
        let m = DesignMatrix::build(&d, 90, &Standardizer::fit(&d)).unwrap();
        assert_eq!(m.dim(), 1442);
        assert!(DesignMatrix::build(&d, 0, &Standardizer::identity()).is_err());
        assert!(DesignMatrix::build(&d, 91, &Standardizer::identity()).is_err());
    }

    #[test]
    fn single_goal_is_a_basis_vector_in_its_block() {
        let mut m = MatchRecord::new("g", Outcome::Win, 70.0, 70.0, 8);
        m.counts.add(EventKind::Goal.index(), 7, Side::Home, 1);
        let d = Dataset::new(8, vec![m]).unwrap();
        let x = DesignMatrix::build(&d, 10, &Standardizer::identity()).unwrap();
        let start = x.layout().block_start(0);
        let block: Vec<f64> = (0..10).map(|j| x.values()[(start + j, 0)]).collect();
        let mut e7 = vec![0.0; 10];
        e7[6] = 1.0;
        assert_eq!(block, e7);
        assert_eq!(x.values().column(0).iter().skip(2).sum::<f64>(), 1.0);
    }

    #[test]
    fn row_index_is_a_bijection_with_labels() {
        let layout = RowLayout::new(2, 3, 7);
        let mut seen = HashSet::new();
        for kind in 0..3 {
            for side in Side::BOTH {
                for minute in 1..=7 {
                    let r = layout.event_row(kind, minute, side);
                    assert!(r >= 2 && r < layout.dim());
                    assert!(seen.insert(r));
                    assert_eq!(layout.label(r), RowLabel::Event { kind, minute, side });
                }
            }
        }
        assert_eq!(seen.len(), layout.dim() - 2);
    }

    #[test]
    fn cut_t_is_nested_in_cut_t_plus_one() {
        let d = dataset(15);
        let std = Standardizer::fit(&d);
        let small = DesignMatrix::build(&d, 12, &std).unwrap();
        let big = DesignMatrix::build(&d, 13, &std).unwrap();
        for r in 0..small.dim() {
            let big_row = match small.layout().label(r) {
                RowLabel::Static(i) => i,
                RowLabel::Event { kind, minute, side } => big.layout().event_row(kind, minute, side),
            };
            assert_eq!(small.values().row(r), big.values().row(big_row));
        }
    }

    #[test]
    fn latent_mean_matches_naive_product() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let layout = RowLayout::new(5, 0, 1);
        let vals = DMatrix::from_fn(5, 3, |_, _| rng.random_range(-2.0..2.0));
        let nu = DVector::from_fn(5, |_, _| rng.random_range(-2.0..2.0));
        let m = DesignMatrix::from_parts(layout, vals.clone(), vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let got = m.latent_mean(&nu).unwrap();
        for i in 0..3 {
            let mut acc = 0.0;
            for r in 0..5 {
                acc += vals[(r, i)] * nu[r];
            }
            assert!((got[i] - acc).abs() < 1e-12);
        }
        assert_eq!(m.latent_mean(&DVector::zeros(5)).unwrap(), DVector::zeros(3));
        assert!(m.latent_mean(&DVector::zeros(4)).is_err());
    }

    #[test]
    fn basis_column_extracts_coordinate() {
        let mut vals = DMatrix::zeros(4, 1);
        vals[(2, 0)] = 1.0;
        let m = DesignMatrix::from_parts(RowLayout::new(4, 0, 1), vals, vec!["x".into()]).unwrap();
        let nu = DVector::from_vec(vec![0.3, -1.0, 2.5, 7.0]);
        assert_eq!(m.latent_mean(&nu).unwrap()[0], 2.5);
    }

    #[test]
    fn standardizer_z_scores() {
        let d = dataset(50);
        let std = Standardizer::fit(&d);
        let z: Vec<f64> = d.matches().iter().map(|m| std.home(m.home_strength)).collect();
        let mean = z.iter().sum::<f64>() / 50.0;
        let var = z.iter().map(|v| v * v).sum::<f64>() / 50.0;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
        // constant away strength falls back to unit scale
        assert_eq!(std.away_sd, 1.0);
    }
}
