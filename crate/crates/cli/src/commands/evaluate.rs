use std::collections::{BTreeMap, HashMap};

use matchcast::baseline::{fit_ordered_probit_mle, predict_ordered_probit, MleOptions};
use matchcast::data::{Dataset, Outcome};
use matchcast::design::{DesignMatrix, Standardizer};
use matchcast::evaluation::{F1Variant, MinuteMetrics};
use matchcast::fit::canonical_order;
use matchcast::forecast::{ForecastTriple, MatchForecast};
use matchcast::precise;
use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::{EvaluateArgs, ModelArg};
use crate::artifact::{config_hash, csv_bytes, fmt_opt, meta_path, read_json, write_csv, write_json, CsvMeta};
use crate::commands::forecast::{forecast_row, read_forecasts, HEADER};
use crate::error::{CliError, CliResult};
use crate::run::{Run, FORECASTS};

pub const METRICS_HEADER: [&str; 6] = ["minute", "f1_loss", "f1_draw", "f1_win", "brier", "n_test"];

pub fn metrics_file(model: ModelArg) -> &'static str {
    match model {
        ModelArg::Bayes => "metrics.csv",
        ModelArg::Glm => "metrics_glm.csv",
    }
}

pub const GLM_FORECASTS: &str = "forecasts_glm.csv";
pub const COMPARISON: &str = "comparison.csv";
pub const METRICS_JSON: &str = "metrics.json";

#[derive(Serialize)]
struct Settings<'a> {
    fit: &'a str,
    forecasts: Option<String>,
    f1_variant: F1Variant,
    models: &'a [ModelArg],
    glm: Option<MleOptions>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlmSummary {
    pub t: usize,
    #[serde(with = "precise")]
    pub ridge: f64,
    #[serde(with = "precise")]
    pub neg_log_lik: f64,
    pub converged: bool,
    pub iterations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub model: ModelArg,
    pub minutes: Vec<MinuteMetrics>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub f1_variant: F1Variant,
    pub n_test: usize,
    pub models: Vec<ModelMetrics>,
    pub glm_fits: Vec<GlmSummary>,
}

pub fn run(args: &EvaluateArgs) -> CliResult<()> {
    let run = Run::open(&args.run, &args.data)?;
    let variant: F1Variant = args.f1_variant.into();
    let mut models = args.models.clone();
    models.sort();
    models.dedup();
    if models.is_empty() {
        return Err(CliError::Invalid("no models selected".into()));
    }
    let glm_opts = models.contains(&ModelArg::Glm).then(|| MleOptions { ridge: args.glm_ridge, ..MleOptions::default() });
    let forecasts_hash = if models.contains(&ModelArg::Bayes) {
        let meta = read_json::<CsvMeta>(&meta_path(&run.path(FORECASTS)), "forecasts")?;
        Some(meta.config_hash)
    } else {
        None
    };
    let hash = config_hash(&Settings {
        fit: &run.config_hash,
        forecasts: forecasts_hash,
        f1_variant: variant,
        models: &models,
        glm: glm_opts,
    })?;
    let seed = run.master_seed();

    let mut report = MetricsReport { f1_variant: variant, n_test: run.test.n(), models: Vec::new(), glm_fits: Vec::new() };
    for &model in &models {
        let minutes = match model {
            ModelArg::Bayes => score_forecasts(&read_forecasts(&run.path(FORECASTS))?, &run.test, variant)?,
            ModelArg::Glm => {
                let opts = glm_opts.unwrap_or_default();
                let (forecasts, fits) = glm_forecasts(&run, &opts, args.workers)?;
                let bytes = csv_bytes(&HEADER, forecasts.iter().map(forecast_row))?;
                write_csv(&run.path(GLM_FORECASTS), "forecasts", &hash, seed, &bytes)?;
                report.glm_fits = fits;
                score_forecasts(&forecasts, &run.test, variant)?
            }
        };
        let bytes = csv_bytes(&METRICS_HEADER, minutes.iter().map(metrics_row))?;
        write_csv(&run.path(metrics_file(model)), "metrics", &hash, seed, &bytes)?;
        report.models.push(ModelMetrics { model, minutes });
    }

    let mut header = vec!["model"];
    header.extend(METRICS_HEADER);
    let rows = report.models.iter().flat_map(|m| {
        m.minutes.iter().map(move |mm| {
            let mut row = vec![m.model.name().to_owned()];
            row.extend(metrics_row(mm));
            row
        })
    });
    let bytes = csv_bytes(&header, rows)?;
    write_csv(&run.path(COMPARISON), "comparison", &hash, seed, &bytes)?;
    write_json(&run.path(METRICS_JSON), "metrics", &hash, seed, &report)
}

pub fn metrics_row(m: &MinuteMetrics) -> Vec<String> {
    vec![
        m.minute.to_string(),
        fmt_opt(m.f1[0]),
        fmt_opt(m.f1[1]),
        fmt_opt(m.f1[2]),
        m.brier.to_string(),
        m.n_test.to_string(),
    ]
}

/// Per-minute metrics of forecasts against the test outcomes. Every minute
/// present must cover each test match exactly once.
pub fn score_forecasts(forecasts: &[MatchForecast], test: &Dataset, variant: F1Variant) -> CliResult<Vec<MinuteMetrics>> {
    let truth: HashMap<&str, Outcome> = test.matches().iter().map(|m| (m.match_id.as_str(), m.outcome)).collect();
    let mut by_minute: BTreeMap<usize, Vec<&MatchForecast>> = BTreeMap::new();
    for f in forecasts {
        by_minute.entry(f.minute).or_default().push(f);
    }
    by_minute
        .into_iter()
        .map(|(t, fs)| {
            let mut seen = HashMap::new();
            for f in &fs {
                if !truth.contains_key(f.match_id.as_str()) {
                    return Err(CliError::Invalid(format!("forecast for `{}` which is not a test match", f.match_id)));
                }
                if seen.insert(f.match_id.as_str(), ()).is_some() {
                    return Err(CliError::Invalid(format!("duplicate forecast for `{}` at minute {t}", f.match_id)));
                }
            }
            if seen.len() != truth.len() {
                return Err(CliError::Invalid(format!(
                    "minute {t} has forecasts for {} of {} test matches",
                    seen.len(),
                    truth.len()
                )));
            }
            let y: Vec<Outcome> = fs.iter().map(|f| truth[f.match_id.as_str()]).collect();
            let pred: Vec<Outcome> = fs.iter().map(|f| f.predicted).collect();
            let probs: Vec<ForecastTriple> = fs.iter().map(|f| f.probabilities).collect();
            Ok(MinuteMetrics::compute(t, &y, &pred, &probs, variant)?)
        })
        .collect()
}

/// Fit the ML ordered probit at every minute of the run and forecast the
/// test matches, in the same row order as the Bayesian forecasts.
fn glm_forecasts(run: &Run, opts: &MleOptions, workers: Option<usize>) -> CliResult<(Vec<MatchForecast>, Vec<GlmSummary>)> {
    let train = canonical_order(&run.train)?;
    let std = Standardizer::fit(&train);
    let y = train.outcomes();
    let minutes: Vec<usize> = run.manifest.settings.t_range.minutes().collect();
    let workers = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Invalid(format!("worker pool: {e}")))?;
    let per_minute = pool.install(|| {
        minutes
            .par_iter()
            .map(|&t| -> CliResult<(Vec<MatchForecast>, GlmSummary)> {
                let design = DesignMatrix::build(&train, t, &std)?;
                let fit = fit_ordered_probit_mle(&design, &y, opts)?;
                let m_star = DesignMatrix::build(&run.test, t, &std)?;
                let probs = predict_ordered_probit(&fit, &m_star)?;
                let eta = m_star.latent_mean(&DVector::from_column_slice(&fit.nu))?;
                let rows = run
                    .test
                    .matches()
                    .iter()
                    .zip(probs)
                    .zip(eta.iter())
                    .map(|((m, p), &e)| MatchForecast {
                        match_id: m.match_id.clone(),
                        minute: t,
                        probabilities: p,
                        predicted: Outcome::classify(e, fit.delta),
                    })
                    .collect();
                let summary = GlmSummary {
                    t,
                    ridge: fit.ridge,
                    neg_log_lik: fit.neg_log_lik,
                    converged: fit.converged,
                    iterations: fit.iterations,
                };
                Ok((rows, summary))
            })
            .collect::<CliResult<Vec<_>>>()
    })?;
    let order: HashMap<&str, usize> = run.test.matches().iter().enumerate().map(|(i, m)| (m.match_id.as_str(), i)).collect();
    let (rows, fits): (Vec<_>, Vec<_>) = per_minute.into_iter().unzip();
    let mut rows: Vec<MatchForecast> = rows.into_iter().flatten().collect();
    rows.sort_by_key(|f| (order[f.match_id.as_str()], f.minute));
    Ok((rows, fits))
}
