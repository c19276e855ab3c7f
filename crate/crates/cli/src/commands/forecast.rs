use std::collections::HashMap;

use matchcast::data::Outcome;
use matchcast::fit::FittedModel;
use matchcast::forecast::{forecast_dataset, ForecastTriple, MatchForecast, PointForecast, PredictiveVariance};
use matchcast::seed::{derive, minute_seed};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::ForecastArgs;
use crate::artifact::{config_hash, csv_bytes, read, read_json, write_csv};
use crate::error::{CliError, CliResult};
use crate::run::{Run, FORECASTS, PREDICTIVE_TAG};

pub const HEADER: [&str; 6] = ["match_id", "minute", "p_loss", "p_draw", "p_win", "predicted"];

#[derive(Serialize)]
struct Settings<'a> {
    fit: &'a str,
    predictive_variance: PredictiveVariance,
    sample_predictive: bool,
}

pub fn run(args: &ForecastArgs) -> CliResult<()> {
    let run = Run::open(&args.run, &args.data)?;
    let mode: PredictiveVariance = args.predictive_variance.into();
    let point = if args.sample_predictive { PointForecast::Sample } else { PointForecast::Mean };
    let hash = config_hash(&Settings { fit: &run.config_hash, predictive_variance: mode, sample_predictive: args.sample_predictive })?;

    let records: Vec<_> = run.manifest.fitted().collect();
    let per_minute = records
        .par_iter()
        .map(|rec| {
            let name = rec.model.as_deref().ok_or_else(|| CliError::Invalid(format!("no model recorded for t = {}", rec.t)))?;
            let env = read_json::<FittedModel>(&run.path(name), "model")?;
            if env.config_hash != run.config_hash {
                return Err(CliError::Invalid(format!("{name} belongs to a different run")));
            }
            let mut rng = ChaCha20Rng::seed_from_u64(derive(minute_seed(run.master_seed(), rec.t), PREDICTIVE_TAG));
            Ok(forecast_dataset(&env.body, &run.test, mode, point, &mut rng)?)
        })
        .collect::<CliResult<Vec<Vec<MatchForecast>>>>()?;

    let order: HashMap<&str, usize> = run.test.matches().iter().enumerate().map(|(i, m)| (m.match_id.as_str(), i)).collect();
    let mut rows: Vec<&MatchForecast> = per_minute.iter().flatten().collect();
    rows.sort_by_key(|f| (order[f.match_id.as_str()], f.minute));
    let bytes = csv_bytes(&HEADER, rows.iter().map(|f| forecast_row(f)))?;
    write_csv(&run.path(FORECASTS), "forecasts", &hash, run.master_seed(), &bytes)?;
    log::info!("wrote {} forecasts for {} minutes", rows.len(), per_minute.len());
    Ok(())
}

pub fn forecast_row(f: &MatchForecast) -> Vec<String> {
    let p = f.probabilities;
    vec![
        f.match_id.clone(),
        f.minute.to_string(),
        p.p_loss.to_string(),
        p.p_draw.to_string(),
        p.p_win.to_string(),
        f.predicted.value().to_string(),
    ]
}

/// Parse a forecasts CSV back into records.
pub fn read_forecasts(path: &std::path::Path) -> CliResult<Vec<MatchForecast>> {
    let bytes = read(path)?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    let header = r.headers().map_err(matchcast::Error::from)?.clone();
    if header.iter().ne(HEADER) {
        return Err(CliError::Invalid(format!("{}: unexpected header {:?}", path.display(), header)));
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(matchcast::Error::from)?;
            let bad = |what: &str| CliError::Invalid(format!("{} line {}: bad {what}", path.display(), i + 2));
            let num = |j: usize| rec[j].parse::<f64>().map_err(|_| bad(HEADER[j]));
            Ok(MatchForecast {
                match_id: rec[0].to_owned(),
                minute: rec[1].parse().map_err(|_| bad("minute"))?,
                probabilities: ForecastTriple::new(num(2)?, num(3)?, num(4)?)?,
                predicted: Outcome::from_value(rec[5].parse().map_err(|_| bad("predicted"))?)?,
            })
        })
        .collect()
}
