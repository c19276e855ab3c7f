use std::path::Path;

use matchcast::data::{leave_team_out, read_dataset, train_test_split, Dataset};
use matchcast::design::{DesignMatrix, Standardizer};
use matchcast::diagnostics::monitored_coordinates;
use matchcast::fit::{canonical_order, fit_minute, FitConfig, FitOutput};
use matchcast::precise;
use matchcast::sampler::{LatentMode, SamplerConfig};
use matchcast::seed::{chain_seed, derive, minute_seed};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::FitArgs;
use crate::artifact::{config_hash, create_dir, write_csv, write_json};
use crate::error::{CliError, CliResult};
use crate::run::{
    design_file, model_file, trace_file, FitRecord, FitStatus, InputHashes, Manifest, RunSettings, SplitIds, SplitSpec,
    MANIFEST, MONITOR_TAG, SPLIT, SPLIT_TAG,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainInfo {
    pub chain_id: usize,
    pub seed: u64,
    #[serde(with = "precise")]
    pub initial_delta: (f64, f64),
    pub degenerate_steps: usize,
}

/// Retained draws of one monitored scalar, one series per chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub parameter: String,
    #[serde(with = "precise")]
    pub draws: Vec<Vec<f64>>,
}

/// Monitored draws of a fit, enough to recompute convergence diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub t: usize,
    pub fit_seed: u64,
    pub monitor_seed: u64,
    pub chains: Vec<ChainInfo>,
    pub series: Vec<Series>,
}

impl Trace {
    pub fn from_fit(out: &FitOutput, monitor_seed: u64) -> Self {
        let chains = &out.chains;
        let collect = |f: &dyn Fn(&matchcast::sampler::Draw) -> f64| -> Vec<Vec<f64>> {
            chains.iter().map(|c| c.draws.iter().map(f).collect()).collect()
        };
        let mut series = vec![
            Series { parameter: "delta1".into(), draws: collect(&|d| d.delta.0) },
            Series { parameter: "delta2".into(), draws: collect(&|d| d.delta.1) },
        ];
        let layout = &out.model.layout;
        for j in monitored_coordinates(layout.dim(), monitor_seed) {
            series.push(Series { parameter: layout.label(j).name(), draws: collect(&|d| d.nu[j]) });
        }
        Self {
            t: out.model.t,
            fit_seed: out.model.fit_seed,
            monitor_seed,
            chains: chains
                .iter()
                .map(|c| ChainInfo {
                    chain_id: c.chain_id,
                    seed: c.seed,
                    initial_delta: c.initial_delta,
                    degenerate_steps: c.degenerate_steps,
                })
                .collect(),
            series,
        }
    }
}

pub fn run(args: &FitArgs) -> CliResult<()> {
    let fit = FitConfig {
        prior: args.prior.spec(),
        sampler: SamplerConfig {
            iterations: args.iterations,
            burn_in: args.burn_in,
            thin: args.thin,
            latent_mode: if args.latent_untruncated { LatentMode::Untruncated } else { LatentMode::Truncated },
            keep_latent: false,
            jitter: args.jitter,
        },
        chains: args.chains,
        keep_draws: args.keep_draws,
    };
    fit.prior.validate()?;
    fit.sampler.validate()?;
    if fit.chains == 0 {
        return Err(CliError::Invalid("at least one chain is required".into()));
    }
    if !(args.jitter >= 0.0 && args.jitter.is_finite()) {
        return Err(CliError::Invalid(format!("jitter must be a finite non-negative number, got {}", args.jitter)));
    }
    let split = match &args.leave_out_team {
        Some(team) => SplitSpec::LeaveOutTeam { team: team.clone() },
        None => SplitSpec::Random { test_fraction: args.test_fraction, seed: derive(args.seed, SPLIT_TAG) },
    };
    let settings = RunSettings {
        master_seed: args.seed,
        t_range: args.t_range,
        fit,
        split: split.clone(),
        inputs: InputHashes::of(&args.data)?,
        dump_design: args.dump_design,
    };
    let hash = config_hash(&settings)?;

    let data = read_dataset(&args.data.matches, &args.data.events)?;
    let (train, test) = match &split {
        SplitSpec::Random { test_fraction, seed } => train_test_split(&data, *test_fraction, *seed)?,
        SplitSpec::LeaveOutTeam { team } => leave_team_out(&data, team)?,
    };
    create_dir(&args.out)?;
    let ids = |d: &Dataset| d.matches().iter().map(|m| m.match_id.clone()).collect();
    let split_ids = SplitIds { train: ids(&train), test: ids(&test) };
    write_json(&args.out.join(SPLIT), "split", &hash, args.seed, &split_ids)?;

    let workers = args.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Invalid(format!("worker pool: {e}")))?;
    let minutes: Vec<usize> = args.t_range.minutes().collect();
    log::info!("fitting {} minutes on {} training matches with {workers} workers", minutes.len(), train.n());
    let job = Job { out: &args.out, train: &train, fit: &fit, master_seed: args.seed, hash: &hash, dump: args.dump_design };
    let fits: Vec<FitRecord> = pool.install(|| minutes.par_iter().map(|&t| job.fit(t)).collect());

    let failed: Vec<&FitRecord> = fits.iter().filter(|f| f.status == FitStatus::Failed).collect();
    let numerical = failed.iter().any(|f| f.error.as_deref().is_some_and(|e| e.starts_with(NUMERICAL_PREFIX)));
    let summary = failed.iter().map(|f| format!("t = {}: {}", f.t, f.error.as_deref().unwrap_or(""))).collect::<Vec<_>>();
    let manifest = Manifest { settings, split: SPLIT.into(), n_train: train.n(), n_test: test.n(), fits };
    write_json(&args.out.join(MANIFEST), "manifest", &hash, args.seed, &manifest)?;

    if summary.is_empty() {
        Ok(())
    } else if numerical {
        Err(CliError::Numerical(format!("{} fits failed: {}", summary.len(), summary.join("; "))))
    } else {
        Err(CliError::Invalid(format!("{} fits failed: {}", summary.len(), summary.join("; "))))
    }
}

const NUMERICAL_PREFIX: &str = "numerical: ";

struct Job<'a> {
    out: &'a Path,
    train: &'a Dataset,
    fit: &'a FitConfig,
    master_seed: u64,
    hash: &'a str,
    dump: bool,
}

impl Job<'_> {
    fn fit(&self, t: usize) -> FitRecord {
        let fit_seed = minute_seed(self.master_seed, t);
        let mut record = FitRecord {
            t,
            status: FitStatus::Failed,
            fit_seed,
            chain_seeds: (0..self.fit.chains).map(|c| chain_seed(fit_seed, c)).collect(),
            model: None,
            trace: None,
            design: None,
            degenerate_steps: None,
            error: None,
        };
        match self.try_fit(t, fit_seed, &mut record) {
            Ok(()) => record.status = FitStatus::Ok,
            Err(e) => {
                log::error!("fit at t = {t} failed: {e}");
                let numerical = e.exit_code() == 2;
                record.error = Some(if numerical { format!("{NUMERICAL_PREFIX}{e}") } else { e.to_string() });
            }
        }
        record
    }

    fn try_fit(&self, t: usize, fit_seed: u64, record: &mut FitRecord) -> CliResult<()> {
        let out = fit_minute(self.train, t, self.fit, fit_seed)?;
        let name = model_file(t);
        write_json(&self.out.join(&name), "model", self.hash, self.master_seed, &out.model)?;
        record.model = Some(name);

        let trace = Trace::from_fit(&out, derive(fit_seed, MONITOR_TAG));
        let name = trace_file(t);
        write_json(&self.out.join(&name), "trace", self.hash, self.master_seed, &trace)?;
        record.trace = Some(name);
        record.degenerate_steps = Some(out.model.degenerate_steps);

        if self.dump {
            let train = canonical_order(self.train)?;
            let design = DesignMatrix::build(&train, t, &Standardizer::fit(&train))?;
            let mut bytes = Vec::new();
            design.write_csv(&mut bytes)?;
            let name = design_file(t);
            write_csv(&self.out.join(&name), "design", self.hash, self.master_seed, &bytes)?;
            record.design = Some(name);
        }
        log::info!("t = {t}: δ̂ = ({:.4}, {:.4})", out.model.delta_hat.0, out.model.delta_hat.1);
        Ok(())
    }
}
