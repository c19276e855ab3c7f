use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use matchcast::evaluation::F1Variant;
use matchcast::forecast::PredictiveVariance;
use matchcast::prior::PriorSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "matchcast", version, about = "Minute-by-minute match outcome forecasting with a Bayesian ordered probit")]
pub struct Cli {
    /// Log filter, as accepted by RUST_LOG.
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic dataset from the model.
    Simulate(SimulateArgs),
    /// Fit one model per cut minute.
    Fit(FitArgs),
    /// Gelman-Rubin diagnostics for every fitted minute.
    Diagnose(RunDirArgs),
    /// Forecast the held-out matches at every fitted minute.
    Forecast(ForecastArgs),
    /// Score forecasts per minute, optionally against the ML baseline.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Regenerate from a stored truth.json instead of the flags below.
    #[arg(long, conflicts_with_all = ["n", "kinds", "t_max", "seed"])]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Number of event kinds, taken from the front of the kind list.
    #[arg(long, default_value_t = 2)]
    pub kinds: usize,
    /// Last minute with events.
    #[arg(long, default_value_t = 90)]
    pub t_max: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Inclusive range of cut minutes, written `a..b` or `a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinuteRange {
    pub start: usize,
    pub end: usize,
}

impl MinuteRange {
    pub fn minutes(&self) -> impl Iterator<Item = usize> {
        self.start..=self.end
    }
}

impl FromStr for MinuteRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("bad minute `{x}`: {e}"));
        let (start, end) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
            None => (parse(s)?, parse(s)?),
        };
        if start < 1 || end > matchcast::data::MINUTES || start > end {
            return Err(format!("minute range {start}..{end} must satisfy 1 <= start <= end <= 90"));
        }
        Ok(Self { start, end })
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub matches: PathBuf,
    #[arg(long)]
    pub events: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct PriorArgs {
    /// Latent error variance.
    #[arg(long, default_value_t = 1.0)]
    pub sigma_y2: f64,
    /// Scale of the normal CDF linking cutoffs to the Dirichlet simplex.
    #[arg(long, default_value_t = 300.0)]
    pub tau: f64,
    /// Dirichlet concentrations for loss, draw and win.
    #[arg(long, num_args = 3, value_delimiter = ',', default_values_t = [2.0, 2.0, 2.0])]
    pub alpha: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub kernel_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    pub kernel_rate: f64,
}

impl PriorArgs {
    pub fn spec(&self) -> PriorSpec {
        PriorSpec {
            sigma_y2: self.sigma_y2,
            tau: self.tau,
            alpha: [self.alpha[0], self.alpha[1], self.alpha[2]],
            kernel_scale: self.kernel_scale,
            kernel_rate: self.kernel_rate,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Run directory for models, traces and the manifest.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "1..90")]
    pub t_range: MinuteRange,
    #[arg(long, default_value_t = 10_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 7_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 10)]
    pub thin: usize,
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    #[command(flatten)]
    pub prior: PriorArgs,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Concurrent per-minute fits; defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub test_fraction: f64,
    /// Hold out every match of this team instead of a random split.
    #[arg(long)]
    pub leave_out_team: Option<String>,
    /// Draw latents without truncation to the observed category.
    #[arg(long)]
    pub latent_untruncated: bool,
    /// Store retained ν and δ draws in each model file.
    #[arg(long)]
    pub keep_draws: bool,
    /// Diagonal jitter added to the coefficient precision before factoring.
    #[arg(long, default_value_t = matchcast::sampler::DEFAULT_JITTER)]
    pub jitter: f64,
    /// Also write each training design matrix as CSV.
    #[arg(long)]
    pub dump_design: bool,
}

#[derive(Debug, Args)]
pub struct RunDirArgs {
    #[arg(long)]
    pub run: PathBuf,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum VarianceArg {
    /// Noise term σ_y².
    #[default]
    Corrected,
    /// Noise term σ_y⁻².
    InverseNoise,
}

impl From<VarianceArg> for PredictiveVariance {
    fn from(v: VarianceArg) -> Self {
        match v {
            VarianceArg::Corrected => PredictiveVariance::Corrected,
            VarianceArg::InverseNoise => PredictiveVariance::InverseNoise,
        }
    }
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = VarianceArg::Corrected)]
    pub predictive_variance: VarianceArg,
    /// Predict the category of one predictive draw instead of the mean.
    #[arg(long)]
    pub sample_predictive: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum F1Arg {
    #[default]
    Precision,
    Tnr,
}

impl From<F1Arg> for F1Variant {
    fn from(v: F1Arg) -> Self {
        match v {
            F1Arg::Precision => F1Variant::Precision,
            F1Arg::Tnr => F1Variant::Tnr,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Bayes,
    Glm,
}

impl ModelArg {
    pub fn name(self) -> &'static str {
        match self {
            ModelArg::Bayes => "bayes",
            ModelArg::Glm => "glm",
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = F1Arg::Precision)]
    pub f1_variant: F1Arg,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [ModelArg::Bayes, ModelArg::Glm])]
    pub models: Vec<ModelArg>,
    /// Ridge penalty for the baseline; defaults to a small value only when
    /// the baseline has more parameters than half the training matches.
    #[arg(long)]
    pub glm_ridge: Option<f64>,
    /// Concurrent baseline fits; defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
}
