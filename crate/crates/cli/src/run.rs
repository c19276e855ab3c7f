//! The run directory: manifest, split and the per-minute file names.

use std::path::{Path, PathBuf};

use matchcast::data::{read_dataset, Dataset};
use matchcast::fit::FitConfig;
use matchcast::precise;
use serde::{Deserialize, Serialize};

use crate::args::{DataArgs, MinuteRange};
use crate::artifact::{file_sha256, read_json, Envelope};
use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";
pub const SPLIT: &str = "split.json";
pub const FORECASTS: &str = "forecasts.csv";

/// Seed tags below the per-minute range, so they never collide with a
/// minute seed.
pub const SPLIT_TAG: u64 = 0x5B17_0000_0000;
pub const MONITOR_TAG: u64 = 0x3D1A_0000_0000;
pub const PREDICTIVE_TAG: u64 = 0x9D1C_0000_0000;

pub fn model_file(t: usize) -> String {
    format!("model_t{t:02}.json")
}

pub fn trace_file(t: usize) -> String {
    format!("trace_t{t:02}.json")
}

pub fn design_file(t: usize) -> String {
    format!("design_t{t:02}.csv")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputHashes {
    pub matches: String,
    pub events: String,
}

impl InputHashes {
    pub fn of(data: &DataArgs) -> CliResult<Self> {
        Ok(Self { matches: file_sha256(&data.matches)?, events: file_sha256(&data.events)? })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SplitSpec {
    Random {
        #[serde(with = "precise")]
        test_fraction: f64,
        seed: u64,
    },
    LeaveOutTeam {
        team: String,
    },
}

/// Everything that determines the outputs of `fit`; its hash is the run's
/// config hash.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub master_seed: u64,
    pub t_range: MinuteRange,
    pub fit: FitConfig,
    pub split: SplitSpec,
    pub inputs: InputHashes,
    pub dump_design: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitStatus {
    Ok,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub t: usize,
    pub status: FitStatus,
    pub fit_seed: u64,
    pub chain_seeds: Vec<u64>,
    pub model: Option<String>,
    pub trace: Option<String>,
    pub design: Option<String>,
    pub degenerate_steps: Option<usize>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub settings: RunSettings,
    pub split: String,
    pub n_train: usize,
    pub n_test: usize,
    pub fits: Vec<FitRecord>,
}

impl Manifest {
    pub fn fitted(&self) -> impl Iterator<Item = &FitRecord> {
        self.fits.iter().filter(|f| f.status == FitStatus::Ok)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIds {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// A loaded run directory with inputs verified against the manifest.
pub struct Run {
    pub dir: PathBuf,
    pub config_hash: String,
    pub manifest: Manifest,
    pub train: Dataset,
    pub test: Dataset,
}

impl Run {
    pub fn open(dir: &Path, data: &DataArgs) -> CliResult<Self> {
        let Envelope { config_hash, body: manifest, .. } = read_json::<Manifest>(&dir.join(MANIFEST), "manifest")?;
        let inputs = InputHashes::of(data)?;
        if inputs != manifest.settings.inputs {
            return Err(CliError::Invalid(format!(
                "input files do not match the ones {} was fitted on",
                dir.display()
            )));
        }
        let split = read_json::<SplitIds>(&dir.join(&manifest.split), "split")?;
        if split.config_hash != config_hash {
            return Err(CliError::Invalid(format!("{} belongs to a different run", manifest.split)));
        }
        let dataset = read_dataset(&data.matches, &data.events)?;
        let train = dataset.select_ids(&split.body.train)?;
        let test = dataset.select_ids(&split.body.test)?;
        Ok(Self { dir: dir.to_owned(), config_hash, manifest, train, test })
    }

    pub fn master_seed(&self) -> u64 {
        self.manifest.settings.master_seed
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}
