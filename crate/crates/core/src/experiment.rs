//! Experiment batteries: configuration, repetition summaries and the
//! round-log CSV format.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::data::{self, Dataset, SynthConfig};
use crate::error::{Error, Result};
use crate::fed::{FLConfig, RoundLog};
use crate::metrics::MetricReport;
use crate::model::{ModelKind, ModelSpec};
use crate::partition::ScenarioConfig;

pub const DEFAULT_REPETITIONS: usize = 3;
pub const DEFAULT_HIDDEN: usize = 64;

/// Where training and test data come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    Mnist { data_dir: PathBuf },
    Cifar10 { data_dir: PathBuf },
    Synth(SynthConfig),
}

impl DatasetSource {
    pub fn load_train(&self) -> Result<Dataset> {
        match self {
            DatasetSource::Mnist { data_dir } => {
                let (images, labels) = data::mnist_paths(data_dir, true);
                data::load_mnist_idx(images, labels)
            }
            DatasetSource::Cifar10 { data_dir } => data::load_cifar10_bin(&data::cifar10_paths(data_dir, true)),
            DatasetSource::Synth(cfg) => data::synth_blobs(cfg),
        }
    }

    /// The held-out evaluation set: the canonical test split for the image
    /// datasets, an independent draw from the same blobs for synthetic data.
    pub fn load_test(&self) -> Result<Dataset> {
        match self {
            DatasetSource::Mnist { data_dir } => {
                let (images, labels) = data::mnist_paths(data_dir, false);
                data::load_mnist_idx(images, labels)
            }
            DatasetSource::Cifar10 { data_dir } => data::load_cifar10_bin(&data::cifar10_paths(data_dir, false)),
            DatasetSource::Synth(cfg) => data::synth_blobs(&cfg.held_out()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelChoice {
    pub kind: ModelKind,
    #[serde(default = "default_hidden")]
    pub hidden_dim: usize,
}

fn default_hidden() -> usize {
    DEFAULT_HIDDEN
}

impl Default for ModelChoice {
    fn default() -> Self {
        Self {
            kind: ModelKind::Mlp,
            hidden_dim: DEFAULT_HIDDEN,
        }
    }
}

impl ModelChoice {
    pub fn spec(&self, dataset: &Dataset, init_seed: u64) -> ModelSpec {
        match self.kind {
            ModelKind::Logistic => ModelSpec::logistic(dataset.dim(), dataset.classes(), init_seed),
            ModelKind::Mlp => ModelSpec::mlp(dataset.dim(), self.hidden_dim, dataset.classes(), init_seed),
        }
    }
}

/// Everything needed to run an experiment battery. Every section is
/// optional in a config file; command-line flags fill or override it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub dataset: Option<DatasetSource>,
    pub scenario: Option<ScenarioConfig>,
    pub model: Option<ModelChoice>,
    pub fl: Option<FLConfig>,
    pub repetitions: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| Error::format(format!("experiment config: {e}")))
    }
}

/// Seed used for repetition `r`: `base + r`, shared by model initialization
/// and the federated run.
pub fn repetition_seed(base: u64, r: usize) -> u64 {
    base.wrapping_add(r as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation (zero for a single value).
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("no values to summarize"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            mean,
            std,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionResult {
    pub repetition: usize,
    pub seed: u64,
    pub final_accuracy: f64,
    pub final_macro_f1: f64,
}

/// Aggregates over the repetitions of one experiment, plus the effective
/// configuration that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub dataset: String,
    pub scenario: ScenarioConfig,
    pub plan_metrics: MetricReport,
    pub model: ModelChoice,
    pub fl: FLConfig,
    pub base_seed: u64,
    pub repetitions: Vec<RepetitionResult>,
    pub accuracy: Stat,
    pub macro_f1: Stat,
    pub runtime_seconds: f64,
}

impl ExperimentSummary {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dataset: String,
        scenario: ScenarioConfig,
        plan_metrics: MetricReport,
        model: ModelChoice,
        fl: FLConfig,
        base_seed: u64,
        repetitions: Vec<RepetitionResult>,
        runtime_seconds: f64,
    ) -> Result<Self> {
        let acc: Vec<f64> = repetitions.iter().map(|r| r.final_accuracy).collect();
        let f1: Vec<f64> = repetitions.iter().map(|r| r.final_macro_f1).collect();
        Ok(Self {
            dataset,
            scenario,
            plan_metrics,
            model,
            fl,
            base_seed,
            accuracy: Stat::of(&acc)?,
            macro_f1: Stat::of(&f1)?,
            repetitions,
            runtime_seconds,
        })
    }
}

/// File name of the round log for repetition `r`.
pub fn round_log_file(r: usize) -> String {
    format!("rep{r}.csv")
}

/// `round,accuracy,macro_f1,mean_local_loss,recall_0,…,recall_{C-1}`, one row
/// per round. Floats use the shortest representation that round-trips.
pub fn round_log_csv(rounds: &[RoundLog], classes: usize) -> String {
    let mut out = String::from("round,accuracy,macro_f1,mean_local_loss");
    for c in 0..classes {
        let _ = write!(out, ",recall_{c}");
    }
    out.push('\n');
    for log in rounds {
        let _ = write!(
            out,
            "{},{},{},{}",
            log.round, log.accuracy, log.macro_f1, log.mean_local_loss
        );
        for r in &log.recall {
            let _ = write!(out, ",{r}");
        }
        out.push('\n');
    }
    out
}

/// Population standard deviation of the last `window` accuracies.
pub fn tail_accuracy_std(rounds: &[RoundLog], window: usize) -> f64 {
    let tail = &rounds[rounds.len().saturating_sub(window)..];
    if tail.is_empty() {
        return 0.0;
    }
    let n = tail.len() as f64;
    let mean = tail.iter().map(|r| r.accuracy).sum::<f64>() / n;
    (tail.iter().map(|r| (r.accuracy - mean).powi(2)).sum::<f64>() / n).sqrt()
}
