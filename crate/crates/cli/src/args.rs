use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fedimb::data::SynthConfig;
use fedimb::experiment::DEFAULT_REPETITIONS;
use fedimb::partition::DEFAULT_MINORITY;
use fedimb::{
    DatasetSource, DownsampleBase, ExperimentConfig, FLConfig, ModelChoice, ModelKind,
    ScenarioConfig, Selection,
};

/// Environment variable that overrides the output directory of `train`.
pub const OUT_DIR_ENV: &str = "FEDIMB_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "fedimb-run";
pub const DEFAULT_CLIENTS: usize = 100;

const DEFAULT_SYNTH: SynthConfig = SynthConfig {
    classes: 10,
    per_class: 600,
    dim: 16,
    spread: 0.15,
    seed: 0,
};

/// Bad or missing arguments; reported with exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser)]
#[command(name = "fedimb", version, about = "Class-imbalance experiments for federated learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Build a partition plan and print its imbalance metrics
    Partition(PartitionArgs),
    /// Run repeated FedAvg experiments on a partition plan
    Train(TrainArgs),
    /// Print imbalance metrics of a plan or of raw per-client counts
    Metrics(MetricsArgs),
    /// Collect run directories into a summary table and a curve file
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum DatasetKind {
    Mnist,
    Cifar10,
    Synth,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SelectionArg {
    Balanced,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum BaseArg {
    MeanClassSize,
    ClassCount,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ModelArg {
    Logistic,
    Mlp,
}

#[derive(Args)]
pub struct DatasetArgs {
    /// Dataset to load
    #[arg(long, value_enum)]
    pub dataset: Option<DatasetKind>,
    /// Directory holding the MNIST or CIFAR-10 files
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub synth_classes: Option<usize>,
    #[arg(long)]
    pub synth_per_class: Option<usize>,
    #[arg(long)]
    pub synth_dim: Option<usize>,
    #[arg(long)]
    pub synth_spread: Option<f64>,
    #[arg(long)]
    pub synth_seed: Option<u64>,
}

impl DatasetArgs {
    /// Flags over the config file's `dataset` section.
    pub fn resolve(&self, config: &ExperimentConfig) -> anyhow::Result<DatasetSource> {
        let from_config = config.dataset.clone();
        let kind = match (self.dataset, &from_config) {
            (Some(kind), _) => kind,
            (None, Some(DatasetSource::Mnist { .. })) => DatasetKind::Mnist,
            (None, Some(DatasetSource::Cifar10 { .. })) => DatasetKind::Cifar10,
            (None, Some(DatasetSource::Synth(_))) => DatasetKind::Synth,
            (None, None) => return Err(usage("no dataset given (use --dataset or a config file)")),
        };
        let config_dir = match &from_config {
            Some(DatasetSource::Mnist { data_dir }) if matches!(kind, DatasetKind::Mnist) => {
                Some(data_dir.clone())
            }
            Some(DatasetSource::Cifar10 { data_dir }) if matches!(kind, DatasetKind::Cifar10) => {
                Some(data_dir.clone())
            }
            _ => None,
        };
        let dir = || {
            self.data_dir
                .clone()
                .or(config_dir.clone())
                .ok_or_else(|| usage("--data-dir is required for mnist and cifar10"))
        };
        Ok(match kind {
            DatasetKind::Mnist => DatasetSource::Mnist { data_dir: dir()? },
            DatasetKind::Cifar10 => DatasetSource::Cifar10 { data_dir: dir()? },
            DatasetKind::Synth => {
                let base = match from_config {
                    Some(DatasetSource::Synth(cfg)) => cfg,
                    _ => DEFAULT_SYNTH,
                };
                DatasetSource::Synth(SynthConfig {
                    classes: self.synth_classes.unwrap_or(base.classes),
                    per_class: self.synth_per_class.unwrap_or(base.per_class),
                    dim: self.synth_dim.unwrap_or(base.dim),
                    spread: self.synth_spread.unwrap_or(base.spread),
                    seed: self.synth_seed.unwrap_or(base.seed),
                })
            }
        })
    }
}

#[derive(Args)]
pub struct PartitionArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    /// Imbalance scenario (1-4)
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub scenario: Option<u8>,
    /// Majority/minority ratio applied to the minority classes (scenarios 2 and 4)
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Minority classes, comma separated [default: 0,1,3,6]
    #[arg(long, value_delimiter = ',')]
    pub minority: Option<Vec<usize>>,
    /// Classes held by each client (scenarios 3 and 4)
    #[arg(long)]
    pub per_client_classes: Option<usize>,
    /// Number of clients [default: 100]
    #[arg(long)]
    pub clients: Option<usize>,
    /// How clients pick their classes [default: balanced]
    #[arg(long, value_enum)]
    pub selection: Option<SelectionArg>,
    /// Reference size for downsampling [default: mean-class-size]
    #[arg(long, value_enum)]
    pub downsample_base: Option<BaseArg>,
    /// Plan seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Where to write the plan JSON
    #[arg(long)]
    pub out: PathBuf,
    /// JSON experiment config; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl PartitionArgs {
    pub fn scenario(&self, config: &ExperimentConfig) -> anyhow::Result<ScenarioConfig> {
        let base = config.scenario.as_ref();
        let scenario = self
            .scenario
            .or(base.map(|s| s.scenario))
            .ok_or_else(|| usage("--scenario is required"))?;
        let cfg = ScenarioConfig {
            scenario,
            clients: self
                .clients
                .or(base.map(|s| s.clients))
                .unwrap_or(DEFAULT_CLIENTS),
            gamma: self.gamma.or(base.and_then(|s| s.gamma)),
            minority_classes: self
                .minority
                .clone()
                .or(base.map(|s| s.minority_classes.clone()))
                .unwrap_or_else(|| DEFAULT_MINORITY.to_vec()),
            per_client_classes: self
                .per_client_classes
                .or(base.and_then(|s| s.per_client_classes)),
            selection: match self.selection {
                Some(SelectionArg::Balanced) => Selection::Balanced,
                Some(SelectionArg::Random) => Selection::Random,
                None => base.map_or(Selection::Balanced, |s| s.selection),
            },
            downsample_base: match self.downsample_base {
                Some(BaseArg::MeanClassSize) => DownsampleBase::MeanClassSize,
                Some(BaseArg::ClassCount) => DownsampleBase::ClassCount,
                None => base.map_or(DownsampleBase::MeanClassSize, |s| s.downsample_base),
            },
            seed: self
                .seed
                .or(base.map(|s| s.seed))
                .or(config.seed)
                .unwrap_or(0),
        };
        if matches!(scenario, 2 | 4) && cfg.gamma.is_none() {
            return Err(usage(format!("scenario {scenario} requires --gamma")));
        }
        if matches!(scenario, 3 | 4) && cfg.per_client_classes.is_none() {
            return Err(usage(format!(
                "scenario {scenario} requires --per-client-classes"
            )));
        }
        Ok(cfg)
    }
}

#[derive(Args)]
pub struct TrainArgs {
    /// Partition plan produced by `partition`
    #[arg(long)]
    pub plan: PathBuf,
    #[command(flatten)]
    pub data: DatasetArgs,
    /// Model family [default: mlp]
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Hidden units of the MLP [default: 64]
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Communication rounds [default: 50]
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Clients sampled per round [default: 10]
    #[arg(long)]
    pub clients_per_round: Option<usize>,
    /// Local epochs per round [default: 5]
    #[arg(long)]
    pub local_epochs: Option<usize>,
    /// Local mini-batch size [default: 128]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Local learning rate [default: 0.1]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Server learning rate [default: 1.0]
    #[arg(long)]
    pub server_lr: Option<f64>,
    /// Repetitions; repetition r uses seed + r [default: 3]
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub repetitions: Option<u64>,
    /// Base seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for local training; does not change results
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Output directory (also FEDIMB_OUT_DIR) [default: fedimb-run]
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// JSON experiment config; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Effective training settings after merging flags, environment, config
/// file and defaults.
pub struct TrainSettings {
    pub model: ModelChoice,
    pub fl: FLConfig,
    pub repetitions: usize,
    pub base_seed: u64,
    pub out_dir: PathBuf,
}

impl TrainArgs {
    pub fn settings(&self, config: &ExperimentConfig) -> anyhow::Result<TrainSettings> {
        let mut model = config.model.unwrap_or_default();
        match self.model {
            Some(ModelArg::Logistic) => model.kind = ModelKind::Logistic,
            Some(ModelArg::Mlp) => model.kind = ModelKind::Mlp,
            None => {}
        }
        if let Some(h) = self.hidden {
            model.hidden_dim = h;
        }
        let base_seed = self.seed.or(config.seed).unwrap_or(0);
        let mut fl = config.fl.unwrap_or_default();
        fl.rounds = self.rounds.unwrap_or(fl.rounds);
        fl.clients_per_round = self.clients_per_round.unwrap_or(fl.clients_per_round);
        fl.local_epochs = self.local_epochs.unwrap_or(fl.local_epochs);
        fl.batch_size = self.batch_size.unwrap_or(fl.batch_size);
        fl.local_lr = self.lr.unwrap_or(fl.local_lr);
        fl.server_lr = self.server_lr.unwrap_or(fl.server_lr);
        fl.seed = base_seed;
        let repetitions = match self.repetitions {
            Some(r) => r as usize,
            None => config.repetitions.unwrap_or(DEFAULT_REPETITIONS),
        };
        if repetitions == 0 {
            return Err(usage("repetitions must be at least 1"));
        }
        let out_dir = self
            .out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .or(config.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        Ok(TrainSettings {
            model,
            fl,
            repetitions,
            base_seed,
            out_dir,
        })
    }
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "source")]
pub struct MetricsSource {
    /// Partition plan JSON
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// JSON array of per-client count vectors, e.g. [[2,0,0],[0,4,0]]
    #[arg(long)]
    pub counts: Option<PathBuf>,
}

#[derive(Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub source: MetricsSource,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Run directories written by `train`
    pub runs: Vec<PathBuf>,
    /// Directory for summary.csv and curves.csv
    #[arg(long, default_value = "report")]
    pub out_dir: PathBuf,
}
