//! Class-imbalance measurement and FedAvg simulation for federated
//! classification.
//!
//! - [`metrics`]: imbalance ratio, LRID, MID, cosine similarity, MCS, WCS
//! - [`data`]: MNIST IDX and CIFAR-10 binary loaders, synthetic blobs
//! - [`partition`]: the four imbalance scenarios as deterministic plans
//! - [`model`]: logistic regression and a tanh MLP with exact gradients
//! - [`fed`]: client sampling, local SGD, aggregation, evaluation
//! - [`experiment`]: repetition summaries and round-log output

pub mod data;
pub mod error;
pub mod experiment;
pub mod fed;
pub mod metrics;
pub mod model;
pub mod partition;
pub mod rng;

pub use data::{Dataset, Fingerprint, SynthConfig};
pub use error::{Error, Result};
pub use experiment::{DatasetSource, ExperimentConfig, ExperimentSummary, ModelChoice};
pub use fed::{ClientUpdate, EvalReport, ExperimentRun, FLConfig, RoundLog, RunOptions};
pub use metrics::{LabelDistribution, MetricReport};
pub use model::{ModelKind, ModelParams, ModelSpec};
pub use partition::{DownsampleBase, PartitionPlan, ScenarioConfig, Selection};
