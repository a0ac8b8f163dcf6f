//! FedAvg simulation: client sampling, local SGD, size-weighted aggregation
//! and global evaluation, one synchronous round at a time.
//!
//! Local training of the clients selected in a round may run in parallel.
//! Aggregation always consumes updates in ascending client-id order, so the
//! result does not depend on the thread count.

use rand::seq::{index, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{self, Batch, ModelParams, ModelSpec};
use crate::partition::PartitionPlan;
use crate::rng::{self, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FLConfig {
    pub rounds: usize,
    pub clients_per_round: usize,
    pub local_epochs: usize,
    pub batch_size: usize,
    pub local_lr: f64,
    pub server_lr: f64,
    pub seed: u64,
}

impl Default for FLConfig {
    fn default() -> Self {
        Self {
            rounds: 50,
            clients_per_round: 10,
            local_epochs: 5,
            batch_size: 128,
            local_lr: 0.1,
            server_lr: 1.0,
            seed: 0,
        }
    }
}

impl FLConfig {
    pub fn validate(&self, clients: usize) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::config("rounds must be at least 1"));
        }
        if self.clients_per_round == 0 || self.clients_per_round > clients {
            return Err(Error::config(format!(
                "clients_per_round must be in 1..={clients}, got {}",
                self.clients_per_round
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        if !(self.local_lr > 0.0 && self.local_lr.is_finite()) {
            return Err(Error::config("local_lr must be positive"));
        }
        if !(self.server_lr >= 0.0 && self.server_lr.is_finite()) {
            return Err(Error::config("server_lr must be non-negative"));
        }
        Ok(())
    }
}

/// Global-model quality on a held-out set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<u64>>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
}

impl EvalReport {
    /// Precision, recall and F1 per class with `0/0 = 0`; macro-F1 is their
    /// unweighted mean over all classes.
    pub fn from_predictions(labels: &[usize], predicted: &[usize], classes: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::input("cannot evaluate on an empty set"));
        }
        if labels.len() != predicted.len() {
            return Err(Error::input(format!(
                "{} labels but {} predictions",
                labels.len(),
                predicted.len()
            )));
        }
        let mut confusion = vec![vec![0u64; classes]; classes];
        for (&y, &p) in labels.iter().zip(predicted) {
            if y >= classes || p >= classes {
                return Err(Error::input(format!("class out of range: {y} / {p}")));
            }
            confusion[y][p] += 1;
        }
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let mut precision = Vec::with_capacity(classes);
        let mut recall = Vec::with_capacity(classes);
        let mut f1 = Vec::with_capacity(classes);
        let mut correct = 0;
        for c in 0..classes {
            let tp = confusion[c][c];
            correct += tp;
            let actual: u64 = confusion[c].iter().sum();
            let predicted: u64 = confusion.iter().map(|row| row[c]).sum();
            let p = ratio(tp, predicted);
            let r = ratio(tp, actual);
            precision.push(p);
            recall.push(r);
            f1.push(if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) });
        }
        Ok(Self {
            accuracy: correct as f64 / labels.len() as f64,
            macro_f1: f1.iter().sum::<f64>() / classes as f64,
            confusion,
            precision,
            recall,
            f1,
        })
    }
}

/// One round of a federated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    /// 1-based; round `t` reports the model after its `t`-th aggregation.
    pub round: usize,
    pub selected: Vec<usize>,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub recall: Vec<f64>,
    pub mean_local_loss: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub rounds: Vec<RoundLog>,
    pub final_report: EvalReport,
    pub final_params: ModelParams,
}

/// A trained client model and the number of samples behind it.
#[derive(Debug, Clone)]
pub struct ClientUpdate {
    pub client: usize,
    pub params: ModelParams,
    pub samples: usize,
    /// Mean training loss over the last local epoch.
    pub loss: f64,
}

/// `m` distinct clients out of `P`, ascending, drawn from the `(seed, t)` stream.
pub fn select_clients(clients: usize, m: usize, seed: u64, round: usize) -> Result<Vec<usize>> {
    if m == 0 || m > clients {
        return Err(Error::config(format!(
            "cannot select {m} of {clients} clients"
        )));
    }
    let mut rng = rng::stream(seed, Domain::ClientSelection, round as u64, 0);
    let mut ids = index::sample(&mut rng, clients, m).into_vec();
    ids.sort_unstable();
    Ok(ids)
}

/// Copies rows of a dataset into contiguous batch buffers.
struct Gather {
    features: Vec<f32>,
    labels: Vec<usize>,
}

impl Gather {
    fn new() -> Self {
        Self {
            features: Vec::new(),
            labels: Vec::new(),
        }
    }

    fn fill(&mut self, data: &Dataset, indices: &[usize]) -> Batch<'_> {
        self.features.clear();
        self.labels.clear();
        for &i in indices {
            self.features.extend_from_slice(data.row(i));
            self.labels.push(data.labels()[i]);
        }
        Batch::new(&self.features, &self.labels, data.dim()).expect("rows have dataset width")
    }
}

/// Client-side training: `epochs` passes of mini-batch SGD over `indices`,
/// reshuffled each epoch from the `(seed, round, client)` stream. The final
/// short batch of an epoch is kept. A single batch that covers the whole
/// client is taken in index order.
#[allow(clippy::too_many_arguments)]
pub fn local_train(
    global: &ModelParams,
    data: &Dataset,
    indices: &[usize],
    epochs: usize,
    batch_size: usize,
    lr: f64,
    seed: u64,
    round: usize,
    client: usize,
) -> Result<ClientUpdate> {
    let context = |e: Error| match e {
        Error::Numeric(msg) => Error::Numeric(format!("round {round}, client {client}: {msg}")),
        other => other,
    };
    if indices.is_empty() {
        return Err(Error::input(format!("client {client} has no samples")));
    }
    if batch_size == 0 {
        return Err(Error::config("batch_size must be at least 1"));
    }
    let mut gather = Gather::new();
    let mut params = global.clone();
    if epochs == 0 {
        let batch = gather.fill(data, indices);
        let loss = model::loss(&params, &batch)?;
        return Ok(ClientUpdate {
            client,
            params,
            samples: indices.len(),
            loss,
        });
    }
    let mut rng = rng::stream(seed, Domain::LocalShuffle, round as u64, client as u64);
    let mut order = indices.to_vec();
    let mut epoch_loss = 0.0;
    for _ in 0..epochs {
        if order.len() > batch_size {
            order.shuffle(&mut rng);
        }
        epoch_loss = 0.0;
        for chunk in order.chunks(batch_size) {
            let batch = gather.fill(data, chunk);
            let (loss, grad) = model::loss_with_gradient(&params, &batch)?;
            if !loss.is_finite() {
                return Err(context(Error::Numeric(format!("training loss is {loss}"))));
            }
            epoch_loss += loss * chunk.len() as f64;
            params = model::sgd_step(&params, &grad, lr).map_err(context)?;
        }
    }
    Ok(ClientUpdate {
        client,
        params,
        samples: indices.len(),
        loss: epoch_loss / order.len() as f64,
    })
}

/// `w + server_lr · Σ_i (n_i / Σ n_j)(w_i − w)`, summed in ascending client id.
pub fn aggregate(global: &ModelParams, updates: &[ClientUpdate], server_lr: f64) -> Result<ModelParams> {
    if updates.is_empty() {
        return Err(Error::input("no client updates to aggregate"));
    }
    let len = global.values().len();
    if let Some(bad) = updates
        .iter()
        .find(|u| u.params.values().len() != len || u.params.spec() != global.spec())
    {
        return Err(Error::input(format!(
            "client {} sent {} parameters, global model has {len}",
            bad.client,
            bad.params.values().len()
        )));
    }
    let total: usize = updates.iter().map(|u| u.samples).sum();
    if total == 0 {
        return Err(Error::input("client updates carry no samples"));
    }
    let mut ordered: Vec<&ClientUpdate> = updates.iter().collect();
    ordered.sort_by_key(|u| u.client);

    let w = global.values();
    let mut delta = vec![0.0; len];
    for u in ordered {
        let weight = u.samples as f64 / total as f64;
        for ((d, &wi), &wg) in delta.iter_mut().zip(u.params.values()).zip(w) {
            *d += weight * (wi - wg);
        }
    }
    let values: Vec<f64> = w.iter().zip(&delta).map(|(wg, d)| wg + server_lr * d).collect();
    global
        .with_values(values)
        .map_err(|e| Error::Numeric(format!("aggregated model: {e}")))
}

/// Predict every test row and score the predictions.
pub fn evaluate_global(params: &ModelParams, test: &Dataset) -> Result<EvalReport> {
    if params.spec().input_dim != test.dim() {
        return Err(Error::input(format!(
            "test set has {} features, model expects {}",
            test.dim(),
            params.spec().input_dim
        )));
    }
    let predicted = model::predict(params, test.features())?;
    EvalReport::from_predictions(test.labels(), &predicted, test.classes())
}

/// Execution knobs that never change results.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads for local training; 0 or 1 runs sequentially.
    pub threads: usize,
}

pub fn run_experiment(
    train: &Dataset,
    test: &Dataset,
    plan: &PartitionPlan,
    spec: &ModelSpec,
    cfg: &FLConfig,
) -> Result<ExperimentRun> {
    run_experiment_with(train, test, plan, spec, cfg, RunOptions::default(), |_, _| {})
}

/// Full FedAvg run. `on_round` sees each round's log and the new global model.
pub fn run_experiment_with<F>(
    train: &Dataset,
    test: &Dataset,
    plan: &PartitionPlan,
    spec: &ModelSpec,
    cfg: &FLConfig,
    opts: RunOptions,
    mut on_round: F,
) -> Result<ExperimentRun>
where
    F: FnMut(&RoundLog, &ModelParams),
{
    if plan.dataset.n != train.len() || plan.dataset.classes != train.classes() {
        return Err(Error::Integrity(format!(
            "plan is for {} samples / {} classes, training set has {} / {}",
            plan.dataset.n,
            plan.dataset.classes,
            train.len(),
            train.classes()
        )));
    }
    if spec.input_dim != train.dim() || spec.classes != train.classes() {
        return Err(Error::config(format!(
            "model expects {}x{} data, training set is {}x{}",
            spec.input_dim,
            spec.classes,
            train.dim(),
            train.classes()
        )));
    }
    cfg.validate(plan.clients())?;
    let pool = match opts.threads {
        0 | 1 => None,
        n => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config(e.to_string()))?,
        ),
    };

    let mut global = model::init_params(spec)?;
    let mut rounds = Vec::with_capacity(cfg.rounds);
    let mut report = evaluate_global(&global, test)?;
    for t in 0..cfg.rounds {
        let selected = select_clients(plan.clients(), cfg.clients_per_round, cfg.seed, t)?;
        let train_one = |&p: &usize| {
            local_train(
                &global,
                train,
                &plan.assignments[p],
                cfg.local_epochs,
                cfg.batch_size,
                cfg.local_lr,
                cfg.seed,
                t,
                p,
            )
        };
        let updates: Vec<ClientUpdate> = match &pool {
            Some(pool) => pool.install(|| selected.par_iter().map(train_one).collect::<Result<_>>())?,
            None => selected.iter().map(train_one).collect::<Result<_>>()?,
        };
        global = aggregate(&global, &updates, cfg.server_lr)?;
        report = evaluate_global(&global, test)?;
        let mean_local_loss = updates.iter().map(|u| u.loss).sum::<f64>() / updates.len() as f64;
        let log = RoundLog {
            round: t + 1,
            selected,
            accuracy: report.accuracy,
            macro_f1: report.macro_f1,
            recall: report.recall.clone(),
            mean_local_loss,
        };
        on_round(&log, &global);
        rounds.push(log);
    }
    Ok(ExperimentRun {
        rounds,
        final_report: report,
        final_params: global,
    })
}

/// Parameters after each of `steps` gradient-descent steps on `data`
/// (index 0 is the initialization). With `batch_size >= n` every step is a
/// full-batch step in index order; otherwise batches walk through an order
/// reshuffled each epoch from the `(seed, epoch)` stream.
pub fn centralized_trajectory(
    data: &Dataset,
    spec: &ModelSpec,
    steps: usize,
    lr: f64,
    batch_size: usize,
    seed: u64,
) -> Result<Vec<ModelParams>> {
    let mut out = Vec::with_capacity(steps + 1);
    centralized_walk(data, spec, steps, lr, batch_size, seed, |p| {
        out.push(p.clone());
        Ok(())
    })?;
    Ok(out)
}

/// Evaluation on `test` after each gradient-descent step on `data`; entry 0
/// is the initial model.
pub fn centralized_baseline(
    data: &Dataset,
    test: &Dataset,
    spec: &ModelSpec,
    steps: usize,
    lr: f64,
    batch_size: usize,
    seed: u64,
) -> Result<Vec<EvalReport>> {
    let mut out = Vec::with_capacity(steps + 1);
    centralized_walk(data, spec, steps, lr, batch_size, seed, |p| {
        out.push(evaluate_global(p, test)?);
        Ok(())
    })?;
    Ok(out)
}

fn centralized_walk<F>(
    data: &Dataset,
    spec: &ModelSpec,
    steps: usize,
    lr: f64,
    batch_size: usize,
    seed: u64,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(&ModelParams) -> Result<()>,
{
    if data.is_empty() {
        return Err(Error::input("centralized training set is empty"));
    }
    if batch_size == 0 {
        return Err(Error::config("batch_size must be at least 1"));
    }
    let mut params = model::init_params(spec)?;
    visit(&params)?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut cursor = order.len();
    let mut epoch = 0u64;
    let mut gather = Gather::new();
    for _ in 0..steps {
        if cursor >= order.len() {
            if order.len() > batch_size {
                let mut rng = rng::stream(seed, Domain::CentralShuffle, epoch, 0);
                order.sort_unstable();
                order.shuffle(&mut rng);
            }
            epoch += 1;
            cursor = 0;
        }
        let end = (cursor + batch_size).min(order.len());
        let batch = gather.fill(data, &order[cursor..end]);
        cursor = end;
        let grad = model::gradient(&params, &batch)?;
        params = model::sgd_step(&params, &grad, lr)?;
        visit(&params)?;
    }
    Ok(())
}
