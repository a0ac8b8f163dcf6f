use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context};
use fedimb::experiment::{repetition_seed, round_log_csv, round_log_file, RepetitionResult};
use fedimb::fed::run_experiment_with;
use fedimb::partition::{build_partition, parse_plan, serialize_plan};
use fedimb::{ExperimentConfig, ExperimentSummary, LabelDistribution, MetricReport, RunOptions};
use log::info;

use crate::args::{MetricsArgs, PartitionArgs, TrainArgs};

fn load_config(path: Option<&Path>) -> anyhow::Result<ExperimentConfig> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => {
            let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(ExperimentConfig::from_json(&bytes)?)
        }
    }
}

fn fmt_gamma(g: f64) -> String {
    if g.is_infinite() {
        "inf".into()
    } else {
        format!("{g:.4}")
    }
}

pub fn partition(args: &PartitionArgs) -> anyhow::Result<()> {
    let config = load_config(args.config.as_deref())?;
    let source = args.data.resolve(&config)?;
    let scenario = args.scenario(&config)?;
    let dataset = source.load_train()?;
    let plan = build_partition(&dataset, &scenario)?;
    let bytes = serialize_plan(&plan)?;
    fs::write(&args.out, bytes).with_context(|| format!("writing {}", args.out.display()))?;
    let m = &plan.metrics;
    println!("gamma  {}", fmt_gamma(m.gamma));
    println!("C      {}", plan.dataset.classes);
    println!("lrid   {:.1}", m.lrid);
    println!("mid    {:.4}", m.mid);
    println!("wcs    {:.4}", m.wcs);
    Ok(())
}

pub fn metrics(args: &MetricsArgs) -> anyhow::Result<()> {
    let report = if let Some(path) = &args.source.plan {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        parse_plan(&bytes)?.metrics
    } else {
        let path = args.source.counts.as_ref().expect("clap requires one source");
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let raw: Vec<Vec<u64>> = serde_json::from_slice(&bytes)
            .with_context(|| format!("{} is not a JSON array of count arrays", path.display()))?;
        let locals = raw
            .into_iter()
            .map(LabelDistribution::from_counts)
            .collect::<Result<Vec<_>, _>>()?;
        MetricReport::compute(&locals)?
    };
    println!("gamma  {}", fmt_gamma(report.gamma));
    println!("lrid   {:.1}", report.lrid);
    println!("mid    {:.4}", report.mid);
    println!("mcs    {:.4}", report.mcs);
    println!("wcs    {:.4}", report.wcs);
    Ok(())
}

pub fn train(args: &TrainArgs) -> anyhow::Result<()> {
    let started = Instant::now();
    let config = load_config(args.config.as_deref())?;
    let source = args.data.resolve(&config)?;
    let settings = args.settings(&config)?;
    let bytes = fs::read(&args.plan).with_context(|| format!("reading {}", args.plan.display()))?;
    let plan = parse_plan(&bytes)?;
    let train = source.load_train()?;
    plan.verify_dataset(&train)?;
    let test = source.load_test()?;
    if test.dim() != train.dim() || test.classes() != train.classes() {
        bail!("test set shape does not match the training set");
    }
    fs::create_dir_all(&settings.out_dir)
        .with_context(|| format!("creating {}", settings.out_dir.display()))?;

    let mut results = Vec::with_capacity(settings.repetitions);
    for r in 0..settings.repetitions {
        let seed = repetition_seed(settings.base_seed, r);
        let spec = settings.model.spec(&train, seed);
        let fl = fedimb::FLConfig { seed, ..settings.fl };
        let rounds = fl.rounds;
        let run = run_experiment_with(
            &train,
            &test,
            &plan,
            &spec,
            &fl,
            RunOptions {
                threads: args.threads,
            },
            |log, _| {
                info!(
                    "rep {r} round {}/{rounds}: accuracy {:.4} macro-F1 {:.4} local loss {:.4}",
                    log.round, log.accuracy, log.macro_f1, log.mean_local_loss
                )
            },
        )
        .with_context(|| format!("repetition {r}"))?;
        let path = settings.out_dir.join(round_log_file(r));
        fs::write(&path, round_log_csv(&run.rounds, train.classes()))
            .with_context(|| format!("writing {}", path.display()))?;
        results.push(RepetitionResult {
            repetition: r,
            seed,
            final_accuracy: run.final_report.accuracy,
            final_macro_f1: run.final_report.macro_f1,
        });
    }

    let summary = ExperimentSummary::new(
        train.name().to_string(),
        plan.config.clone(),
        plan.metrics,
        settings.model,
        settings.fl,
        settings.base_seed,
        results,
        started.elapsed().as_secs_f64(),
    )?;
    let path = settings.out_dir.join("summary.json");
    fs::write(&path, serde_json::to_vec_pretty(&summary)?)
        .with_context(|| format!("writing {}", path.display()))?;
    println!(
        "accuracy {:.4} ± {:.4}, macro-F1 {:.4} ± {:.4} over {} repetitions -> {}",
        summary.accuracy.mean,
        summary.accuracy.std,
        summary.macro_f1.mean,
        summary.macro_f1.std,
        settings.repetitions,
        settings.out_dir.display()
    );
    Ok(())
}
