//! Tables and curves over finished run directories.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use fedimb::experiment::round_log_file;
use fedimb::ExperimentSummary;
use serde::Deserialize;

use crate::args::ReportArgs;

#[derive(Deserialize)]
struct CurveRow {
    round: usize,
    accuracy: f64,
}

struct Run {
    name: String,
    dir: PathBuf,
    summary: ExperimentSummary,
}

fn load_run(dir: &Path) -> anyhow::Result<Run> {
    let path = dir.join("summary.json");
    let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
    let summary: ExperimentSummary =
        serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))?;
    Ok(Run {
        name: dir.display().to_string(),
        dir: dir.to_path_buf(),
        summary,
    })
}

fn gamma_field(g: f64) -> String {
    if g.is_infinite() {
        "inf".into()
    } else {
        g.to_string()
    }
}

pub fn run(args: &ReportArgs) -> anyhow::Result<()> {
    if args.runs.is_empty() {
        bail!("no run directories given");
    }
    let mut runs = args
        .runs
        .iter()
        .map(|d| load_run(d))
        .collect::<anyhow::Result<Vec<_>>>()?;
    runs.sort_by(|a, b| {
        let (ma, mb) = (&a.summary.plan_metrics, &b.summary.plan_metrics);
        ma.mid
            .total_cmp(&mb.mid)
            .then(mb.wcs.total_cmp(&ma.wcs))
            .then_with(|| a.name.cmp(&b.name))
    });
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    let table_path = args.out_dir.join("summary.csv");
    let mut table = csv::Writer::from_path(&table_path)
        .with_context(|| format!("writing {}", table_path.display()))?;
    table.write_record([
        "run",
        "dataset",
        "scenario",
        "gamma",
        "mid",
        "wcs",
        "accuracy_mean",
        "accuracy_std",
        "macro_f1_mean",
        "macro_f1_std",
    ])?;
    for run in &runs {
        let s = &run.summary;
        table.write_record([
            run.name.clone(),
            s.dataset.clone(),
            s.scenario.scenario.to_string(),
            gamma_field(s.plan_metrics.gamma),
            s.plan_metrics.mid.to_string(),
            s.plan_metrics.wcs.to_string(),
            s.accuracy.mean.to_string(),
            s.accuracy.std.to_string(),
            s.macro_f1.mean.to_string(),
            s.macro_f1.std.to_string(),
        ])?;
    }
    table.flush()?;

    let curves_path = args.out_dir.join("curves.csv");
    let mut curves = csv::Writer::from_path(&curves_path)
        .with_context(|| format!("writing {}", curves_path.display()))?;
    curves.write_record(["run", "round", "repetition", "accuracy"])?;
    for run in &runs {
        for rep in &run.summary.repetitions {
            let path = run.dir.join(round_log_file(rep.repetition));
            let mut reader =
                csv::Reader::from_path(&path).with_context(|| format!("reading {}", path.display()))?;
            for row in reader.deserialize() {
                let row: CurveRow = row.with_context(|| format!("parsing {}", path.display()))?;
                curves.write_record([
                    run.name.clone(),
                    row.round.to_string(),
                    rep.repetition.to_string(),
                    row.accuracy.to_string(),
                ])?;
            }
        }
    }
    curves.flush()?;
    println!(
        "{} runs -> {}, {}",
        runs.len(),
        table_path.display(),
        curves_path.display()
    );
    Ok(())
}
