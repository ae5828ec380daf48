//! `bmt`: ingest, rank, run and compare bone-marrow transplant experiments.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bmt_core::experiments::{
    compare_experiments, emit_report, load_for_experiment, load_report, rank_full_dataset, run_experiment,
    ExperimentConfig, ExperimentId, ExperimentReport, FeatureMode, OutputFormat, RankingRows,
};
use bmt_core::tabular_io::{load_dataset, summarize_numeric};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bmt", version, about = "Survival classification experiments on bone-marrow transplant data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rows {
    Train,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Load a dataset and print its numeric summaries.
    Ingest {
        path: PathBuf,
        /// Print the summaries as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Chi-squared ranking of the encoded columns over the whole table.
    Rank {
        path: PathBuf,
        #[arg(long, default_value = "survival_status")]
        target: String,
        #[arg(long, default_value = "1")]
        positive: String,
        #[arg(long)]
        drop_leaky: bool,
        /// Only print the first N entries.
        #[arg(long)]
        top: Option<usize>,
        /// Write the full ranking as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one experiment and write its report.
    Run {
        /// Preset: A (all features), B (all + grid search), C (top 11), D (top 11 + grid search).
        #[arg(long, conflicts_with = "config")]
        experiment: Option<String>,
        /// JSON experiment config; flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Split, fold and model seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        drop_leaky: bool,
        #[arg(long, value_enum)]
        ranking_rows: Option<Rows>,
        /// Comma-separated subset of json,csv,svg.
        #[arg(long, default_value = "json,csv,svg")]
        formats: String,
        /// Run the grid search on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Compare experiment reports (directories or report.json files).
    Compare {
        #[arg(required = true, num_args = 2..)]
        reports: Vec<PathBuf>,
        /// Also write max_metrics.csv and timing.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn ingest(path: &Path, json: bool) -> Result<()> {
    let ds = load_dataset(path)?;
    let summaries = summarize_numeric(&ds)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&summaries)?);
        return Ok(());
    }
    println!("{} rows, {} columns, {} missing cells", ds.n_rows(), ds.n_cols(), ds.missing_count());
    for w in ds.warnings() {
        println!("warning: {w}");
    }
    println!("{:<28}{:>16}{:>12}{:>16}{:>16}", "attribute", "maximum", "minimum", "mean", "std");
    for s in &summaries {
        println!(
            "{:<28}{:>16.4}{:>12.4}{:>16.4}{:>16.4}",
            s.column, s.maximum, s.minimum, s.mean, s.standard_deviation
        );
    }
    Ok(())
}

fn rank(path: &Path, target: &str, positive: &str, drop_leaky: bool, top: Option<usize>, out: Option<&Path>) -> Result<()> {
    let ds = load_for_experiment(path, target, drop_leaky)?;
    let (_, ranking) = rank_full_dataset(&ds, target, positive)?;
    if let Some(out) = out {
        fs::write(out, ranking.to_csv()?).with_context(|| format!("writing {}", out.display()))?;
    }
    println!("{:>4}  {:<36}{:>8}{:>20}", "rank", "attribute", "column", "score");
    let n = top.unwrap_or(ranking.entries.len());
    for (i, e) in ranking.entries.iter().take(n).enumerate() {
        println!("{:>4}  {:<36}{:>8}{:>20.4}", i + 1, e.column, e.original_index, e.score);
    }
    Ok(())
}

struct RunArgs {
    experiment: Option<String>,
    config: Option<PathBuf>,
    dataset: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    top_k: Option<usize>,
    drop_leaky: bool,
    ranking_rows: Option<Rows>,
    formats: String,
    sequential: bool,
}

fn build_config(a: &RunArgs) -> Result<ExperimentConfig> {
    let mut config = match &a.config {
        Some(path) => ExperimentConfig::load(path).with_context(|| format!("config {}", path.display()))?,
        None => {
            let id: ExperimentId = a.experiment.as_deref().unwrap_or("A").parse()?;
            ExperimentConfig::preset(id, PathBuf::new())
        }
    };
    if let Some(d) = &a.dataset {
        config.dataset = d.clone();
    }
    if config.dataset.as_os_str().is_empty() {
        bail!("no dataset given (use --dataset or set `dataset` in the config)");
    }
    if let Some(seed) = a.seed {
        config = config.with_seed(seed);
    }
    if let Some(k) = a.top_k {
        config.feature_mode = FeatureMode::TopK { k };
    }
    if a.drop_leaky {
        config.drop_leaky = true;
    }
    match a.ranking_rows {
        Some(Rows::Train) => config.ranking_rows = RankingRows::Train,
        Some(Rows::All) => config.ranking_rows = RankingRows::All,
        None => {}
    }
    if a.sequential {
        config.parallel = false;
    }
    if let Some(out) = &a.out {
        config.output_dir = Some(out.clone());
    }
    config.validate()?;
    Ok(config)
}

fn print_metrics(report: &ExperimentReport) {
    println!(
        "experiment {}: {} train / {} test rows, {} features",
        report.experiment,
        report.n_train,
        report.n_test,
        report.selected_features.len()
    );
    println!("{:<6}{:>10}{:>11}{:>9}{:>9}{:>9}{:>11}", "model", "accuracy", "precision", "recall", "f1", "roc_auc", "seconds");
    for m in &report.models {
        let r = &m.metrics;
        println!(
            "{:<6}{:>10.4}{:>11.4}{:>9.4}{:>9.4}{:>9.4}{:>11.3}",
            m.algorithm.code(),
            r.accuracy,
            r.precision,
            r.recall,
            r.f1,
            r.roc_auc,
            m.search_seconds.unwrap_or(m.fit_seconds)
        );
    }
}

fn run(a: RunArgs) -> Result<()> {
    let formats = OutputFormat::parse_list(&a.formats)?;
    let config = build_config(&a)?;
    let report = run_experiment(&config)?;
    print_metrics(&report);
    if let Some(dir) = &config.output_dir {
        let written = emit_report(&report, dir, &formats)?;
        log::info!("wrote {} files to {}", written.len(), dir.display());
    }
    Ok(())
}

fn compare(paths: &[PathBuf], out: Option<&Path>) -> Result<()> {
    let reports = paths
        .iter()
        .map(|p| load_report(p).with_context(|| format!("report {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let comparison = compare_experiments(&reports)?;
    print!("{}", comparison.to_text());
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("max_metrics.csv"), comparison.max_metrics_csv()?)?;
        if !comparison.timing.is_empty() {
            fs::write(dir.join("timing.csv"), comparison.timing_csv()?)?;
        }
    }
    Ok(())
}

/// Library errors already render their sources, so the chain stops there.
fn render(e: &anyhow::Error) -> String {
    let mut parts = Vec::new();
    for cause in e.chain() {
        parts.push(cause.to_string());
        if cause.downcast_ref::<bmt_core::Error>().is_some() {
            break;
        }
    }
    parts.join(": ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest { path, json } => ingest(&path, json),
        Command::Rank {
            path,
            target,
            positive,
            drop_leaky,
            top,
            out,
        } => rank(&path, &target, &positive, drop_leaky, top, out.as_deref()),
        Command::Run {
            experiment,
            config,
            dataset,
            out,
            seed,
            top_k,
            drop_leaky,
            ranking_rows,
            formats,
            sequential,
        } => run(RunArgs {
            experiment,
            config,
            dataset,
            out,
            seed,
            top_k,
            drop_leaky,
            ranking_rows,
            formats,
            sequential,
        }),
        Command::Compare { reports, out } => compare(&reports, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", render(&e));
            ExitCode::FAILURE
        }
    }
}
