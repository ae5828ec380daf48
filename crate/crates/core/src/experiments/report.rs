//! Experiment reports and their JSON/CSV/SVG renderings.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{svg, ExperimentConfig, ExperimentId, HpoConfig};
use crate::chi2_select::FeatureRanking;
use crate::error::{Error, Result};
use crate::learners::{Algorithm, HyperMap};
use crate::metrics::{MetricsReport, RocCurve};
use crate::preprocess::FittedPipeline;
use crate::tuning::SearchOutcome;

pub(crate) const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub algorithm: Algorithm,
    pub name: String,
    /// Effective hyperparameters of the evaluated model.
    pub hyperparameters: HyperMap,
    pub metrics: MetricsReport,
    pub roc: RocCurve,
    /// Grid-search wall clock, when a search ran.
    pub search_seconds: Option<f64>,
    pub search: Option<SearchOutcome>,
    pub fit_seconds: f64,
    pub rounds_run: usize,
    /// Test-row scores in `pipeline.split.test_rows` order.
    pub test_scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentRecord {
    pub crate_version: String,
    pub dataset_sha256: String,
    pub split_seed: u64,
    pub model_seed: u64,
    pub cv_seed: Option<u64>,
    pub k_folds: Option<usize>,
    /// SHA-256 of each searched grid's JSON.
    pub grid_sha256: BTreeMap<Algorithm, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub format_version: u32,
    pub experiment: ExperimentId,
    pub config: ExperimentConfig,
    pub n_rows: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub test_positives: usize,
    pub design_columns: Vec<String>,
    pub selected_features: Vec<String>,
    pub ranking: FeatureRanking,
    pub models: Vec<ModelResult>,
    pub pipeline: FittedPipeline,
    pub environment: EnvironmentRecord,
    pub warnings: Vec<String>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: ExperimentReport = serde_json::from_str(text)?;
        if report.format_version != REPORT_FORMAT_VERSION {
            return Err(Error::Data(format!("report format version {} not supported", report.format_version)));
        }
        Ok(report)
    }

    /// Zeroes every wall-clock field so two runs can be compared byte for byte.
    pub fn strip_timing(&mut self) {
        for m in &mut self.models {
            m.fit_seconds = 0.0;
            if let Some(s) = &mut m.search_seconds {
                *s = 0.0;
            }
            if let Some(search) = &mut m.search {
                search.strip_timing();
            }
        }
    }

    pub fn has_search(&self) -> bool {
        !matches!(self.config.hpo, HpoConfig::Off)
    }

    pub fn model(&self, algorithm: Algorithm) -> Option<&ModelResult> {
        self.models.iter().find(|m| m.algorithm == algorithm)
    }

    /// `algorithm,accuracy,precision,recall,f1,roc_auc,tp,tn,fp,fn`.
    pub fn metrics_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["algorithm", "accuracy", "precision", "recall", "f1", "roc_auc", "tp", "tn", "fp", "fn"])?;
        for m in &self.models {
            let r = &m.metrics;
            let c = &r.confusion;
            w.write_record([
                m.algorithm.code().to_string(),
                format!("{:.4}", r.accuracy),
                format!("{:.4}", r.precision),
                format!("{:.4}", r.recall),
                format!("{:.4}", r.f1),
                format!("{:.4}", r.roc_auc),
                c.tp.to_string(),
                c.tn.to_string(),
                c.fp.to_string(),
                c.fn_.to_string(),
            ])?;
        }
        finish(w)
    }

    /// Every model's ROC points: `algorithm,fpr,tpr,threshold`.
    pub fn roc_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["algorithm", "fpr", "tpr", "threshold"])?;
        for m in &self.models {
            for (&(fpr, tpr), thr) in m.roc.points.iter().zip(&m.roc.thresholds) {
                w.write_record([
                    m.algorithm.code().to_string(),
                    fpr.to_string(),
                    tpr.to_string(),
                    thr.map(|t| t.to_string()).unwrap_or_default(),
                ])?;
            }
        }
        finish(w)
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OutputFormat {
    Json,
    Csv,
    Svg,
}

impl OutputFormat {
    pub const ALL: [OutputFormat; 3] = [OutputFormat::Json, OutputFormat::Csv, OutputFormat::Svg];

    /// Parses a comma-separated list such as `json,csv`.
    pub fn parse_list(s: &str) -> Result<Vec<OutputFormat>> {
        let mut out: Vec<OutputFormat> = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(OutputFormat::from_str)
            .collect::<Result<_>>()?;
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err(Error::Data("no output format given".into()));
        }
        Ok(out)
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "svg" => Ok(OutputFormat::Svg),
            _ => Err(Error::Data(format!("unknown output format `{s}`"))),
        }
    }
}

fn write(dir: &Path, name: &str, content: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, content)?;
    written.push(path);
    Ok(())
}

/// Writes the requested renderings into `dir` (created if needed) and
/// returns the written paths.
///
/// * json: `report.json`
/// * csv: `metrics.csv`, `roc.csv`, `ranking.csv`, and `cv_<ALG>.csv` per searched model
/// * svg: `roc.svg`, `metrics.svg`, `timing.svg`
pub fn emit_report(report: &ExperimentReport, dir: impl AsRef<Path>, formats: &[OutputFormat]) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for format in formats {
        match format {
            OutputFormat::Json => write(dir, "report.json", &report.to_json()?, &mut written)?,
            OutputFormat::Csv => {
                write(dir, "metrics.csv", &report.metrics_csv()?, &mut written)?;
                write(dir, "roc.csv", &report.roc_csv()?, &mut written)?;
                write(dir, "ranking.csv", &report.ranking.to_csv()?, &mut written)?;
                for m in &report.models {
                    if let Some(search) = &m.search {
                        write(dir, &format!("cv_{}.csv", m.algorithm.code()), &search.to_csv()?, &mut written)?;
                    }
                }
            }
            OutputFormat::Svg => {
                let title = format!("Experiment {}", report.experiment);
                write(dir, "roc.svg", &svg::roc_overlay(&title, &report.models), &mut written)?;
                write(dir, "metrics.svg", &svg::metric_bars(&title, &report.models), &mut written)?;
                write(dir, "timing.svg", &svg::timing_bars(&title, &report.models), &mut written)?;
            }
        }
    }
    Ok(written)
}

/// Reads `report.json` from a directory, or a report file directly.
pub fn load_report(path: impl AsRef<Path>) -> Result<ExperimentReport> {
    let path = path.as_ref();
    let file = if path.is_dir() { path.join("report.json") } else { path.to_path_buf() };
    ExperimentReport::from_json(&fs::read_to_string(file)?)
}
