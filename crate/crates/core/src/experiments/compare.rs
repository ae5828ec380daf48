//! Cross-experiment tables: best metric per experiment and grid-search time
//! with all features versus the reduced feature set.

use serde::{Deserialize, Serialize};

use super::{ExperimentId, ExperimentReport, FeatureMode};
use crate::error::{Error, Result};
use crate::learners::Algorithm;

/// Maximum of each metric over the models of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxMetricRow {
    pub experiment: ExperimentId,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub roc_auc: f64,
}

/// Grid-search wall clock of one algorithm with full and reduced features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub algorithm: Algorithm,
    pub full_feature_seconds: Option<f64>,
    pub reduced_feature_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub max_metrics: Vec<MaxMetricRow>,
    /// Empty unless some report ran a grid search.
    pub timing: Vec<TimingRow>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|s| format!("{s:.2}")).unwrap_or_default()
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

impl Comparison {
    /// `experiment,accuracy,precision,recall,f1,roc_auc` with 4 decimals.
    pub fn max_metrics_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["experiment", "accuracy", "precision", "recall", "f1", "roc_auc"])?;
        for r in &self.max_metrics {
            w.write_record([
                r.experiment.to_string(),
                format!("{:.4}", r.accuracy),
                format!("{:.4}", r.precision),
                format!("{:.4}", r.recall),
                format!("{:.4}", r.f1),
                format!("{:.4}", r.roc_auc),
            ])?;
        }
        finish(w)
    }

    /// `algorithm,full_feature_seconds,reduced_feature_seconds` with 2
    /// decimals; a side without a searched report is left empty.
    pub fn timing_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["algorithm", "full_feature_seconds", "reduced_feature_seconds"])?;
        for r in &self.timing {
            w.write_record([
                r.algorithm.code().to_string(),
                fmt_opt(r.full_feature_seconds),
                fmt_opt(r.reduced_feature_seconds),
            ])?;
        }
        finish(w)
    }

    /// Plain-text rendering of both tables.
    pub fn to_text(&self) -> String {
        let mut out = String::from("Maximum metric per experiment\n");
        out.push_str(&format!(
            "{:<11}{:>10}{:>11}{:>9}{:>9}{:>9}\n",
            "experiment", "accuracy", "precision", "recall", "f1", "roc_auc"
        ));
        for r in &self.max_metrics {
            out.push_str(&format!(
                "{:<11}{:>10.4}{:>11.4}{:>9.4}{:>9.4}{:>9.4}\n",
                r.experiment.to_string(),
                r.accuracy,
                r.precision,
                r.recall,
                r.f1,
                r.roc_auc
            ));
        }
        if !self.timing.is_empty() {
            out.push_str("\nGrid-search time (s)\n");
            out.push_str(&format!("{:<10}{:>14}{:>17}\n", "algorithm", "full features", "reduced features"));
            for r in &self.timing {
                out.push_str(&format!(
                    "{:<10}{:>14}{:>17}\n",
                    r.algorithm.code(),
                    fmt_opt(r.full_feature_seconds),
                    fmt_opt(r.reduced_feature_seconds)
                ));
            }
        }
        out
    }
}

fn max_of(report: &ExperimentReport, f: impl Fn(&crate::metrics::MetricsReport) -> f64) -> f64 {
    report.models.iter().map(|m| f(&m.metrics)).fold(f64::NEG_INFINITY, f64::max)
}

/// Builds the max-metric table (one row per report, input order) and, when
/// reports with grid search exist, the per-algorithm timing table. The first
/// searched full-feature report fills the full column and the first searched
/// top-k report the reduced column.
pub fn compare_experiments(reports: &[ExperimentReport]) -> Result<Comparison> {
    if reports.len() < 2 {
        return Err(Error::Data(format!("comparison needs at least 2 reports, got {}", reports.len())));
    }
    if let Some(r) = reports.iter().find(|r| r.models.is_empty()) {
        return Err(Error::Data(format!("report for experiment {} has no models", r.experiment)));
    }
    let max_metrics = reports
        .iter()
        .map(|r| MaxMetricRow {
            experiment: r.experiment,
            accuracy: max_of(r, |m| m.accuracy),
            precision: max_of(r, |m| m.precision),
            recall: max_of(r, |m| m.recall),
            f1: max_of(r, |m| m.f1),
            roc_auc: max_of(r, |m| m.roc_auc),
        })
        .collect();

    let searched = |full: bool| {
        reports
            .iter()
            .find(|r| r.has_search() && matches!(r.config.feature_mode, FeatureMode::Full) == full)
    };
    let (full, reduced) = (searched(true), searched(false));
    let mut timing = Vec::new();
    if full.is_some() || reduced.is_some() {
        for alg in Algorithm::ALL {
            let secs = |r: Option<&ExperimentReport>| r.and_then(|r| r.model(alg)).and_then(|m| m.search_seconds);
            let row = TimingRow {
                algorithm: alg,
                full_feature_seconds: secs(full),
                reduced_feature_seconds: secs(reduced),
            };
            if row.full_feature_seconds.is_some() || row.reduced_feature_seconds.is_some() {
                timing.push(row);
            }
        }
    }
    Ok(Comparison { max_metrics, timing })
}
