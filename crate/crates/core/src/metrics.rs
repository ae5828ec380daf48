//! Confusion matrices, threshold metrics, ROC curves and AUC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary cross-tabulation with class 1 as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

pub fn confusion_matrix(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Shape {
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::Data("confusion matrix of zero rows".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (0, 0) => cm.tn += 1,
            (0, 1) => cm.fp += 1,
            (1, 0) => cm.fn_ += 1,
            _ => return Err(Error::Data("labels must be 0 or 1".into())),
        }
    }
    Ok(cm)
}

/// Which ratios hit a zero denominator (and were reported as 0).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegenerateFlags {
    pub precision: bool,
    pub recall: bool,
    pub f1: bool,
}

impl DegenerateFlags {
    pub fn any(&self) -> bool {
        self.precision || self.recall || self.f1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub degenerate: DegenerateFlags,
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// Accuracy, precision, recall and F1. Zero denominators give 0 and set the
/// matching flag; a matrix with no rows gives all zeros.
pub fn metrics_from_confusion(cm: &ConfusionMatrix) -> ThresholdMetrics {
    let (accuracy, _) = ratio(cm.tp + cm.tn, cm.total());
    let (precision, p_deg) = ratio(cm.tp, cm.tp + cm.fp);
    let (recall, r_deg) = ratio(cm.tp, cm.tp + cm.fn_);
    let (f1, f_deg) = if precision + recall > 0.0 {
        (2.0 * precision * recall / (precision + recall), false)
    } else {
        (0.0, true)
    };
    ThresholdMetrics {
        accuracy,
        precision,
        recall,
        f1,
        degenerate: DegenerateFlags {
            precision: p_deg,
            recall: r_deg,
            f1: f_deg,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub roc_auc: f64,
    pub confusion: ConfusionMatrix,
    pub degenerate: DegenerateFlags,
}

impl MetricsReport {
    pub fn new(cm: ConfusionMatrix, roc_auc: f64) -> Self {
        let m = metrics_from_confusion(&cm);
        MetricsReport {
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            roc_auc,
            confusion: cm,
            degenerate: m.degenerate,
        }
    }
}

/// ROC points from (0,0) to (1,1). `thresholds[i]` is the score cut that
/// produced `points[i]`; the leading (0,0) has none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
    pub thresholds: Vec<Option<f64>>,
}

impl RocCurve {
    /// `fpr,tpr,threshold`, empty threshold for the origin.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["fpr", "tpr", "threshold"])?;
        for (&(fpr, tpr), thr) in self.points.iter().zip(&self.thresholds) {
            w.write_record([fpr.to_string(), tpr.to_string(), thr.map(|t| t.to_string()).unwrap_or_default()])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("utf-8"))
    }
}

fn class_counts(y_true: &[u8]) -> Result<(usize, usize)> {
    let pos = y_true.iter().filter(|&&y| y == 1).count();
    if y_true.iter().any(|&y| y > 1) {
        return Err(Error::Data("labels must be 0 or 1".into()));
    }
    let neg = y_true.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Data("ROC needs both classes in the truth vector".into()));
    }
    Ok((pos, neg))
}

/// Sweeps the distinct scores in descending order; tied scores move
/// together and produce a diagonal segment.
pub fn roc_curve(y_true: &[u8], scores: &[f64]) -> Result<RocCurve> {
    if y_true.len() != scores.len() {
        return Err(Error::Shape {
            expected: y_true.len(),
            actual: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Data("NaN score".into()));
    }
    let (pos, neg) = class_counts(y_true)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![None];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let cut = scores[order[i]];
        while i < order.len() && scores[order[i]] == cut {
            if y_true[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        thresholds.push(Some(cut));
    }
    if points.last() != Some(&(1.0, 1.0)) {
        points.push((1.0, 1.0));
        thresholds.push(None);
    }
    Ok(RocCurve { points, thresholds })
}

/// Trapezoidal area under the curve.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

/// Mann-Whitney estimate: the fraction of (positive, negative) pairs where
/// the positive scores higher, ties counting one half.
pub fn auc_pairwise(y_true: &[u8], scores: &[f64]) -> Result<f64> {
    if y_true.len() != scores.len() {
        return Err(Error::Shape {
            expected: y_true.len(),
            actual: scores.len(),
        });
    }
    let (pos, neg) = class_counts(y_true)?;
    let mut wins = 0.0;
    for (i, &yi) in y_true.iter().enumerate() {
        if yi != 1 {
            continue;
        }
        for (j, &yj) in y_true.iter().enumerate() {
            if yj != 0 {
                continue;
            }
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (pos * neg) as f64)
}

/// Confusion-based metrics plus score-based AUC for one evaluation.
pub fn evaluate(y_true: &[u8], y_pred: &[u8], scores: &[f64]) -> Result<(MetricsReport, RocCurve)> {
    let cm = confusion_matrix(y_true, y_pred)?;
    let curve = roc_curve(y_true, scores)?;
    Ok((MetricsReport::new(cm, auc(&curve)), curve))
}
