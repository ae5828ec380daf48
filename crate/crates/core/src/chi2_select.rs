//! Chi-squared feature scoring and top-k selection.
//!
//! The ranking statistic treats each column's values as observed
//! frequencies: for class `c`, `O_c` is the sum of the column over rows of
//! that class and `E_c = (column total) * n_c / n`. The classic contingency
//! statistic is kept alongside as an independent check for indicator columns.

use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::DesignMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankingMethod {
    FrequencySum,
    Contingency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub column: String,
    pub score: f64,
    pub original_index: usize,
}

/// Columns sorted by descending score, ties by ascending original index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub entries: Vec<RankEntry>,
    pub method: RankingMethod,
}

impl FeatureRanking {
    pub fn top_names(&self, k: usize) -> Vec<String> {
        self.entries.iter().take(k).map(|e| e.column.clone()).collect()
    }

    /// `rank,attribute,original_index,score`, ranks starting at 1.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["rank", "attribute", "original_index", "score"])?;
        for (i, e) in self.entries.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                e.column.clone(),
                e.original_index.to_string(),
                format!("{:.4}", e.score),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("utf-8"))
    }
}

fn class_sizes(labels: &[u8]) -> Result<[usize; 2]> {
    let mut sizes = [0usize; 2];
    for &l in labels {
        match l {
            0 | 1 => sizes[l as usize] += 1,
            _ => return Err(Error::Data("labels must be 0 or 1".into())),
        }
    }
    if sizes.contains(&0) {
        return Err(Error::Data("chi-squared scoring needs both classes present".into()));
    }
    Ok(sizes)
}

/// Frequency-sum chi-squared score per column. Columns summing to zero
/// score 0. Each column is summed in row order, so the parallel result is
/// bitwise identical to a sequential pass.
pub fn chi2_frequency_sum(values: ArrayView2<'_, f64>, labels: &[u8], names: &[String]) -> Result<Vec<f64>> {
    if values.nrows() != labels.len() {
        return Err(Error::Shape {
            expected: values.nrows(),
            actual: labels.len(),
        });
    }
    let sizes = class_sizes(labels)?;
    let n = labels.len() as f64;
    let cols: Vec<_> = values.axis_iter(Axis(1)).enumerate().collect();
    cols.into_par_iter()
        .map(|(j, col)| {
            let mut observed = [0.0f64; 2];
            for (&v, &l) in col.iter().zip(labels) {
                if v < 0.0 {
                    let name = names.get(j).cloned().unwrap_or_else(|| format!("#{j}"));
                    return Err(Error::column(name, "negative entry; chi-squared needs non-negative data"));
                }
                observed[l as usize] += v;
            }
            let total = observed[0] + observed[1];
            if total == 0.0 {
                return Ok(0.0);
            }
            Ok((0..2)
                .map(|c| {
                    let expected = total * sizes[c] as f64 / n;
                    (observed[c] - expected).powi(2) / expected
                })
                .sum())
        })
        .collect()
}

/// Pearson statistic of an r x c contingency table.
pub fn chi2_contingency(table: &[Vec<f64>]) -> Result<f64> {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || table.iter().any(|r| r.len() != cols) {
        return Err(Error::Data("contingency table must be a non-empty rectangle".into()));
    }
    if table.iter().flatten().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::Data("contingency counts must be finite and non-negative".into()));
    }
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<f64> = (0..cols).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    if row_sums.contains(&0.0) || col_sums.contains(&0.0) {
        return Err(Error::Data("contingency table has a zero row or column sum".into()));
    }
    let total: f64 = row_sums.iter().sum();
    let mut stat = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &obs) in row.iter().enumerate() {
            let expected = row_sums[i] * col_sums[j] / total;
            stat += (obs - expected).powi(2) / expected;
        }
    }
    Ok(stat)
}

pub fn rank_features(scores: &[f64], names: &[String], method: RankingMethod) -> Result<FeatureRanking> {
    if scores.len() != names.len() {
        return Err(Error::Shape {
            expected: names.len(),
            actual: scores.len(),
        });
    }
    let mut entries: Vec<RankEntry> = scores
        .iter()
        .zip(names)
        .enumerate()
        .map(|(i, (&score, name))| RankEntry {
            column: name.clone(),
            score,
            original_index: i,
        })
        .collect();
    entries.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.original_index.cmp(&b.original_index))
    });
    Ok(FeatureRanking { entries, method })
}

/// Scores and ranks every column of a (non-negative) design matrix.
pub fn rank_matrix(matrix: &DesignMatrix) -> Result<FeatureRanking> {
    let scores = chi2_frequency_sum(matrix.values.view(), &matrix.labels, &matrix.column_names)?;
    rank_features(&scores, &matrix.column_names, RankingMethod::FrequencySum)
}

/// The `k` top-ranked columns, in ranking order.
pub fn select_top_k(matrix: &DesignMatrix, ranking: &FeatureRanking, k: usize) -> Result<DesignMatrix> {
    if k == 0 || k > matrix.n_cols() {
        return Err(Error::Data(format!("k = {k} outside 1..={}", matrix.n_cols())));
    }
    matrix.select_named(&ranking.top_names(k))
}
