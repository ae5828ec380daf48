//! Fit/apply transforms: mean/mode imputation, drop-first dummy encoding,
//! standard scaling and the stratified train/test split.
//!
//! Every `fit_*` returns an immutable plan; every `apply_*` is a pure
//! function of its input and a plan, so a plan fitted on training rows can be
//! replayed on test rows without touching test statistics.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular_io::{AttributeKind, CellValue, Dataset};

// ---------------------------------------------------------------------------
// Imputation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Fill {
    NumericMean(f64),
    CategoricalMode(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnFill {
    pub column: String,
    pub fill: Fill,
}

/// Fill values for every column of the dataset it was fitted on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputePlan {
    pub fills: Vec<ColumnFill>,
}

impl ImputePlan {
    pub fn get(&self, column: &str) -> Option<&Fill> {
        self.fills.iter().find(|f| f.column == column).map(|f| &f.fill)
    }
}

/// Mean for numeric columns, most frequent level for nominal ones (ties go to
/// the lexicographically smallest level).
pub fn fit_imputer(dataset: &Dataset) -> Result<ImputePlan> {
    let mut fills = Vec::with_capacity(dataset.n_cols());
    for (j, attr) in dataset.schema().iter().enumerate() {
        let fill = match attr.kind {
            AttributeKind::Numeric => {
                let present: Vec<f64> = dataset.column(j).filter_map(CellValue::as_number).collect();
                if present.is_empty() {
                    return Err(Error::column(&attr.name, "all values missing; cannot impute"));
                }
                Fill::NumericMean(present.iter().sum::<f64>() / present.len() as f64)
            }
            AttributeKind::Categorical | AttributeKind::Boolean => {
                let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
                for c in dataset.column(j).filter_map(CellValue::as_category) {
                    *counts.entry(c).or_default() += 1;
                }
                // BTreeMap iterates in ascending order, so `max_by` with a
                // reversed key comparison keeps the smallest level on ties.
                let mode = counts
                    .iter()
                    .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
                    .map(|(level, _)| level.to_string())
                    .ok_or_else(|| Error::column(&attr.name, "all values missing; cannot impute"))?;
                Fill::CategoricalMode(mode)
            }
        };
        fills.push(ColumnFill {
            column: attr.name.clone(),
            fill,
        });
    }
    Ok(ImputePlan { fills })
}

pub fn apply_imputer(dataset: &Dataset, plan: &ImputePlan) -> Result<Dataset> {
    let fills: Vec<Option<&Fill>> = dataset.schema().iter().map(|a| plan.get(&a.name)).collect();
    let mut rows = Vec::with_capacity(dataset.n_rows());
    for row in dataset.rows() {
        let mut out = Vec::with_capacity(row.len());
        for (j, cell) in row.iter().enumerate() {
            if !cell.is_missing() {
                out.push(cell.clone());
                continue;
            }
            let name = &dataset.schema()[j].name;
            let value = match fills[j] {
                Some(Fill::NumericMean(v)) => CellValue::Number(*v),
                Some(Fill::CategoricalMode(level)) => CellValue::Category(level.clone()),
                None => return Err(Error::column(name, "missing cell but no fill in plan")),
            };
            out.push(value);
        }
        rows.push(out);
    }
    // An imputed categorical fill must be a level of the column; `with_rows`
    // re-validates that.
    dataset.with_rows(rows)
}

// ---------------------------------------------------------------------------
// Dummy encoding

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedBlock {
    pub source: String,
    /// Dropped level, `None` only for a column without any level.
    pub baseline: Option<String>,
    pub kept_levels: Vec<String>,
    pub output_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingMap {
    pub numeric: Vec<String>,
    pub blocks: Vec<EncodedBlock>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl EncodingMap {
    pub fn output_names(&self) -> Vec<String> {
        self.numeric
            .iter()
            .cloned()
            .chain(self.blocks.iter().flat_map(|b| b.output_names.iter().cloned()))
            .collect()
    }

    pub fn n_outputs(&self) -> usize {
        self.numeric.len() + self.blocks.iter().map(|b| b.kept_levels.len()).sum::<usize>()
    }
}

/// Drop-first dummy encoding. For each nominal predictor the levels are
/// sorted, the smallest is the baseline and each remaining level becomes a
/// `<column>_<level>` indicator. The dataset's target column is skipped.
pub fn fit_encoding(dataset: &Dataset) -> Result<EncodingMap> {
    if dataset.missing_count() > 0 {
        return Err(Error::Data("encoding requires an imputed dataset".into()));
    }
    let target = dataset.target_column();
    let mut numeric = Vec::new();
    let mut blocks = Vec::new();
    let mut warnings = Vec::new();
    for (j, attr) in dataset.schema().iter().enumerate() {
        if Some(attr.name.as_str()) == target {
            continue;
        }
        match attr.kind {
            AttributeKind::Numeric => numeric.push(attr.name.clone()),
            AttributeKind::Categorical | AttributeKind::Boolean => {
                let mut levels: BTreeSet<&str> = attr.levels().iter().map(String::as_str).collect();
                levels.extend(dataset.observed_levels(j));
                let mut levels = levels.into_iter();
                let baseline = levels.next().map(str::to_string);
                let kept_levels: Vec<String> = levels.map(str::to_string).collect();
                if kept_levels.is_empty() {
                    let msg = format!("column `{}` has a single level; it contributes no columns", attr.name);
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
                let output_names = kept_levels.iter().map(|l| format!("{}_{l}", attr.name)).collect();
                blocks.push(EncodedBlock {
                    source: attr.name.clone(),
                    baseline,
                    kept_levels,
                    output_names,
                });
            }
        }
    }
    let map = EncodingMap {
        numeric,
        blocks,
        warnings,
    };
    let mut seen = HashSet::new();
    for name in map.output_names() {
        if !seen.insert(name.clone()) {
            return Err(Error::column(name, "encoded column name collides with another column"));
        }
    }
    Ok(map)
}

/// Dense numeric design matrix with binary labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub values: Array2<f64>,
    pub column_names: Vec<String>,
    pub labels: Vec<u8>,
    pub positive_level: String,
}

impl DesignMatrix {
    pub fn new(values: Array2<f64>, column_names: Vec<String>, labels: Vec<u8>, positive_level: impl Into<String>) -> Result<Self> {
        if values.ncols() != column_names.len() {
            return Err(Error::Shape {
                expected: values.ncols(),
                actual: column_names.len(),
            });
        }
        if values.nrows() != labels.len() {
            return Err(Error::Shape {
                expected: values.nrows(),
                actual: labels.len(),
            });
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::Data("labels must be 0 or 1".into()));
        }
        if let Some(j) = values
            .axis_iter(Axis(1))
            .position(|col| col.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::column(&column_names[j], "non-finite entry"));
        }
        Ok(DesignMatrix {
            values,
            column_names,
            labels,
            positive_level: positive_level.into(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn select_rows(&self, rows: &[usize]) -> DesignMatrix {
        DesignMatrix {
            values: self.values.select(Axis(0), rows),
            column_names: self.column_names.clone(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            positive_level: self.positive_level.clone(),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> DesignMatrix {
        DesignMatrix {
            values: self.values.select(Axis(1), cols),
            column_names: cols.iter().map(|&c| self.column_names[c].clone()).collect(),
            labels: self.labels.clone(),
            positive_level: self.positive_level.clone(),
        }
    }

    /// Columns looked up by name, in the given order.
    pub fn select_named(&self, names: &[String]) -> Result<DesignMatrix> {
        let idx = names
            .iter()
            .map(|n| self.column_index(n).ok_or_else(|| Error::column(n, "not in design matrix")))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_columns(&idx))
    }

    pub fn positive_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    /// CSV with the feature columns followed by a `label` column.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = self.column_names.iter().map(String::as_str).collect();
        header.push("label");
        w.write_record(&header)?;
        for (row, label) in self.values.rows().into_iter().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
            rec.push(label.to_string());
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("utf-8"))
    }
}

/// Builds the design matrix: numeric pass-through columns first, then the
/// dummy blocks. Rows whose target equals `positive_level` get label 1.
/// A level unseen at fit time yields an all-zero block (with a warning).
pub fn apply_encoding(dataset: &Dataset, map: &EncodingMap, target: &str, positive_level: &str) -> Result<DesignMatrix> {
    let target_idx = dataset
        .column_index(target)
        .ok_or_else(|| Error::column(target, "target column not found"))?;
    let lookup = |name: &str| {
        dataset
            .column_index(name)
            .ok_or_else(|| Error::column(name, "column required by encoding map is missing"))
    };
    let numeric_idx = map.numeric.iter().map(|n| lookup(n)).collect::<Result<Vec<_>>>()?;
    let block_idx = map.blocks.iter().map(|b| lookup(&b.source)).collect::<Result<Vec<_>>>()?;

    let n = dataset.n_rows();
    let mut values = Array2::<f64>::zeros((n, map.n_outputs()));
    let mut labels = Vec::with_capacity(n);
    let mut unseen: BTreeSet<(String, String)> = BTreeSet::new();

    for (r, row) in dataset.rows().iter().enumerate() {
        let mut col = 0;
        for (&j, name) in numeric_idx.iter().zip(&map.numeric) {
            values[[r, col]] = row[j]
                .as_number()
                .ok_or_else(|| Error::column(name, format!("row {r}: expected a present number")))?;
            col += 1;
        }
        for (&j, block) in block_idx.iter().zip(&map.blocks) {
            let level = row[j]
                .as_category()
                .ok_or_else(|| Error::column(&block.source, format!("row {r}: expected a present category")))?;
            if let Some(k) = block.kept_levels.iter().position(|l| l == level) {
                values[[r, col + k]] = 1.0;
            } else if block.baseline.as_deref() != Some(level) {
                unseen.insert((block.source.clone(), level.to_string()));
            }
            col += block.kept_levels.len();
        }
        let label = row[target_idx]
            .as_category()
            .ok_or_else(|| Error::column(target, format!("row {r}: target value missing")))?;
        labels.push(u8::from(label == positive_level));
    }
    for (column, level) in unseen {
        log::warn!("column `{column}`: level `{level}` unseen at fit time; encoded as all zeros");
    }
    DesignMatrix::new(values, map.output_names(), labels, positive_level)
}

// ---------------------------------------------------------------------------
// Scaling

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub column: String,
    pub center: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub columns: Vec<ColumnScale>,
}

/// Mean and population standard deviation of each selected column; a zero
/// deviation falls back to a scale of 1.
pub fn fit_scaler(matrix: &DesignMatrix, columns: &[String]) -> Result<ScalerParams> {
    if matrix.n_rows() == 0 {
        return Err(Error::Data("cannot fit a scaler on an empty matrix".into()));
    }
    let n = matrix.n_rows() as f64;
    let columns = columns
        .iter()
        .map(|name| {
            let j = matrix
                .column_index(name)
                .ok_or_else(|| Error::column(name, "not in design matrix"))?;
            let col = matrix.values.column(j);
            let center = col.sum() / n;
            let var = col.iter().map(|v| (v - center).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            Ok(ColumnScale {
                column: name.clone(),
                center,
                scale: if sd > 0.0 { sd } else { 1.0 },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalerParams { columns })
}

fn map_scaled(matrix: &DesignMatrix, params: &ScalerParams, f: impl Fn(f64, &ColumnScale) -> f64) -> Result<DesignMatrix> {
    let mut out = matrix.clone();
    for cs in &params.columns {
        let j = matrix
            .column_index(&cs.column)
            .ok_or_else(|| Error::column(&cs.column, "scaler column not in matrix"))?;
        out.values.column_mut(j).mapv_inplace(|v| f(v, cs));
    }
    Ok(out)
}

/// `(value - center) / scale` on the parameter columns; others untouched.
pub fn apply_scaler(matrix: &DesignMatrix, params: &ScalerParams) -> Result<DesignMatrix> {
    map_scaled(matrix, params, |v, cs| (v - cs.center) / cs.scale)
}

/// Inverse of [`apply_scaler`].
pub fn unapply_scaler(matrix: &DesignMatrix, params: &ScalerParams) -> Result<DesignMatrix> {
    map_scaled(matrix, params, |v, cs| v * cs.scale + cs.center)
}

// ---------------------------------------------------------------------------
// Train/test split

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub seed: u64,
}

/// Stratified split with `ceil(ratio * n)` test rows. Per-class test counts
/// are `floor(ratio * n_c)` plus one for the classes with the largest
/// fractional remainders (class 0 first on ties). Index lists are sorted.
pub fn train_test_split(n_rows: usize, ratio: f64, seed: u64, labels: &[u8]) -> Result<SplitIndices> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Data(format!("split ratio {ratio} outside (0, 1)")));
    }
    if labels.len() != n_rows {
        return Err(Error::Shape {
            expected: n_rows,
            actual: labels.len(),
        });
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        if l > 1 {
            return Err(Error::Data("labels must be 0 or 1".into()));
        }
        by_class[l as usize].push(i);
    }
    if let Some(c) = by_class.iter().position(Vec::is_empty) {
        return Err(Error::Data(format!("class {c} has no rows; cannot stratify")));
    }

    let n_test = (ratio * n_rows as f64 - 1e-9).ceil().max(1.0) as usize;
    let exact: Vec<f64> = by_class.iter().map(|c| ratio * c.len() as f64).collect();
    let mut take: Vec<usize> = exact.iter().map(|e| (e + 1e-9).floor() as usize).collect();
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        let fa = exact[a] - take[a] as f64;
        let fb = exact[b] - take[b] as f64;
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    let mut remaining = n_test.saturating_sub(take.iter().sum());
    for &c in order.iter().cycle().take(4) {
        if remaining == 0 {
            break;
        }
        if take[c] < by_class[c].len() {
            take[c] += 1;
            remaining -= 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_rows = Vec::with_capacity(n_rows - n_test);
    let mut test_rows = Vec::with_capacity(n_test);
    for (c, members) in by_class.iter_mut().enumerate() {
        members.shuffle(&mut rng);
        test_rows.extend_from_slice(&members[..take[c]]);
        train_rows.extend_from_slice(&members[take[c]..]);
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    Ok(SplitIndices {
        train_rows,
        test_rows,
        seed,
    })
}

/// Everything fitted while preparing one experiment, for reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub impute: ImputePlan,
    pub encoding: EncodingMap,
    pub scaler: ScalerParams,
    pub split: SplitIndices,
    pub selected_columns: Vec<String>,
}

impl FittedPipeline {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Pearson correlation matrix of the design columns as CSV. Pairs involving
/// a constant column are left empty.
pub fn correlation_csv(matrix: &DesignMatrix) -> Result<String> {
    let n = matrix.n_rows() as f64;
    let d = matrix.n_cols();
    let means: Vec<f64> = (0..d).map(|j| matrix.values.column(j).sum() / n).collect();
    let sds: Vec<f64> = (0..d)
        .map(|j| {
            (matrix.values.column(j).iter().map(|v| (v - means[j]).powi(2)).sum::<f64>() / n).sqrt()
        })
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![String::new()];
    header.extend(matrix.column_names.iter().cloned());
    w.write_record(&header)?;
    for a in 0..d {
        let mut rec = vec![matrix.column_names[a].clone()];
        for b in 0..d {
            if sds[a] == 0.0 || sds[b] == 0.0 {
                rec.push(String::new());
                continue;
            }
            let cov = matrix
                .values
                .column(a)
                .iter()
                .zip(matrix.values.column(b))
                .map(|(x, y)| (x - means[a]) * (y - means[b]))
                .sum::<f64>()
                / n;
            rec.push(format!("{:.6}", cov / (sds[a] * sds[b])));
        }
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}
