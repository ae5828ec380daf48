//! Stratified k-fold splitting, grid expansion and grid-search cross-validation.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{self, Algorithm, HyperMap, HyperValue, Hyperparameters, ModelSpec};
use crate::metrics::{auc_pairwise, confusion_matrix, metrics_from_confusion};

/// Candidate values per hyperparameter name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamGrid(pub BTreeMap<String, Vec<HyperValue>>);

impl ParamGrid {
    pub fn new() -> Self {
        ParamGrid::default()
    }

    pub fn with(mut self, name: &str, values: impl IntoIterator<Item = HyperValue>) -> Self {
        self.0.insert(name.to_string(), values.into_iter().collect());
        self
    }

    pub fn n_configs(&self) -> usize {
        self.0.values().map(Vec::len).product()
    }

    /// Every list nonempty and every expanded config valid for `algorithm`.
    pub fn validate(&self, algorithm: Algorithm) -> Result<()> {
        if let Some((name, _)) = self.0.iter().find(|(_, v)| v.is_empty()) {
            return Err(Error::Hyperparameter(format!("grid entry `{name}` has no values")));
        }
        for config in expand_grid(self) {
            Hyperparameters::parse(algorithm, &config)?;
        }
        Ok(())
    }
}

fn ints(values: &[i64]) -> Vec<HyperValue> {
    values.iter().map(|&v| HyperValue::Int(v)).collect()
}

fn floats(values: &[f64]) -> Vec<HyperValue> {
    values.iter().map(|&v| HyperValue::Float(v)).collect()
}

fn texts(values: &[&str]) -> Vec<HyperValue> {
    values.iter().map(|&v| HyperValue::from(v)).collect()
}

/// The shipped search space for each algorithm.
pub fn default_grid(algorithm: Algorithm) -> ParamGrid {
    let mut depths = ints(&[2, 4, 6, 8]);
    depths.push("unbounded".into());
    match algorithm {
        Algorithm::DecisionTree => ParamGrid::new()
            .with("max_depth", depths)
            .with("min_samples_split", ints(&[2, 5, 10]))
            .with("criterion", texts(&["gini", "entropy"])),
        Algorithm::RandomForest => {
            let mut d = ints(&[4, 8]);
            d.push("unbounded".into());
            ParamGrid::new()
                .with("n_trees", ints(&[50, 100, 200]))
                .with("max_depth", d)
                .with("max_features", texts(&["sqrt", "all"]))
        }
        Algorithm::LogisticRegression => ParamGrid::new().with("l2_strength", floats(&[0.01, 0.1, 1.0, 10.0, 100.0])),
        Algorithm::KNearestNeighbors => ParamGrid::new()
            .with("k", ints(&[3, 5, 7, 9, 11]))
            .with("weighting", texts(&["uniform", "inverse_distance"])),
        Algorithm::GradientBoosting => ParamGrid::new()
            .with("n_rounds", ints(&[50, 100, 200]))
            .with("learning_rate", floats(&[0.01, 0.1, 0.3]))
            .with("max_depth", ints(&[2, 3])),
        Algorithm::AdaBoost => ParamGrid::new()
            .with("n_rounds", ints(&[50, 100, 200]))
            .with("learning_rate", floats(&[0.1, 0.5, 1.0])),
        Algorithm::XgBoost => ParamGrid::new()
            .with("n_rounds", ints(&[50, 100, 200]))
            .with("learning_rate", floats(&[0.01, 0.1, 0.3]))
            .with("max_depth", ints(&[2, 3]))
            .with("lambda", floats(&[0.0, 1.0, 10.0])),
    }
}

/// Cartesian product, first parameter name (sorted) varying slowest. An
/// empty grid gives one empty config.
pub fn expand_grid(grid: &ParamGrid) -> Vec<HyperMap> {
    let mut configs = vec![HyperMap::new()];
    for (name, values) in &grid.0 {
        configs = configs
            .into_iter()
            .flat_map(|base| {
                values.iter().map(move |v| {
                    let mut c = base.clone();
                    c.insert(name.clone(), v.clone());
                    c
                })
            })
            .collect();
    }
    configs
}

/// `k` disjoint folds covering `0..n`, each sorted. Rows are shuffled within
/// each class and dealt round-robin (class 0 first, then class 1 continuing
/// the rotation), so fold sizes and per-fold class counts differ by at most
/// one. Falls back to an unstratified deal when a class has fewer than `k`
/// members.
pub fn kfold_indices(n: usize, k: usize, labels: &[u8], seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Data(format!("k = {k}; need at least 2 folds")));
    }
    if k > n {
        return Err(Error::Data(format!("k = {k} exceeds {n} rows")));
    }
    if labels.len() != n {
        return Err(Error::Shape {
            expected: n,
            actual: labels.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        match l {
            0 | 1 => by_class[l as usize].push(i),
            _ => return Err(Error::Data("labels must be 0 or 1".into())),
        }
    }
    let order: Vec<usize> = if by_class.iter().all(|c| c.len() >= k) {
        by_class
            .into_iter()
            .flat_map(|mut c| {
                c.shuffle(&mut rng);
                c
            })
            .collect()
    } else {
        log::warn!("a class has fewer than {k} rows; using unstratified folds");
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        all
    };
    let mut folds = vec![Vec::new(); k];
    for (pos, row) in order.into_iter().enumerate() {
        folds[pos % k].push(row);
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    #[default]
    Accuracy,
    F1,
    RocAuc,
}

impl Scoring {
    fn score(self, y: &[u8], pred: &learners::Prediction) -> Result<f64> {
        Ok(match self {
            Scoring::Accuracy => metrics_from_confusion(&confusion_matrix(y, &pred.labels)?).accuracy,
            Scoring::F1 => metrics_from_confusion(&confusion_matrix(y, &pred.labels)?).f1,
            Scoring::RocAuc => auc_pairwise(y, &pred.scores)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSettings {
    pub k_folds: usize,
    /// Seed for the fold assignment.
    pub seed: u64,
    /// Seed handed to every fitted model.
    pub model_seed: u64,
    pub scoring: Scoring,
    pub parallel: bool,
}

impl Default for CvSettings {
    fn default() -> Self {
        CvSettings {
            k_folds: 10,
            seed: 42,
            model_seed: 42,
            scoring: Scoring::Accuracy,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub config: HyperMap,
    pub fold_scores: Vec<f64>,
    pub mean_score: f64,
    /// Population standard deviation of the fold scores.
    pub std_score: f64,
    /// Sum of per-fold fit-and-score times.
    pub fit_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub algorithm: Algorithm,
    pub best_index: usize,
    pub best_config: HyperMap,
    pub results: Vec<CvResult>,
    pub total_seconds: f64,
}

impl SearchOutcome {
    pub fn best(&self) -> &CvResult {
        &self.results[self.best_index]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per config: parameter columns (sorted names), `fold_1..fold_k`,
    /// `mean_score`, `std_score`, `fit_time_seconds`.
    pub fn to_csv(&self) -> Result<String> {
        let names: BTreeSet<&String> = self.results.iter().flat_map(|r| r.config.keys()).collect();
        let k = self.results.iter().map(|r| r.fold_scores.len()).max().unwrap_or(0);
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        header.extend((1..=k).map(|i| format!("fold_{i}")));
        header.extend(["mean_score", "std_score", "fit_time_seconds"].map(String::from));
        w.write_record(&header)?;
        for r in &self.results {
            let mut rec: Vec<String> = names
                .iter()
                .map(|n| r.config.get(*n).map(ToString::to_string).unwrap_or_default())
                .collect();
            rec.extend(r.fold_scores.iter().map(ToString::to_string));
            rec.push(r.mean_score.to_string());
            rec.push(r.std_score.to_string());
            rec.push(r.fit_time_seconds.to_string());
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("utf-8"))
    }

    /// Zeroes every wall-clock field.
    pub fn strip_timing(&mut self) {
        self.total_seconds = 0.0;
        self.results.iter_mut().for_each(|r| r.fit_time_seconds = 0.0);
    }
}

fn mean_std(scores: &[f64]) -> (f64, f64) {
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn evaluate_fold(
    algorithm: Algorithm,
    config: &HyperMap,
    x: ArrayView2<'_, f64>,
    y: &[u8],
    folds: &[Vec<usize>],
    fold: usize,
    settings: &CvSettings,
) -> Result<(f64, f64)> {
    let start = Instant::now();
    let train: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != fold)
        .flat_map(|(_, f)| f.iter().copied())
        .collect();
    let test = &folds[fold];
    let x_train = x.select(Axis(0), &train);
    let y_train: Vec<u8> = train.iter().map(|&i| y[i]).collect();
    let x_test = x.select(Axis(0), test);
    let y_test: Vec<u8> = test.iter().map(|&i| y[i]).collect();
    let spec = ModelSpec::new(algorithm, config.clone(), settings.model_seed)?;
    let model = learners::fit(&spec, x_train.view(), &y_train)?;
    let pred = learners::predict(&model, x_test.view())?;
    let score = settings.scoring.score(&y_test, &pred)?;
    Ok((score, start.elapsed().as_secs_f64()))
}

/// Exhaustive k-fold grid search. The best config has the highest mean
/// score, the earliest one winning ties. Parallel and sequential runs give
/// identical scores and ordering; only the timing fields differ.
pub fn grid_search(
    algorithm: Algorithm,
    grid: &ParamGrid,
    x: ArrayView2<'_, f64>,
    y: &[u8],
    settings: &CvSettings,
) -> Result<SearchOutcome> {
    let start = Instant::now();
    grid.validate(algorithm)?;
    if x.nrows() != y.len() {
        return Err(Error::Shape {
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    let configs = expand_grid(grid);
    let folds = kfold_indices(y.len(), settings.k_folds, y, settings.seed)?;
    let k = folds.len();
    let jobs: Vec<(usize, usize)> = (0..configs.len()).flat_map(|c| (0..k).map(move |f| (c, f))).collect();
    let run = |&(c, f): &(usize, usize)| {
        evaluate_fold(algorithm, &configs[c], x, y, &folds, f, settings).map_err(|e| Error::Fold {
            config: c,
            fold: f,
            source: Box::new(e),
        })
    };
    // collect everything first so the reported failure is the earliest job
    let raw: Vec<Result<(f64, f64)>> = if settings.parallel {
        jobs.par_iter().map(run).collect()
    } else {
        jobs.iter().map(run).collect()
    };
    let outputs: Vec<(f64, f64)> = raw.into_iter().collect::<Result<_>>()?;
    let results: Vec<CvResult> = configs
        .into_iter()
        .zip(outputs.chunks(k))
        .map(|(config, chunk)| {
            let fold_scores: Vec<f64> = chunk.iter().map(|o| o.0).collect();
            let (mean_score, std_score) = mean_std(&fold_scores);
            CvResult {
                config,
                fold_scores,
                mean_score,
                std_score,
                fit_time_seconds: chunk.iter().map(|o| o.1).sum(),
            }
        })
        .collect();
    let mut best_index = 0;
    for (i, r) in results.iter().enumerate() {
        if r.mean_score > results[best_index].mean_score {
            best_index = i;
        }
    }
    Ok(SearchOutcome {
        algorithm,
        best_index,
        best_config: results[best_index].config.clone(),
        results,
        total_seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn expansion_order() {
        let g = ParamGrid::new()
            .with("a", ints(&[1, 2]))
            .with("b", texts(&["x", "y"]));
        let c = expand_grid(&g);
        let flat: Vec<String> = c.iter().map(|m| format!("{}{}", m["a"], m["b"])).collect();
        assert_eq!(flat, vec!["1x", "1y", "2x", "2y"]);
        assert_eq!(expand_grid(&ParamGrid::new()), vec![HyperMap::new()]);
        assert_eq!(expand_grid(&ParamGrid::new().with("a", ints(&[1, 2, 3]))).len(), 3);
    }

    #[test]
    fn default_grids_valid_and_sized() {
        let sizes: Vec<usize> = Algorithm::ALL.iter().map(|&a| default_grid(a).n_configs()).collect();
        assert_eq!(sizes, vec![30, 18, 5, 10, 18, 9, 54]);
        for a in Algorithm::ALL {
            default_grid(a).validate(a).unwrap();
        }
    }

    #[test]
    fn invalid_grid_rejected() {
        let g = ParamGrid::new().with("k", vec![]);
        assert!(g.validate(Algorithm::KNearestNeighbors).is_err());
        let g = ParamGrid::new().with("depth", ints(&[1]));
        assert!(g.validate(Algorithm::DecisionTree).is_err());
    }

    #[test]
    fn leave_one_out_folds() {
        let y = [0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let f = kfold_indices(10, 10, &y, 0).unwrap();
        assert!(f.iter().all(|fold| fold.len() == 1));
        assert!(kfold_indices(10, 11, &y, 0).is_err());
    }

    #[test]
    fn fold_sizes_for_149_rows() {
        let y: Vec<u8> = (0..149).map(|i| u8::from(i % 9 < 5)).collect();
        let f = kfold_indices(149, 10, &y, 42).unwrap();
        let mut sizes: Vec<usize> = f.iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, [vec![14], vec![15; 9]].concat());
        let mut all: Vec<usize> = f.concat();
        all.sort_unstable();
        assert_eq!(all, (0..149).collect::<Vec<_>>());
        assert_eq!(f, kfold_indices(149, 10, &y, 42).unwrap());
        let pos = y.iter().filter(|&&v| v == 1).count() as f64;
        for fold in &f {
            let p = fold.iter().filter(|&&i| y[i] == 1).count() as f64;
            assert!((p - pos * fold.len() as f64 / 149.0).abs() <= 1.0);
        }
    }

    fn xor_like(n: usize) -> (Array2<f64>, Vec<u8>) {
        let x = Array2::from_shape_fn((n, 2), |(i, j)| ((i >> j) & 1) as f64);
        let y = (0..n).map(|i| ((i & 1) ^ ((i >> 1) & 1)) as u8).collect();
        (x, y)
    }

    #[test]
    fn deeper_tree_wins_on_xor() {
        let (x, y) = xor_like(80);
        let g = ParamGrid::new().with("max_depth", ints(&[1, 3]));
        let settings = CvSettings {
            k_folds: 5,
            ..CvSettings::default()
        };
        let out = grid_search(Algorithm::DecisionTree, &g, x.view(), &y, &settings).unwrap();
        assert_eq!(out.best_config["max_depth"], HyperValue::Int(3));
        assert!(out.results[0].mean_score < 0.75);
        assert!(out.results[1].mean_score > 0.95);
    }

    #[test]
    fn single_config_and_ties() {
        let (x, y) = xor_like(40);
        let settings = CvSettings {
            k_folds: 4,
            ..CvSettings::default()
        };
        let out = grid_search(Algorithm::KNearestNeighbors, &ParamGrid::new(), x.view(), &y, &settings).unwrap();
        assert_eq!(out.results.len(), 1);
        let r = out.best();
        assert_eq!(r.fold_scores.len(), 4);
        assert!((r.mean_score - r.fold_scores.iter().sum::<f64>() / 4.0).abs() < 1e-15);
        // identical configs tie; the first wins
        let g = ParamGrid::new().with("k", ints(&[3, 3]));
        let out = grid_search(Algorithm::KNearestNeighbors, &g, x.view(), &y, &settings).unwrap();
        assert_eq!(out.best_index, 0);
    }

    #[test]
    fn parallel_matches_sequential() {
        let (x, y) = xor_like(60);
        let g = default_grid(Algorithm::AdaBoost);
        let par = CvSettings {
            k_folds: 3,
            ..CvSettings::default()
        };
        let seq = CvSettings { parallel: false, ..par.clone() };
        let mut a = grid_search(Algorithm::AdaBoost, &g, x.view(), &y, &par).unwrap();
        let mut b = grid_search(Algorithm::AdaBoost, &g, x.view(), &y, &seq).unwrap();
        a.strip_timing();
        b.strip_timing();
        assert_eq!(a, b);
    }

    #[test]
    fn fold_failure_names_config_and_fold() {
        let (x, y) = xor_like(20);
        // k = 19 exceeds the 16 training rows of each fold
        let g = ParamGrid::new().with("k", ints(&[3, 19]));
        let settings = CvSettings {
            k_folds: 5,
            ..CvSettings::default()
        };
        match grid_search(Algorithm::KNearestNeighbors, &g, x.view(), &y, &settings) {
            Err(Error::Fold { config, fold, .. }) => assert_eq!((config, fold), (1, 0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_layout() {
        let (x, y) = xor_like(20);
        let g = ParamGrid::new().with("k", ints(&[1, 3]));
        let settings = CvSettings {
            k_folds: 2,
            ..CvSettings::default()
        };
        let out = grid_search(Algorithm::KNearestNeighbors, &g, x.view(), &y, &settings).unwrap();
        let csv = out.to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("k,fold_1,fold_2,mean_score,std_score,fit_time_seconds"));
        assert_eq!(csv.lines().count(), 3);
    }
}
