//! The four experiment setups (full or top-k features, with or without grid
//! search), the end-to-end runner, report emission and cross-experiment
//! comparison tables.

mod compare;
mod report;
mod svg;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chi2_select::{rank_matrix, FeatureRanking};
use crate::error::{Error, Result, StageContext};
use crate::learners::{self, Algorithm, HyperMap, ModelSpec};
use crate::metrics::evaluate;
use crate::preprocess::{
    apply_encoding, apply_imputer, apply_scaler, fit_encoding, fit_imputer, fit_scaler, train_test_split, DesignMatrix,
    FittedPipeline, SplitIndices,
};
use crate::tabular_io::{load_dataset, Dataset};
use crate::tuning::{default_grid, grid_search, CvSettings, ParamGrid, Scoring};

pub use compare::{compare_experiments, Comparison, MaxMetricRow, TimingRow};
pub use report::{emit_report, load_report, EnvironmentRecord, ExperimentReport, ModelResult, OutputFormat};

/// Columns recorded after transplant; excluded from predictors with `drop_leaky`.
pub const LEAKY_COLUMNS: [&str; 8] = [
    "survival_time",
    "ANC_recovery",
    "PLT_recovery",
    "acute_GvHD_II_III_IV",
    "acute_GvHD_III_IV",
    "time_to_acute_GvHD_III_IV",
    "extensive_chronic_GvHD",
    "relapse",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExperimentId {
    A,
    B,
    C,
    D,
    #[default]
    #[serde(rename = "custom")]
    Custom,
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentId::A => "A",
            ExperimentId::B => "B",
            ExperimentId::C => "C",
            ExperimentId::D => "D",
            ExperimentId::Custom => "custom",
        })
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(ExperimentId::A),
            "B" => Ok(ExperimentId::B),
            "C" => Ok(ExperimentId::C),
            "D" => Ok(ExperimentId::D),
            "CUSTOM" => Ok(ExperimentId::Custom),
            _ => Err(Error::Data(format!("unknown experiment `{s}` (expected A, B, C, D or custom)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    /// Fraction of rows held out for testing.
    pub ratio: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            ratio: 0.2,
            seed: 42,
            stratified: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FeatureMode {
    #[default]
    Full,
    TopK {
        k: usize,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum HpoConfig {
    #[default]
    Off,
    Grid {
        #[serde(default = "default_k_folds")]
        k_folds: usize,
        #[serde(default = "default_seed")]
        seed: u64,
        #[serde(default)]
        scoring: Scoring,
        /// Per-algorithm overrides of the shipped grids.
        #[serde(default)]
        grids: BTreeMap<Algorithm, ParamGrid>,
    },
}

fn default_k_folds() -> usize {
    10
}

fn default_seed() -> u64 {
    42
}

/// Which rows the chi-squared ranking is computed on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankingRows {
    /// Training rows only, after the train-fitted imputation.
    #[default]
    Train,
    /// Every row, imputed with whole-table statistics (the published ranking).
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub dataset: PathBuf,
    pub target_column: String,
    pub positive_level: String,
    pub split: SplitConfig,
    pub feature_mode: FeatureMode,
    pub hpo: HpoConfig,
    pub models: Vec<Algorithm>,
    /// Seed handed to every model (forest bootstraps, boosting subsamples).
    pub model_seed: u64,
    /// Fixed hyperparameters used when no search runs.
    pub hyperparameters: BTreeMap<Algorithm, HyperMap>,
    pub output_dir: Option<PathBuf>,
    pub drop_leaky: bool,
    pub ranking_rows: RankingRows,
    pub parallel: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: ExperimentId::Custom,
            dataset: PathBuf::new(),
            target_column: "survival_status".into(),
            positive_level: "1".into(),
            split: SplitConfig::default(),
            feature_mode: FeatureMode::Full,
            hpo: HpoConfig::Off,
            models: Algorithm::ALL.to_vec(),
            model_seed: 42,
            hyperparameters: BTreeMap::new(),
            output_dir: None,
            drop_leaky: false,
            ranking_rows: RankingRows::Train,
            parallel: true,
        }
    }
}

/// Number of top-ranked features used by experiments C and D.
pub const REDUCED_FEATURES: usize = 11;

impl ExperimentConfig {
    /// A: all features, default hyperparameters. B: all features, grid
    /// search. C: top 11, defaults. D: top 11, grid search.
    pub fn preset(id: ExperimentId, dataset: impl Into<PathBuf>) -> Self {
        let grid = HpoConfig::Grid {
            k_folds: default_k_folds(),
            seed: default_seed(),
            scoring: Scoring::Accuracy,
            grids: BTreeMap::new(),
        };
        let top = FeatureMode::TopK { k: REDUCED_FEATURES };
        let (feature_mode, hpo) = match id {
            ExperimentId::A | ExperimentId::Custom => (FeatureMode::Full, HpoConfig::Off),
            ExperimentId::B => (FeatureMode::Full, grid),
            ExperimentId::C => (top, HpoConfig::Off),
            ExperimentId::D => (top, grid),
        };
        ExperimentConfig {
            experiment: id,
            dataset: dataset.into(),
            feature_mode,
            hpo,
            ..ExperimentConfig::default()
        }
    }

    /// Sets the split, fold and model seeds together.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.split.seed = seed;
        self.model_seed = seed;
        if let HpoConfig::Grid { seed: s, .. } = &mut self.hpo {
            *s = seed;
        }
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::Data("model list is empty".into()));
        }
        for (i, m) in self.models.iter().enumerate() {
            if self.models[..i].contains(m) {
                return Err(Error::Data(format!("model {m} listed twice")));
            }
        }
        if let FeatureMode::TopK { k: 0 } = self.feature_mode {
            return Err(Error::Data("top_k needs k >= 1".into()));
        }
        if !(self.split.ratio > 0.0 && self.split.ratio < 1.0) {
            return Err(Error::Data(format!("split ratio {} outside (0, 1)", self.split.ratio)));
        }
        for (alg, hp) in &self.hyperparameters {
            ModelSpec::new(*alg, hp.clone(), self.model_seed)?;
        }
        if let HpoConfig::Grid { k_folds, grids, .. } = &self.hpo {
            if *k_folds < 2 {
                return Err(Error::Data("grid search needs k_folds >= 2".into()));
            }
            for (alg, grid) in grids {
                grid.validate(*alg)?;
            }
        }
        Ok(())
    }

    /// The grid searched for `algorithm`, if search is on.
    pub fn grid_for(&self, algorithm: Algorithm) -> Option<ParamGrid> {
        match &self.hpo {
            HpoConfig::Off => None,
            HpoConfig::Grid { grids, .. } => Some(grids.get(&algorithm).cloned().unwrap_or_else(|| default_grid(algorithm))),
        }
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Binary labels from the raw target column; missing targets are an error.
fn target_labels(dataset: &Dataset, target: &str, positive: &str) -> Result<Vec<u8>> {
    let idx = dataset
        .column_index(target)
        .ok_or_else(|| Error::column(target, "target column not found"))?;
    if !dataset.observed_levels(idx).contains(positive) {
        return Err(Error::column(target, format!("positive level `{positive}` never observed")));
    }
    dataset
        .column(idx)
        .enumerate()
        .map(|(r, cell)| match cell.as_category() {
            Some(level) => Ok(u8::from(level == positive)),
            None => Err(Error::column(target, format!("row {r}: missing target"))),
        })
        .collect()
}

fn random_split(n: usize, ratio: f64, seed: u64) -> SplitIndices {
    let n_test = ((ratio * n as f64 - 1e-9).ceil() as usize).clamp(1, n.saturating_sub(1).max(1));
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut test_rows = rows[..n_test].to_vec();
    let mut train_rows = rows[n_test..].to_vec();
    test_rows.sort_unstable();
    train_rows.sort_unstable();
    SplitIndices {
        train_rows,
        test_rows,
        seed,
    }
}

/// Loads a dataset and marks its target, optionally dropping leaky columns.
pub fn load_for_experiment(path: impl AsRef<Path>, target: &str, drop_leaky: bool) -> Result<Dataset> {
    let ds = load_dataset(path)?.with_target(target)?;
    if drop_leaky {
        ds.drop_columns(&LEAKY_COLUMNS)
    } else {
        Ok(ds)
    }
}

/// Whole-table ranking: impute and encode with statistics of every row, then
/// score the unscaled design matrix.
pub fn rank_full_dataset(dataset: &Dataset, target: &str, positive: &str) -> Result<(DesignMatrix, FeatureRanking)> {
    let plan = fit_imputer(dataset).stage("impute")?;
    let imputed = apply_imputer(dataset, &plan).stage("impute")?;
    let map = fit_encoding(&imputed).stage("encode")?;
    let matrix = apply_encoding(&imputed, &map, target, positive).stage("encode")?;
    let ranking = rank_matrix(&matrix).stage("rank")?;
    Ok((matrix, ranking))
}

/// Runs one experiment end to end: split, then imputation, encoding,
/// ranking and scaling fitted on the training rows, then for every model an
/// optional grid search on the training folds, a refit on the whole training
/// set and an evaluation on the shared test rows.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate().stage("config")?;
    let bytes = std::fs::read(&config.dataset)
        .map_err(|e| Error::file(&config.dataset, e))
        .stage("ingest")?;
    let dataset_sha256 = sha256_hex(&bytes);
    let dataset = load_for_experiment(&config.dataset, &config.target_column, config.drop_leaky).stage("ingest")?;
    run_on_dataset(config, &dataset, dataset_sha256)
}

/// [`run_experiment`] on an already loaded dataset (its target must be set).
pub fn run_on_dataset(config: &ExperimentConfig, dataset: &Dataset, dataset_sha256: String) -> Result<ExperimentReport> {
    config.validate().stage("config")?;
    let target = config.target_column.as_str();
    let positive = config.positive_level.as_str();
    let mut warnings: Vec<String> = dataset.warnings().to_vec();

    let labels = target_labels(dataset, target, positive).stage("split")?;
    let split = if config.split.stratified {
        train_test_split(dataset.n_rows(), config.split.ratio, config.split.seed, &labels).stage("split")?
    } else {
        random_split(dataset.n_rows(), config.split.ratio, config.split.seed)
    };

    let train_ds = dataset.select_rows(&split.train_rows);
    let impute = fit_imputer(&train_ds).stage("impute")?;
    let imputed = apply_imputer(dataset, &impute).stage("impute")?;
    let encoding = fit_encoding(&imputed.select_rows(&split.train_rows)).stage("encode")?;
    warnings.extend(encoding.warnings.iter().cloned());
    let design = apply_encoding(&imputed, &encoding, target, positive).stage("encode")?;

    let ranking = match config.ranking_rows {
        RankingRows::Train => rank_matrix(&design.select_rows(&split.train_rows)).stage("rank")?,
        RankingRows::All => rank_full_dataset(dataset, target, positive)?.1,
    };
    // selected columns keep design order so top_k(d) is the full matrix exactly
    let selected: Vec<String> = match config.feature_mode {
        FeatureMode::Full => design.column_names.clone(),
        FeatureMode::TopK { k } => {
            if k > design.n_cols() {
                return Err(Error::Data(format!("k = {k} exceeds {} features", design.n_cols()))).stage("select");
            }
            let mut idx: Vec<usize> = ranking.entries[..k]
                .iter()
                .map(|e| design.column_index(&e.column).ok_or_else(|| Error::column(&e.column, "not in design matrix")))
                .collect::<Result<_>>()
                .stage("select")?;
            idx.sort_unstable();
            idx.into_iter().map(|j| design.column_names[j].clone()).collect()
        }
    };
    let reduced = design.select_named(&selected).stage("select")?;
    let train = reduced.select_rows(&split.train_rows);
    let test = reduced.select_rows(&split.test_rows);
    let scaler = fit_scaler(&train, &selected).stage("scale")?;
    let train = apply_scaler(&train, &scaler).stage("scale")?;
    let test = apply_scaler(&test, &scaler).stage("scale")?;

    let mut models = Vec::with_capacity(config.models.len());
    for &algorithm in &config.models {
        let result = run_model(config, algorithm, &train, &test).map_err(|e| Error::Stage {
            stage: algorithm.code(),
            source: Box::new(e),
        })?;
        models.push(result);
    }

    let mut grid_sha256 = BTreeMap::new();
    for &algorithm in &config.models {
        if let Some(grid) = config.grid_for(algorithm) {
            grid_sha256.insert(algorithm, sha256_hex(serde_json::to_string(&grid)?.as_bytes()));
        }
    }
    let (cv_seed, k_folds) = match &config.hpo {
        HpoConfig::Off => (None, None),
        HpoConfig::Grid { seed, k_folds, .. } => (Some(*seed), Some(*k_folds)),
    };
    Ok(ExperimentReport {
        format_version: report::REPORT_FORMAT_VERSION,
        experiment: config.experiment,
        config: config.clone(),
        n_rows: dataset.n_rows(),
        n_train: split.train_rows.len(),
        n_test: split.test_rows.len(),
        test_positives: test.positive_count(),
        design_columns: design.column_names.clone(),
        selected_features: selected.clone(),
        ranking,
        models,
        pipeline: FittedPipeline {
            impute,
            encoding,
            scaler,
            split,
            selected_columns: selected,
        },
        environment: EnvironmentRecord {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            dataset_sha256,
            split_seed: config.split.seed,
            model_seed: config.model_seed,
            cv_seed,
            k_folds,
            grid_sha256,
        },
        warnings,
    })
}

fn run_model(config: &ExperimentConfig, algorithm: Algorithm, train: &DesignMatrix, test: &DesignMatrix) -> Result<ModelResult> {
    let (hyperparameters, search) = match (&config.hpo, config.grid_for(algorithm)) {
        (HpoConfig::Grid { k_folds, seed, scoring, .. }, Some(grid)) => {
            let settings = CvSettings {
                k_folds: *k_folds,
                seed: *seed,
                model_seed: config.model_seed,
                scoring: *scoring,
                parallel: config.parallel,
            };
            let outcome = grid_search(algorithm, &grid, train.values.view(), &train.labels, &settings).stage("search")?;
            (outcome.best_config.clone(), Some(outcome))
        }
        _ => (config.hyperparameters.get(&algorithm).cloned().unwrap_or_default(), None),
    };
    let spec = ModelSpec::new(algorithm, hyperparameters, config.model_seed).stage("fit")?;
    let start = Instant::now();
    let model = learners::fit(&spec, train.values.view(), &train.labels).stage("fit")?;
    let fit_seconds = start.elapsed().as_secs_f64();
    let pred = learners::predict(&model, test.values.view()).stage("evaluate")?;
    let (metrics, roc) = evaluate(&test.labels, &pred.labels, &pred.scores).stage("evaluate")?;
    Ok(ModelResult {
        algorithm,
        name: algorithm.display_name().to_string(),
        hyperparameters: spec.resolved()?.to_map(),
        search_seconds: search.as_ref().map(|s| s.total_seconds),
        search,
        fit_seconds,
        metrics,
        roc,
        test_scores: pred.scores,
        rounds_run: model.meta.rounds_run,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let a = ExperimentConfig::preset(ExperimentId::A, "x.arff");
        assert_eq!((a.feature_mode, a.hpo.clone()), (FeatureMode::Full, HpoConfig::Off));
        let d = ExperimentConfig::preset(ExperimentId::D, "x.arff");
        assert_eq!(d.feature_mode, FeatureMode::TopK { k: 11 });
        assert!(matches!(d.hpo, HpoConfig::Grid { k_folds: 10, .. }));
        assert_eq!(d.models.len(), 7);
    }

    #[test]
    fn config_json_defaults_and_validation() {
        let c = ExperimentConfig::from_json(r#"{"dataset": "d.csv", "feature_mode": {"mode": "top_k", "k": 5}}"#).unwrap();
        assert_eq!(c.target_column, "survival_status");
        assert_eq!(c.split, SplitConfig::default());
        assert_eq!(c.feature_mode, FeatureMode::TopK { k: 5 });
        let back = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);

        assert!(ExperimentConfig::from_json(r#"{"models": []}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"feature_mode": {"mode": "top_k", "k": 0}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"models": ["DT", "DT"]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"models": ["SVM"]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"hyperparameters": {"KNN": {"k": 0}}}"#).is_err());
        let g = r#"{"hpo": {"mode": "grid", "grids": {"LR": {"l2_strength": [0.1, 1.0]}}}}"#;
        let c = ExperimentConfig::from_json(g).unwrap();
        assert_eq!(c.grid_for(Algorithm::LogisticRegression).unwrap().n_configs(), 2);
        assert_eq!(c.grid_for(Algorithm::KNearestNeighbors).unwrap(), default_grid(Algorithm::KNearestNeighbors));
        assert!(ExperimentConfig::from_json(r#"{"hpo": {"mode": "grid", "grids": {"LR": {"k": [1]}}}}"#).is_err());
    }

    #[test]
    fn seeds_fan_out() {
        let c = ExperimentConfig::preset(ExperimentId::B, "x").with_seed(7);
        assert_eq!((c.split.seed, c.model_seed), (7, 7));
        assert!(matches!(c.hpo, HpoConfig::Grid { seed: 7, .. }));
    }

    #[test]
    fn experiment_ids_parse() {
        assert_eq!("b".parse::<ExperimentId>().unwrap(), ExperimentId::B);
        assert!("E".parse::<ExperimentId>().is_err());
    }

    #[test]
    fn digest_hex() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
