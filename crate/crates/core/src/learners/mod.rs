//! The seven classifiers: CART, random forest, logistic regression, k-NN,
//! gradient boosting, AdaBoost and second-order (XGBoost-style) boosting.
//!
//! Every learner is fitted through [`fit`] from a validated [`ModelSpec`] and
//! yields an immutable [`TrainedModel`] whose [`predict`] returns scores in
//! `[0, 1]` and hard labels (`score >= 0.5`, except k-NN where an exact 0.5
//! goes to class 0).

mod adaboost;
mod cart;
mod forest;
mod gbc;
mod knn;
mod logistic;
pub mod params;
pub mod tree;
mod xgb;

use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adaboost::fit_adaboost;
pub use cart::fit_cart;
pub use forest::fit_random_forest;
pub use gbc::fit_gradient_boost;
pub use knn::knn_predict;
pub use logistic::{fit_logistic, logistic_loss_and_gradient};
pub use params::{HyperMap, HyperValue, Hyperparameters};
pub use tree::TreeNode;
pub use xgb::fit_xgb;

/// Version stamped into serialized models.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "DT")]
    DecisionTree,
    #[serde(rename = "RF")]
    RandomForest,
    #[serde(rename = "LR")]
    LogisticRegression,
    #[serde(rename = "KNN")]
    KNearestNeighbors,
    #[serde(rename = "GBC")]
    GradientBoosting,
    #[serde(rename = "AdB")]
    AdaBoost,
    #[serde(rename = "XGB")]
    XgBoost,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::DecisionTree,
        Algorithm::RandomForest,
        Algorithm::LogisticRegression,
        Algorithm::KNearestNeighbors,
        Algorithm::GradientBoosting,
        Algorithm::AdaBoost,
        Algorithm::XgBoost,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Algorithm::DecisionTree => "DT",
            Algorithm::RandomForest => "RF",
            Algorithm::LogisticRegression => "LR",
            Algorithm::KNearestNeighbors => "KNN",
            Algorithm::GradientBoosting => "GBC",
            Algorithm::AdaBoost => "AdB",
            Algorithm::XgBoost => "XGB",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Algorithm::DecisionTree => "Decision Tree",
            Algorithm::RandomForest => "Random Forest",
            Algorithm::LogisticRegression => "Logistic Regression",
            Algorithm::KNearestNeighbors => "K-Nearest Neighbors",
            Algorithm::GradientBoosting => "Gradient Boosting Classifier",
            Algorithm::AdaBoost => "Ada Boost",
            Algorithm::XgBoost => "XG Boost",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Hyperparameter(format!("unknown algorithm `{s}`")))
    }
}

/// Algorithm, explicitly set hyperparameters and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub algorithm: Algorithm,
    pub hyperparameters: HyperMap,
    pub seed: u64,
}

impl ModelSpec {
    /// Rejects unknown names and out-of-range values.
    pub fn new(algorithm: Algorithm, hyperparameters: HyperMap, seed: u64) -> Result<Self> {
        Hyperparameters::parse(algorithm, &hyperparameters)?;
        Ok(ModelSpec {
            algorithm,
            hyperparameters,
            seed,
        })
    }

    pub fn defaults(algorithm: Algorithm, seed: u64) -> Self {
        ModelSpec {
            algorithm,
            hyperparameters: HyperMap::new(),
            seed,
        }
    }

    pub fn resolved(&self) -> Result<Hyperparameters> {
        Hyperparameters::parse(self.algorithm, &self.hyperparameters)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelState {
    Tree {
        root: TreeNode,
    },
    Forest {
        trees: Vec<TreeNode>,
    },
    Linear {
        coefficients: Vec<f64>,
        intercept: f64,
    },
    Neighbors {
        rows: Vec<Vec<f64>>,
        labels: Vec<u8>,
        k: usize,
        weighting: params::Weighting,
    },
    /// AdaBoost: `score = sum(alpha_t * h_t(x)) / sum(alpha_t)`, or
    /// `fallback_score` when no round was kept.
    WeightedVote {
        learners: Vec<TreeNode>,
        alphas: Vec<f64>,
        fallback_score: f64,
    },
    /// Additive logit model: `F(x) = base_margin + learning_rate * sum(tree(x))`.
    Additive {
        base_margin: f64,
        learning_rate: f64,
        trees: Vec<TreeNode>,
    },
}

/// Facts about how training went.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub rounds_run: usize,
    /// Loss after initialization and after each round/iteration.
    #[serde(default)]
    pub loss_trace: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    /// AdaBoost: sample-weight sum after each renormalization.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weight_sums: Vec<f64>,
    /// AdaBoost: weighted error of each fitted round (kept or not).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub round_errors: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub spec: ModelSpec,
    pub n_features: usize,
    pub state: ModelState,
    pub meta: TrainingMeta,
}

impl TrainedModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        de.disable_recursion_limit();
        let model = TrainedModel::deserialize(&mut de)?;
        de.end()?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "model format version {} not supported (expected {MODEL_FORMAT_VERSION})",
                model.format_version
            )));
        }
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub labels: Vec<u8>,
    pub scores: Vec<f64>,
}

pub(crate) fn check_training_data(x: ArrayView2<'_, f64>, y: &[u8]) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::Training("empty training matrix".into()));
    }
    if x.nrows() != y.len() {
        return Err(Error::Shape {
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    if y.iter().any(|&v| v > 1) {
        return Err(Error::Training("labels must be 0 or 1".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Training("training matrix has non-finite entries".into()));
    }
    Ok(())
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Trains the model described by `spec`.
pub fn fit(spec: &ModelSpec, x: ArrayView2<'_, f64>, y: &[u8]) -> Result<TrainedModel> {
    check_training_data(x, y)?;
    let (state, meta) = match spec.resolved()? {
        Hyperparameters::Cart(p) => cart::fit_state(x, y, &p)?,
        Hyperparameters::Forest(p) => forest::fit_state(x, y, &p, spec.seed)?,
        Hyperparameters::Logistic(p) => logistic::fit_state(x, y, &p)?,
        Hyperparameters::Knn(p) => knn::fit_state(x, y, &p)?,
        Hyperparameters::GradientBoost(p) => gbc::fit_state(x, y, &p, spec.seed)?,
        Hyperparameters::AdaBoost(p) => adaboost::fit_state(x, y, &p)?,
        Hyperparameters::Xgb(p) => xgb::fit_state(x, y, &p, spec.seed)?,
    };
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        n_features: x.ncols(),
        state,
        meta,
    })
}

/// Scores and labels for every row of `x`.
pub fn predict(model: &TrainedModel, x: ArrayView2<'_, f64>) -> Result<Prediction> {
    if x.ncols() != model.n_features {
        return Err(Error::Shape {
            expected: model.n_features,
            actual: x.ncols(),
        });
    }
    if let ModelState::Neighbors {
        rows,
        labels,
        k,
        weighting,
    } = &model.state
    {
        return knn::predict_stored(rows, labels, *k, *weighting, x);
    }
    let scores: Vec<f64> = x
        .rows()
        .into_iter()
        .map(|row| {
            let s = match &model.state {
                ModelState::Tree { root } => root.predict_row(row),
                ModelState::Forest { trees } => {
                    trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / trees.len() as f64
                }
                ModelState::Linear {
                    coefficients,
                    intercept,
                } => sigmoid(coefficients.iter().zip(row).map(|(w, v)| w * v).sum::<f64>() + intercept),
                ModelState::WeightedVote {
                    learners,
                    alphas,
                    fallback_score,
                } => adaboost::vote(learners, alphas, *fallback_score, row),
                ModelState::Additive {
                    base_margin,
                    learning_rate,
                    trees,
                } => sigmoid(base_margin + learning_rate * trees.iter().map(|t| t.predict_row(row)).sum::<f64>()),
                ModelState::Neighbors { .. } => unreachable!("handled above"),
            };
            s.clamp(0.0, 1.0)
        })
        .collect();
    let labels = scores.iter().map(|&s| u8::from(s >= 0.5)).collect();
    Ok(Prediction { labels, scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn algorithm_codes_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.code().parse::<Algorithm>().unwrap(), a);
            let json = serde_json::to_string(&a).unwrap();
            assert_eq!(json, format!("\"{}\"", a.code()));
        }
        assert!("SVM".parse::<Algorithm>().is_err());
    }

    #[test]
    fn width_mismatch_rejected() {
        let x = array![[0.0, 1.0], [1.0, 0.0]];
        let m = fit(&ModelSpec::defaults(Algorithm::DecisionTree, 0), x.view(), &[0, 1]).unwrap();
        assert!(matches!(predict(&m, array![[1.0]].view()), Err(Error::Shape { .. })));
    }

    #[test]
    fn bad_training_input() {
        let x = array![[0.0], [1.0]];
        let spec = ModelSpec::defaults(Algorithm::DecisionTree, 0);
        assert!(fit(&spec, x.view(), &[0, 2]).is_err());
        assert!(fit(&spec, x.view(), &[0]).is_err());
        let empty = ndarray::Array2::<f64>::zeros((0, 1));
        assert!(fit(&spec, empty.view(), &[]).is_err());
    }

    #[test]
    fn spec_validation() {
        let mut hp = HyperMap::new();
        hp.insert("n_trees".into(), HyperValue::Int(3));
        assert!(ModelSpec::new(Algorithm::RandomForest, hp.clone(), 1).is_ok());
        assert!(ModelSpec::new(Algorithm::DecisionTree, hp, 1).is_err());
    }

    #[test]
    fn version_checked_on_load() {
        let x = array![[0.0], [1.0]];
        let mut m = fit(&ModelSpec::defaults(Algorithm::DecisionTree, 0), x.view(), &[0, 1]).unwrap();
        m.format_version = 99;
        assert!(TrainedModel::from_json(&m.to_json().unwrap()).is_err());
    }
}
