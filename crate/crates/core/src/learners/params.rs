//! Hyperparameter values and per-algorithm typed parameter sets.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::Algorithm;
use crate::error::{Error, Result};

/// A single hyperparameter value as it appears in configs and grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HyperValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
    Null,
}

impl fmt::Display for HyperValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperValue::Bool(b) => write!(f, "{b}"),
            HyperValue::Int(i) => write!(f, "{i}"),
            HyperValue::Float(x) => write!(f, "{x}"),
            HyperValue::Text(s) => f.write_str(s),
            HyperValue::Null => f.write_str("none"),
        }
    }
}

impl From<i64> for HyperValue {
    fn from(v: i64) -> Self {
        HyperValue::Int(v)
    }
}

impl From<f64> for HyperValue {
    fn from(v: f64) -> Self {
        HyperValue::Float(v)
    }
}

impl From<bool> for HyperValue {
    fn from(v: bool) -> Self {
        HyperValue::Bool(v)
    }
}

impl From<&str> for HyperValue {
    fn from(v: &str) -> Self {
        HyperValue::Text(v.to_string())
    }
}

impl<T: Into<HyperValue>> From<Option<T>> for HyperValue {
    fn from(v: Option<T>) -> Self {
        v.map_or(HyperValue::Null, Into::into)
    }
}

pub type HyperMap = BTreeMap<String, HyperValue>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Gini,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MaxFeatures {
    Sqrt,
    Log2,
    All,
    Count(usize),
    Fraction(f64),
}

impl MaxFeatures {
    /// Number of candidate features per node for `d` columns.
    pub fn resolve(self, d: usize) -> Result<usize> {
        let m = match self {
            MaxFeatures::Sqrt => (d as f64).sqrt().floor() as usize,
            MaxFeatures::Log2 => (d as f64).log2().floor() as usize,
            MaxFeatures::All => d,
            MaxFeatures::Count(c) => {
                if c > d {
                    return Err(Error::Hyperparameter(format!("max_features {c} exceeds {d} columns")));
                }
                c
            }
            MaxFeatures::Fraction(f) => (f * d as f64).floor() as usize,
        };
        Ok(m.max(1).min(d.max(1)))
    }

    fn to_value(self) -> HyperValue {
        match self {
            MaxFeatures::Sqrt => "sqrt".into(),
            MaxFeatures::Log2 => "log2".into(),
            MaxFeatures::All => "all".into(),
            MaxFeatures::Count(c) => HyperValue::Int(c as i64),
            MaxFeatures::Fraction(f) => HyperValue::Float(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Uniform,
    InverseDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepPolicy {
    Backtracking,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub criterion: Criterion,
}

impl Default for CartParams {
    fn default() -> Self {
        CartParams {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            criterion: Criterion::Gini,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    pub criterion: Criterion,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            min_samples_leaf: 1,
            min_samples_split: 2,
            criterion: Criterion::Gini,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticParams {
    pub l2_strength: f64,
    pub max_iters: usize,
    pub tolerance: f64,
    pub learning_rate_policy: StepPolicy,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            l2_strength: 0.01,
            max_iters: 1000,
            tolerance: 1e-6,
            learning_rate_policy: StepPolicy::Backtracking,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnParams {
    pub k: usize,
    pub weighting: Weighting,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams {
            k: 5,
            weighting: Weighting::Uniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbcParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub subsample: f64,
}

impl Default for GbcParams {
    fn default() -> Self {
        GbcParams {
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: Some(3),
            min_samples_leaf: 1,
            subsample: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaBoostParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub base_depth: usize,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        AdaBoostParams {
            n_rounds: 50,
            learning_rate: 1.0,
            base_depth: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct XgbParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: Option<usize>,
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
    pub subsample: f64,
    pub colsample: f64,
}

impl Default for XgbParams {
    fn default() -> Self {
        XgbParams {
            n_rounds: 100,
            learning_rate: 0.3,
            max_depth: Some(6),
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
            subsample: 1.0,
            colsample: 1.0,
        }
    }
}

/// Fully resolved hyperparameters for one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub enum Hyperparameters {
    Cart(CartParams),
    Forest(ForestParams),
    Logistic(LogisticParams),
    Knn(KnnParams),
    GradientBoost(GbcParams),
    AdaBoost(AdaBoostParams),
    Xgb(XgbParams),
}

/// Reads typed values out of a map, tracking which keys were consumed.
struct Reader<'a> {
    map: &'a HyperMap,
    used: Vec<&'static str>,
}

impl<'a> Reader<'a> {
    fn new(map: &'a HyperMap) -> Self {
        Reader { map, used: Vec::new() }
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a HyperValue> {
        self.used.push(key);
        self.map.get(key)
    }

    fn usize(&mut self, key: &'static str, default: usize, min: usize) -> Result<usize> {
        let v = match self.raw(key) {
            None => return Ok(default),
            Some(HyperValue::Int(i)) if *i >= 0 => *i as usize,
            Some(HyperValue::Float(f)) if f.fract() == 0.0 && *f >= 0.0 => *f as usize,
            Some(other) => return Err(bad(key, other, "a non-negative integer")),
        };
        if v < min {
            return Err(Error::Hyperparameter(format!("{key} = {v} must be >= {min}")));
        }
        Ok(v)
    }

    /// `null`, "none" or "unbounded" mean no limit.
    fn depth(&mut self, key: &'static str, default: Option<usize>) -> Result<Option<usize>> {
        match self.raw(key) {
            None => Ok(default),
            Some(HyperValue::Null) => Ok(None),
            Some(HyperValue::Text(s)) if matches!(s.as_str(), "none" | "unbounded" | "None") => Ok(None),
            Some(HyperValue::Int(i)) if *i >= 1 => Ok(Some(*i as usize)),
            Some(other) => Err(bad(key, other, "a positive integer or \"unbounded\"")),
        }
    }

    fn f64(&mut self, key: &'static str, default: f64, ok: impl Fn(f64) -> bool, what: &str) -> Result<f64> {
        let v = match self.raw(key) {
            None => return Ok(default),
            Some(HyperValue::Int(i)) => *i as f64,
            Some(HyperValue::Float(f)) => *f,
            Some(other) => return Err(bad(key, other, what)),
        };
        if !v.is_finite() || !ok(v) {
            return Err(Error::Hyperparameter(format!("{key} = {v} must be {what}")));
        }
        Ok(v)
    }

    fn bool(&mut self, key: &'static str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some(HyperValue::Bool(b)) => Ok(*b),
            Some(other) => Err(bad(key, other, "a boolean")),
        }
    }

    fn text(&mut self, key: &'static str) -> Option<&'a HyperValue> {
        self.raw(key)
    }

    fn finish(self, algorithm: Algorithm) -> Result<()> {
        for key in self.map.keys() {
            if !self.used.contains(&key.as_str()) {
                return Err(Error::Hyperparameter(format!(
                    "unknown hyperparameter `{key}` for {algorithm}"
                )));
            }
        }
        Ok(())
    }
}

fn bad(key: &str, value: &HyperValue, what: &str) -> Error {
    Error::Hyperparameter(format!("{key} = {value} must be {what}"))
}

fn criterion(r: &mut Reader<'_>) -> Result<Criterion> {
    match r.text("criterion") {
        None => Ok(Criterion::Gini),
        Some(HyperValue::Text(s)) if s == "gini" => Ok(Criterion::Gini),
        Some(HyperValue::Text(s)) if s == "entropy" => Ok(Criterion::Entropy),
        Some(other) => Err(bad("criterion", other, "\"gini\" or \"entropy\"")),
    }
}

fn positive(v: f64) -> bool {
    v > 0.0
}

fn non_negative(v: f64) -> bool {
    v >= 0.0
}

fn unit_interval(v: f64) -> bool {
    v > 0.0 && v <= 1.0
}

impl Hyperparameters {
    /// Validates `map` against `algorithm`, filling defaults for absent keys.
    pub fn parse(algorithm: Algorithm, map: &HyperMap) -> Result<Self> {
        let mut r = Reader::new(map);
        let params = match algorithm {
            Algorithm::DecisionTree => {
                let d = CartParams::default();
                Hyperparameters::Cart(CartParams {
                    max_depth: r.depth("max_depth", d.max_depth)?,
                    min_samples_split: r.usize("min_samples_split", d.min_samples_split, 2)?,
                    min_samples_leaf: r.usize("min_samples_leaf", d.min_samples_leaf, 1)?,
                    criterion: criterion(&mut r)?,
                })
            }
            Algorithm::RandomForest => {
                let d = ForestParams::default();
                let max_features = match r.text("max_features") {
                    None => d.max_features,
                    Some(HyperValue::Text(s)) if s == "sqrt" => MaxFeatures::Sqrt,
                    Some(HyperValue::Text(s)) if s == "log2" => MaxFeatures::Log2,
                    Some(HyperValue::Text(s)) if s == "all" => MaxFeatures::All,
                    Some(HyperValue::Null) => MaxFeatures::All,
                    Some(HyperValue::Int(i)) if *i >= 1 => MaxFeatures::Count(*i as usize),
                    Some(HyperValue::Float(f)) if unit_interval(*f) => MaxFeatures::Fraction(*f),
                    Some(other) => return Err(bad("max_features", other, "sqrt, log2, all, a count or a fraction")),
                };
                Hyperparameters::Forest(ForestParams {
                    n_trees: r.usize("n_trees", d.n_trees, 1)?,
                    max_depth: r.depth("max_depth", d.max_depth)?,
                    max_features,
                    bootstrap: r.bool("bootstrap", d.bootstrap)?,
                    min_samples_leaf: r.usize("min_samples_leaf", d.min_samples_leaf, 1)?,
                    min_samples_split: r.usize("min_samples_split", d.min_samples_split, 2)?,
                    criterion: criterion(&mut r)?,
                })
            }
            Algorithm::LogisticRegression => {
                let d = LogisticParams::default();
                let learning_rate_policy = match r.text("learning_rate_policy") {
                    None => d.learning_rate_policy,
                    Some(HyperValue::Text(s)) if s == "backtracking" => StepPolicy::Backtracking,
                    Some(HyperValue::Float(f)) if *f > 0.0 && f.is_finite() => StepPolicy::Fixed(*f),
                    Some(HyperValue::Int(i)) if *i > 0 => StepPolicy::Fixed(*i as f64),
                    Some(other) => return Err(bad("learning_rate_policy", other, "\"backtracking\" or a positive step")),
                };
                Hyperparameters::Logistic(LogisticParams {
                    l2_strength: r.f64("l2_strength", d.l2_strength, non_negative, "non-negative")?,
                    max_iters: r.usize("max_iters", d.max_iters, 0)?,
                    tolerance: r.f64("tolerance", d.tolerance, positive, "positive")?,
                    learning_rate_policy,
                })
            }
            Algorithm::KNearestNeighbors => {
                let d = KnnParams::default();
                let weighting = match r.text("weighting") {
                    None => d.weighting,
                    Some(HyperValue::Text(s)) if s == "uniform" => Weighting::Uniform,
                    Some(HyperValue::Text(s)) if s == "inverse_distance" || s == "distance" => Weighting::InverseDistance,
                    Some(other) => return Err(bad("weighting", other, "\"uniform\" or \"inverse_distance\"")),
                };
                match r.text("metric") {
                    None => {}
                    Some(HyperValue::Text(s)) if s == "euclidean" => {}
                    Some(other) => return Err(bad("metric", other, "\"euclidean\"")),
                }
                Hyperparameters::Knn(KnnParams {
                    k: r.usize("k", d.k, 1)?,
                    weighting,
                })
            }
            Algorithm::GradientBoosting => {
                let d = GbcParams::default();
                Hyperparameters::GradientBoost(GbcParams {
                    n_rounds: r.usize("n_rounds", d.n_rounds, 1)?,
                    learning_rate: r.f64("learning_rate", d.learning_rate, non_negative, "non-negative")?,
                    max_depth: r.depth("max_depth", d.max_depth)?,
                    min_samples_leaf: r.usize("min_samples_leaf", d.min_samples_leaf, 1)?,
                    subsample: r.f64("subsample", d.subsample, unit_interval, "in (0, 1]")?,
                })
            }
            Algorithm::AdaBoost => {
                let d = AdaBoostParams::default();
                Hyperparameters::AdaBoost(AdaBoostParams {
                    n_rounds: r.usize("n_rounds", d.n_rounds, 1)?,
                    learning_rate: r.f64("learning_rate", d.learning_rate, positive, "positive")?,
                    base_depth: r.usize("base_depth", d.base_depth, 1)?,
                })
            }
            Algorithm::XgBoost => {
                let d = XgbParams::default();
                Hyperparameters::Xgb(XgbParams {
                    n_rounds: r.usize("n_rounds", d.n_rounds, 1)?,
                    learning_rate: r.f64("learning_rate", d.learning_rate, non_negative, "non-negative")?,
                    max_depth: r.depth("max_depth", d.max_depth)?,
                    lambda: r.f64("lambda", d.lambda, non_negative, "non-negative")?,
                    gamma: r.f64("gamma", d.gamma, non_negative, "non-negative")?,
                    min_child_weight: r.f64("min_child_weight", d.min_child_weight, non_negative, "non-negative")?,
                    subsample: r.f64("subsample", d.subsample, unit_interval, "in (0, 1]")?,
                    colsample: r.f64("colsample", d.colsample, unit_interval, "in (0, 1]")?,
                })
            }
        };
        r.finish(algorithm)?;
        Ok(params)
    }

    /// Every hyperparameter with its effective value.
    pub fn to_map(&self) -> HyperMap {
        let crit = |c: Criterion| HyperValue::from(if c == Criterion::Gini { "gini" } else { "entropy" });
        let depth = |d: Option<usize>| HyperValue::from(d.map(|v| v as i64));
        let int = |v: usize| HyperValue::Int(v as i64);
        let pairs: Vec<(&str, HyperValue)> = match self {
            Hyperparameters::Cart(p) => vec![
                ("max_depth", depth(p.max_depth)),
                ("min_samples_split", int(p.min_samples_split)),
                ("min_samples_leaf", int(p.min_samples_leaf)),
                ("criterion", crit(p.criterion)),
            ],
            Hyperparameters::Forest(p) => vec![
                ("n_trees", int(p.n_trees)),
                ("max_depth", depth(p.max_depth)),
                ("max_features", p.max_features.to_value()),
                ("bootstrap", p.bootstrap.into()),
                ("min_samples_leaf", int(p.min_samples_leaf)),
                ("min_samples_split", int(p.min_samples_split)),
                ("criterion", crit(p.criterion)),
            ],
            Hyperparameters::Logistic(p) => vec![
                ("l2_strength", p.l2_strength.into()),
                ("max_iters", int(p.max_iters)),
                ("tolerance", p.tolerance.into()),
                (
                    "learning_rate_policy",
                    match p.learning_rate_policy {
                        StepPolicy::Backtracking => "backtracking".into(),
                        StepPolicy::Fixed(s) => s.into(),
                    },
                ),
            ],
            Hyperparameters::Knn(p) => vec![
                ("k", int(p.k)),
                (
                    "weighting",
                    match p.weighting {
                        Weighting::Uniform => "uniform".into(),
                        Weighting::InverseDistance => "inverse_distance".into(),
                    },
                ),
                ("metric", "euclidean".into()),
            ],
            Hyperparameters::GradientBoost(p) => vec![
                ("n_rounds", int(p.n_rounds)),
                ("learning_rate", p.learning_rate.into()),
                ("max_depth", depth(p.max_depth)),
                ("min_samples_leaf", int(p.min_samples_leaf)),
                ("subsample", p.subsample.into()),
            ],
            Hyperparameters::AdaBoost(p) => vec![
                ("n_rounds", int(p.n_rounds)),
                ("learning_rate", p.learning_rate.into()),
                ("base_depth", int(p.base_depth)),
            ],
            Hyperparameters::Xgb(p) => vec![
                ("n_rounds", int(p.n_rounds)),
                ("learning_rate", p.learning_rate.into()),
                ("max_depth", depth(p.max_depth)),
                ("lambda", p.lambda.into()),
                ("gamma", p.gamma.into()),
                ("min_child_weight", p.min_child_weight.into()),
                ("subsample", p.subsample.into()),
                ("colsample", p.colsample.into()),
            ],
        };
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, HyperValue)]) -> HyperMap {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn defaults_and_overrides() {
        let p = Hyperparameters::parse(Algorithm::DecisionTree, &HyperMap::new()).unwrap();
        assert_eq!(p, Hyperparameters::Cart(CartParams::default()));
        let p = Hyperparameters::parse(
            Algorithm::DecisionTree,
            &map(&[("max_depth", 4i64.into()), ("criterion", "entropy".into())]),
        )
        .unwrap();
        match p {
            Hyperparameters::Cart(c) => {
                assert_eq!(c.max_depth, Some(4));
                assert_eq!(c.criterion, Criterion::Entropy);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn unknown_and_invalid_rejected() {
        assert!(Hyperparameters::parse(Algorithm::KNearestNeighbors, &map(&[("depth", 3i64.into())])).is_err());
        assert!(Hyperparameters::parse(Algorithm::KNearestNeighbors, &map(&[("k", 0i64.into())])).is_err());
        assert!(Hyperparameters::parse(Algorithm::XgBoost, &map(&[("lambda", (-1.0).into())])).is_err());
        assert!(Hyperparameters::parse(Algorithm::GradientBoosting, &map(&[("subsample", 0.0.into())])).is_err());
        assert!(Hyperparameters::parse(Algorithm::RandomForest, &map(&[("max_features", "half".into())])).is_err());
    }

    #[test]
    fn unbounded_depth_spellings() {
        for v in [HyperValue::Null, "unbounded".into(), "none".into()] {
            let p = Hyperparameters::parse(Algorithm::DecisionTree, &map(&[("max_depth", v)])).unwrap();
            assert!(matches!(p, Hyperparameters::Cart(CartParams { max_depth: None, .. })));
        }
    }

    #[test]
    fn to_map_round_trips() {
        for alg in Algorithm::ALL {
            let p = Hyperparameters::parse(alg, &HyperMap::new()).unwrap();
            let again = Hyperparameters::parse(alg, &p.to_map()).unwrap();
            assert_eq!(p, again, "{alg}");
        }
    }

    #[test]
    fn max_features_resolution() {
        assert_eq!(MaxFeatures::Sqrt.resolve(58).unwrap(), 7);
        assert_eq!(MaxFeatures::Sqrt.resolve(2).unwrap(), 1);
        assert_eq!(MaxFeatures::All.resolve(11).unwrap(), 11);
        assert!(MaxFeatures::Count(12).resolve(11).is_err());
    }

    #[test]
    fn untagged_json_values() {
        let m: HyperMap = serde_json::from_str(r#"{"a": 3, "b": 0.5, "c": "sqrt", "d": null, "e": true}"#).unwrap();
        assert_eq!(m["a"], HyperValue::Int(3));
        assert_eq!(m["b"], HyperValue::Float(0.5));
        assert_eq!(m["c"], HyperValue::Text("sqrt".into()));
        assert_eq!(m["d"], HyperValue::Null);
        assert_eq!(m["e"], HyperValue::Bool(true));
    }
}
