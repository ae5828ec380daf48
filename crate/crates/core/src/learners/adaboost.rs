//! Discrete AdaBoost (SAMME, two classes) over shallow weighted CARTs.

use ndarray::{ArrayView1, ArrayView2};
use rand_chacha::ChaCha8Rng;

use super::params::{AdaBoostParams, Criterion, Hyperparameters};
use super::tree::{ClassImpurity, FeaturePolicy, Grower, Presorted, TreeNode};
use super::{Algorithm, ModelSpec, ModelState, TrainedModel, TrainingMeta};
use crate::error::Result;

/// Weighted error at or below this counts as a perfect round.
const PERFECT: f64 = 1e-10;

pub fn fit_adaboost(x: ArrayView2<'_, f64>, y: &[u8], params: &AdaBoostParams) -> Result<TrainedModel> {
    let spec = ModelSpec {
        algorithm: Algorithm::AdaBoost,
        hyperparameters: Hyperparameters::AdaBoost(params.clone()).to_map(),
        seed: 0,
    };
    super::fit(&spec, x, y)
}

fn hard(tree: &TreeNode, row: ArrayView1<'_, f64>) -> u8 {
    u8::from(tree.predict_row(row) >= 0.5)
}

pub(super) fn vote(learners: &[TreeNode], alphas: &[f64], fallback: f64, row: ArrayView1<'_, f64>) -> f64 {
    let total: f64 = alphas.iter().sum();
    if learners.is_empty() || total <= 0.0 {
        return fallback;
    }
    let pos: f64 = learners
        .iter()
        .zip(alphas)
        .map(|(t, a)| a * f64::from(hard(t, row)))
        .sum();
    pos / total
}

pub(super) fn fit_state(x: ArrayView2<'_, f64>, y: &[u8], p: &AdaBoostParams) -> Result<(ModelState, TrainingMeta)> {
    let n = y.len();
    let mut weights = vec![1.0 / n as f64; n];
    let rows: Vec<usize> = (0..n).collect();
    let fallback = y.iter().map(|&v| f64::from(v)).sum::<f64>() / n as f64;
    let mut learners = Vec::new();
    let mut alphas = Vec::new();
    let mut meta = TrainingMeta::default();
    let presorted = Presorted::new(x);
    for round in 0..p.n_rounds {
        let objective = ClassImpurity {
            labels: y,
            weights: &weights,
            criterion: Criterion::Gini,
            min_samples_leaf: 1,
        };
        let mut grower: Grower<'_, '_, _, ChaCha8Rng> = Grower {
            x,
            objective: &objective,
            max_depth: Some(p.base_depth),
            min_samples_split: 2,
            features: (0..x.ncols()).collect(),
            policy: FeaturePolicy::All,
            presorted: Some(&presorted),
        };
        let tree = grower.grow(&rows);
        let miss: Vec<bool> = x.rows().into_iter().zip(y).map(|(r, &t)| hard(&tree, r) != t).collect();
        let eps: f64 = weights.iter().zip(&miss).filter(|(_, &m)| m).map(|(w, _)| w).sum();
        meta.round_errors.push(eps);
        if eps >= 0.5 {
            meta.stop_reason = Some(format!("round {} weighted error {eps} >= 0.5; discarded", round + 1));
            break;
        }
        if eps <= PERFECT {
            learners.push(tree);
            alphas.push(p.learning_rate * 1e10f64.ln());
            meta.stop_reason = Some(format!("round {} fit the weighted data exactly", round + 1));
            break;
        }
        let alpha = p.learning_rate * ((1.0 - eps) / eps).ln();
        for (w, &m) in weights.iter_mut().zip(&miss) {
            if m {
                *w *= alpha.exp();
            }
        }
        let sum: f64 = weights.iter().sum();
        if !sum.is_finite() || sum <= 0.0 {
            meta.stop_reason = Some(format!("sample weights degenerate after round {}", round + 1));
            break;
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        meta.weight_sums.push(weights.iter().sum());
        learners.push(tree);
        alphas.push(alpha);
    }
    meta.rounds_run = learners.len();
    Ok((
        ModelState::WeightedVote {
            learners,
            alphas,
            fallback_score: fallback,
        },
        meta,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::predict;
    use ndarray::{array, Array2};

    #[test]
    fn stump_separable_one_round() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let y = [0, 0, 1, 1];
        let m = fit_adaboost(x.view(), &y, &AdaBoostParams::default()).unwrap();
        assert_eq!(m.meta.rounds_run, 1);
        assert_eq!(m.meta.round_errors, vec![0.0]);
        assert_eq!(predict(&m, x.view()).unwrap().labels, y);
    }

    #[test]
    fn weights_stay_normalized() {
        let x = Array2::from_shape_fn((30, 3), |(i, j)| ((i * 31 + j * 17) % 13) as f64);
        let y: Vec<u8> = (0..30).map(|i| u8::from((i * 7) % 5 < 2)).collect();
        let m = fit_adaboost(x.view(), &y, &AdaBoostParams::default()).unwrap();
        assert!(!m.meta.weight_sums.is_empty());
        for s in &m.meta.weight_sums {
            assert!((s - 1.0).abs() <= 1e-12);
        }
        let kept = m.meta.rounds_run;
        assert!(m.meta.round_errors[..kept].iter().all(|&e| e < 0.5));
    }

    #[test]
    fn xor_keeps_no_rounds() {
        let x = array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let y = [0, 1, 1, 0];
        let m = fit_adaboost(x.view(), &y, &AdaBoostParams::default()).unwrap();
        assert_eq!(m.meta.rounds_run, 0);
        assert_eq!(m.meta.round_errors, vec![0.5]);
        let s = predict(&m, x.view()).unwrap().scores;
        assert!(s.iter().all(|&v| v == 0.5));
    }
}
