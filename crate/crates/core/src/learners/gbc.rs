//! Gradient boosting on binomial deviance with Newton leaf values.

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;

use super::forest::tree_rng;
use super::params::{GbcParams, Hyperparameters};
use super::tree::{FeaturePolicy, Grower, NewtonResidual, Presorted};
use super::{sigmoid, Algorithm, ModelSpec, ModelState, TrainedModel, TrainingMeta};
use crate::error::{Error, Result};

pub fn fit_gradient_boost(x: ArrayView2<'_, f64>, y: &[u8], params: &GbcParams, seed: u64) -> Result<TrainedModel> {
    let spec = ModelSpec {
        algorithm: Algorithm::GradientBoosting,
        hyperparameters: Hyperparameters::GradientBoost(params.clone()).to_map(),
        seed,
    };
    super::fit(&spec, x, y)
}

/// Log-odds of the positive rate; single-class labels are an error.
pub(super) fn base_margin(y: &[u8]) -> Result<f64> {
    let rate = y.iter().map(|&v| f64::from(v)).sum::<f64>() / y.len() as f64;
    if rate <= 0.0 || rate >= 1.0 {
        return Err(Error::Training("boosting needs both classes in the training labels".into()));
    }
    Ok((rate / (1.0 - rate)).ln())
}

/// Mean binomial deviance (log-loss) of margins `f`.
pub(super) fn mean_log_loss(f: &[f64], y: &[u8]) -> f64 {
    let total: f64 = f
        .iter()
        .zip(y)
        .map(|(&z, &t)| {
            let sp = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            sp - f64::from(t) * z
        })
        .sum();
    total / y.len() as f64
}

/// Rows used in a round: everything, or a sorted sample without replacement.
pub(super) fn round_rows(n: usize, fraction: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if fraction >= 1.0 {
        return (0..n).collect();
    }
    let m = ((fraction * n as f64).round() as usize).clamp(1, n);
    let mut rows = sample(rng, n, m).into_vec();
    rows.sort_unstable();
    rows
}

pub(super) fn fit_state(x: ArrayView2<'_, f64>, y: &[u8], p: &GbcParams, seed: u64) -> Result<(ModelState, TrainingMeta)> {
    let n = y.len();
    let f0 = base_margin(y)?;
    let mut f = vec![f0; n];
    let mut trees = Vec::with_capacity(p.n_rounds);
    let mut trace = vec![mean_log_loss(&f, y)];
    let presorted = Presorted::new(x);
    for round in 0..p.n_rounds {
        let prob: Vec<f64> = f.iter().map(|&z| sigmoid(z)).collect();
        let residuals: Vec<f64> = prob.iter().zip(y).map(|(&q, &t)| f64::from(t) - q).collect();
        let hessians: Vec<f64> = prob.iter().map(|&q| q * (1.0 - q)).collect();
        let mut rng = tree_rng(seed, round as u64);
        let rows = round_rows(n, p.subsample, &mut rng);
        let objective = NewtonResidual {
            residuals: &residuals,
            hessians: &hessians,
            min_samples_leaf: p.min_samples_leaf,
        };
        let mut grower: Grower<'_, '_, _, ChaCha8Rng> = Grower {
            x,
            objective: &objective,
            max_depth: p.max_depth,
            min_samples_split: 2,
            features: (0..x.ncols()).collect(),
            policy: FeaturePolicy::All,
            presorted: Some(&presorted),
        };
        let tree = grower.grow(&rows);
        for (fi, row) in f.iter_mut().zip(x.rows()) {
            *fi += p.learning_rate * tree.predict_row(row);
        }
        let loss = mean_log_loss(&f, y);
        if !loss.is_finite() {
            return Err(Error::Training(format!("deviance became non-finite at round {}", round + 1)));
        }
        trace.push(loss);
        trees.push(tree);
    }
    let meta = TrainingMeta {
        rounds_run: trees.len(),
        loss_trace: trace,
        ..TrainingMeta::default()
    };
    Ok((
        ModelState::Additive {
            base_margin: f0,
            learning_rate: p.learning_rate,
            trees,
        },
        meta,
    ))
}
