//! Second-order boosted trees on logistic loss with L2 leaf regularization,
//! split pruning by `gamma` and a minimum child hessian.

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;

use super::forest::tree_rng;
use super::gbc::{base_margin, mean_log_loss, round_rows};
use super::params::{Hyperparameters, XgbParams};
use super::tree::{FeaturePolicy, Grower, Presorted, SecondOrder};
use super::{sigmoid, Algorithm, ModelSpec, ModelState, TrainedModel, TrainingMeta};
use crate::error::{Error, Result};

pub fn fit_xgb(x: ArrayView2<'_, f64>, y: &[u8], params: &XgbParams, seed: u64) -> Result<TrainedModel> {
    let spec = ModelSpec {
        algorithm: Algorithm::XgBoost,
        hyperparameters: Hyperparameters::Xgb(params.clone()).to_map(),
        seed,
    };
    super::fit(&spec, x, y)
}

pub(super) fn fit_state(x: ArrayView2<'_, f64>, y: &[u8], p: &XgbParams, seed: u64) -> Result<(ModelState, TrainingMeta)> {
    let n = y.len();
    let d = x.ncols();
    let f0 = base_margin(y)?;
    let mut f = vec![f0; n];
    let mut trees = Vec::with_capacity(p.n_rounds);
    let mut trace = vec![mean_log_loss(&f, y)];
    let presorted = Presorted::new(x);
    for round in 0..p.n_rounds {
        let prob: Vec<f64> = f.iter().map(|&z| sigmoid(z)).collect();
        let gradients: Vec<f64> = prob.iter().zip(y).map(|(&q, &t)| q - f64::from(t)).collect();
        let hessians: Vec<f64> = prob.iter().map(|&q| q * (1.0 - q)).collect();
        let mut rng = tree_rng(seed, round as u64);
        let rows = round_rows(n, p.subsample, &mut rng);
        let features = if p.colsample >= 1.0 {
            (0..d).collect()
        } else {
            let m = ((p.colsample * d as f64).round() as usize).clamp(1, d);
            let mut cols = sample(&mut rng, d, m).into_vec();
            cols.sort_unstable();
            cols
        };
        let objective = SecondOrder {
            gradients: &gradients,
            hessians: &hessians,
            lambda: p.lambda,
            gamma: p.gamma,
            min_child_weight: p.min_child_weight,
        };
        let mut grower: Grower<'_, '_, _, ChaCha8Rng> = Grower {
            x,
            objective: &objective,
            max_depth: p.max_depth,
            min_samples_split: 2,
            features,
            policy: FeaturePolicy::All,
            presorted: Some(&presorted),
        };
        let tree = grower.grow(&rows);
        for (fi, row) in f.iter_mut().zip(x.rows()) {
            *fi += p.learning_rate * tree.predict_row(row);
        }
        let loss = mean_log_loss(&f, y);
        if !loss.is_finite() {
            return Err(Error::Training(format!("loss became non-finite at round {}", round + 1)));
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
