//! Random forest of bootstrapped CARTs with per-node feature subsampling.
//!
//! Tree `i` draws all of its randomness from ChaCha8 seeded with the model
//! seed on stream `i`, so a forest of `k` trees is a prefix of one with
//! `k + 1` and the parallel fit equals a sequential one.

use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::params::{ForestParams, Hyperparameters};
use super::tree::{ClassImpurity, FeaturePolicy, Grower, Presorted, TreeNode};
use super::{Algorithm, ModelSpec, ModelState, TrainedModel, TrainingMeta};
use crate::error::Result;

pub fn fit_random_forest(x: ArrayView2<'_, f64>, y: &[u8], params: &ForestParams, seed: u64) -> Result<TrainedModel> {
    let spec = ModelSpec {
        algorithm: Algorithm::RandomForest,
        hyperparameters: Hyperparameters::Forest(params.clone()).to_map(),
        seed,
    };
    super::fit(&spec, x, y)
}

pub(crate) fn tree_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

struct Shared<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [u8],
    presorted: Presorted,
}

fn grow_tree(s: &Shared<'_>, p: &ForestParams, m: usize, seed: u64, index: usize) -> TreeNode {
    let (x, y) = (s.x, s.y);
    let n = y.len();
    let mut rng = tree_rng(seed, index as u64);
    let mut weights = vec![0.0; n];
    if p.bootstrap {
        for _ in 0..n {
            weights[rng.random_range(0..n)] += 1.0;
        }
    } else {
        weights.fill(1.0);
    }
    let rows: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
    let objective = ClassImpurity {
        labels: y,
        weights: &weights,
        criterion: p.criterion,
        min_samples_leaf: p.min_samples_leaf,
    };
    let mut grower = Grower {
        x,
        objective: &objective,
        max_depth: p.max_depth,
        min_samples_split: p.min_samples_split,
        features: (0..x.ncols()).collect(),
        policy: FeaturePolicy::Random { m, rng: &mut rng },
        presorted: Some(&s.presorted),
    };
    grower.grow(&rows)
}

pub(super) fn fit_state(x: ArrayView2<'_, f64>, y: &[u8], p: &ForestParams, seed: u64) -> Result<(ModelState, TrainingMeta)> {
    let m = p.max_features.resolve(x.ncols())?;
    let shared = Shared {
        x,
        y,
        presorted: Presorted::new(x),
    };
    let trees: Vec<TreeNode> = (0..p.n_trees)
        .into_par_iter()
        .map(|i| grow_tree(&shared, p, m, seed, i))
        .collect();
    let meta = TrainingMeta {
        rounds_run: trees.len(),
        ..TrainingMeta::default()
    };
    Ok((ModelState::Forest { trees }, meta))
}
