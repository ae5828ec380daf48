//! Single classification tree.

use ndarray::ArrayView2;
use rand_chacha::ChaCha8Rng;

use super::params::{CartParams, Hyperparameters};
use super::tree::{ClassImpurity, FeaturePolicy, Grower};
use super::{Algorithm, ModelSpec, ModelState, TrainedModel, TrainingMeta};
use crate::error::Result;

pub fn fit_cart(x: ArrayView2<'_, f64>, y: &[u8], params: &CartParams) -> Result<TrainedModel> {
    let spec = ModelSpec {
        algorithm: Algorithm::DecisionTree,
        hyperparameters: Hyperparameters::Cart(params.clone()).to_map(),
        seed: 0,
    };
    super::fit(&spec, x, y)
}

pub(super) fn fit_state(x: ArrayView2<'_, f64>, y: &[u8], p: &CartParams) -> Result<(ModelState, TrainingMeta)> {
    let weights = vec![1.0; y.len()];
    let objective = ClassImpurity {
        labels: y,
        weights: &weights,
        criterion: p.criterion,
        min_samples_leaf: p.min_samples_leaf,
    };
    let mut grower: Grower<'_, '_, _, ChaCha8Rng> = Grower {
        x,
        objective: &objective,
        max_depth: p.max_depth,
        min_samples_split: p.min_samples_split,
        features: (0..x.ncols()).collect(),
        policy: FeaturePolicy::All,
        presorted: None,
    };
    let rows: Vec<usize> = (0..y.len()).collect();
    let root = grower.grow(&rows);
    let meta = TrainingMeta {
        rounds_run: 1,
        ..TrainingMeta::default()
    };
    Ok((ModelState::Tree { root }, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{predict, ModelState};
    use ndarray::array;

    fn xor() -> (ndarray::Array2<f64>, Vec<u8>) {
        (array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]], vec![0, 1, 1, 0])
    }

    #[test]
    fn pure_labels_give_single_leaf() {
        let x = array![[1.0], [2.0], [3.0]];
        let m = fit_cart(x.view(), &[1, 1, 1], &CartParams::default()).unwrap();
        match &m.state {
            ModelState::Tree { root } => assert!(root.is_leaf()),
            s => panic!("{s:?}"),
        }
        assert_eq!(predict(&m, x.view()).unwrap().labels, vec![1, 1, 1]);
    }

    #[test]
    fn xor_needs_depth_two() {
        let (x, y) = xor();
        let p = CartParams {
            max_depth: Some(2),
            ..CartParams::default()
        };
        let m = fit_cart(x.view(), &y, &p).unwrap();
        assert_eq!(predict(&m, x.view()).unwrap().labels, y);
        let stump = fit_cart(
            x.view(),
            &y,
            &CartParams {
                max_depth: Some(1),
                ..CartParams::default()
            },
        )
        .unwrap();
        assert_ne!(predict(&stump, x.view()).unwrap().labels, y);
    }

    #[test]
    fn depth_limit_respected() {
        let x = ndarray::Array2::from_shape_fn((40, 2), |(i, j)| ((i * 7 + j * 13) % 11) as f64);
        let y: Vec<u8> = (0..40).map(|i| ((i * 5) % 3 == 0) as u8).collect();
        for d in 1..4 {
            let m = fit_cart(
                x.view(),
                &y,
                &CartParams {
                    max_depth: Some(d),
                    ..CartParams::default()
                },
            )
            .unwrap();
            let ModelState::Tree { root } = &m.state else { unreachable!() };
            assert!(root.depth() <= d);
        }
    }

    #[test]
    fn min_samples_leaf_respected() {
        let x = array![[0.0], [1.0], [2.0], [3.0], [4.0]];
        let y = [0, 1, 1, 1, 1];
        let p = CartParams {
            min_samples_leaf: 2,
            ..CartParams::default()
        };
        let m = fit_cart(x.view(), &y, &p).unwrap();
        // the perfect split isolates one row, so it is not allowed
        let s = predict(&m, array![[0.0]].view()).unwrap().scores[0];
        assert!(s > 0.0);
    }
}
