//! Independent re-computations used to check the library on random instances.
//! Every check returns `Err(description)` on the first disagreement.

use bmt_core::chi2_select::{chi2_contingency, chi2_frequency_sum};
use bmt_core::learners::params::{AdaBoostParams, CartParams, GbcParams};
use bmt_core::learners::{fit_adaboost, fit_cart, fit_gradient_boost, logistic_loss_and_gradient, ModelState, TreeNode};
use bmt_core::metrics::{auc, auc_pairwise, roc_curve};
use bmt_core::tuning::SearchOutcome;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Binary labels with both classes present.
pub fn random_labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
    assert!(n >= 2);
    let mut y: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect();
    y[0] = 0;
    y[1] = 1;
    y
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize, levels: Option<u32>) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| match levels {
        Some(l) => f64::from(rng.random_range(0..l)),
        None => rng.random_range(-3.0..3.0),
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// For a 0/1 column the frequency-sum score equals the value-1 row of the
/// 2x2 (value x class) contingency terms, and adding the complement column's
/// score gives the full Pearson statistic.
pub fn check_chi2_binary(col: &[f64], labels: &[u8]) -> Result<(), String> {
    let n = labels.len() as f64;
    let mut table = [[0.0f64; 2]; 2]; // [value][class]
    for (&v, &l) in col.iter().zip(labels) {
        table[v as usize][l as usize] += 1.0;
    }
    let class = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    let names = vec!["x".to_string()];
    let x = Array2::from_shape_vec((col.len(), 1), col.to_vec()).unwrap();
    let fs = chi2_frequency_sum(x.view(), labels, &names).map_err(|e| e.to_string())?[0];
    let ones = table[1][0] + table[1][1];
    let by_hand: f64 = if ones == 0.0 {
        0.0
    } else {
        (0..2)
            .map(|c| {
                let e = ones * class[c] / n;
                (table[1][c] - e).powi(2) / e
            })
            .sum()
    };
    if !close(fs, by_hand, 1e-12) {
        return Err(format!("frequency-sum {fs} vs value-1 contingency terms {by_hand}"));
    }
    let zeros = table[0][0] + table[0][1];
    if ones > 0.0 && zeros > 0.0 {
        let comp: Vec<f64> = col.iter().map(|v| 1.0 - v).collect();
        let xc = Array2::from_shape_vec((col.len(), 1), comp).unwrap();
        let fs_c = chi2_frequency_sum(xc.view(), labels, &names).map_err(|e| e.to_string())?[0];
        let rows = vec![table[1].to_vec(), table[0].to_vec()];
        let pearson = chi2_contingency(&rows).map_err(|e| e.to_string())?;
        if !close(fs + fs_c, pearson, 1e-12) {
            return Err(format!("score(x) + score(1-x) = {} vs Pearson {pearson}", fs + fs_c));
        }
    }
    Ok(())
}

/// Trapezoidal area equals the pair-counting statistic; the curve is
/// monotone and runs from (0,0) to (1,1).
pub fn check_auc(labels: &[u8], scores: &[f64]) -> Result<(), String> {
    let curve = roc_curve(labels, scores).map_err(|e| e.to_string())?;
    let a = auc(&curve);
    let b = auc_pairwise(labels, scores).map_err(|e| e.to_string())?;
    if (a - b).abs() > 1e-12 {
        return Err(format!("trapezoid {a} vs pairs {b}"));
    }
    if curve.points.first() != Some(&(0.0, 0.0)) || curve.points.last() != Some(&(1.0, 1.0)) {
        return Err(format!("bad endpoints {:?}", curve.points));
    }
    if curve.points.windows(2).any(|w| w[1].0 < w[0].0 || w[1].1 < w[0].1) {
        return Err("curve not monotone".into());
    }
    Ok(())
}

/// Analytic logistic gradient against central differences with step 1e-5.
pub fn check_logistic_gradient(x: &Array2<f64>, y: &[u8], theta: &Array1<f64>, l2: f64) -> Result<f64, String> {
    let (_, grad) = logistic_loss_and_gradient(x.view(), y, theta.view(), l2);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for j in 0..theta.len() {
        let mut up = theta.clone();
        let mut down = theta.clone();
        up[j] += h;
        down[j] -= h;
        let (lu, _) = logistic_loss_and_gradient(x.view(), y, up.view(), l2);
        let (ld, _) = logistic_loss_and_gradient(x.view(), y, down.view(), l2);
        worst = worst.max(((lu - ld) / (2.0 * h) - grad[j]).abs());
    }
    if worst < 1e-6 {
        Ok(worst)
    } else {
        Err(format!("gradient differs from finite differences by {worst}"))
    }
}

fn gini_weighted(ys: &[u8]) -> f64 {
    if ys.is_empty() {
        return 0.0;
    }
    let n = ys.len() as f64;
    let p = ys.iter().filter(|&&v| v == 1).count() as f64 / n;
    n * (1.0 - p * p - (1.0 - p) * (1.0 - p))
}

fn decrease(x: &Array2<f64>, y: &[u8], feature: usize, threshold: f64) -> f64 {
    let (mut l, mut r) = (Vec::new(), Vec::new());
    for (i, &label) in y.iter().enumerate() {
        if x[[i, feature]] <= threshold {
            l.push(label);
        } else {
            r.push(label);
        }
    }
    gini_weighted(y) - gini_weighted(&l) - gini_weighted(&r)
}

/// The root split of a depth-1 CART has an impurity decrease at least as
/// large as every (feature, midpoint) candidate found by a fresh scan.
pub fn check_cart_root_optimal(x: &Array2<f64>, y: &[u8]) -> Result<(), String> {
    let p = CartParams {
        max_depth: Some(1),
        ..CartParams::default()
    };
    let model = fit_cart(x.view(), y, &p).map_err(|e| e.to_string())?;
    let ModelState::Tree { root } = &model.state else {
        return Err("not a tree".into());
    };
    let mut best = f64::NEG_INFINITY;
    let mut any = false;
    for f in 0..x.ncols() {
        let mut vals: Vec<f64> = x.column(f).to_vec();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            any = true;
            best = best.max(decrease(x, y, f, (w[0] + w[1]) / 2.0));
        }
    }
    let pure = y.iter().all(|&v| v == y[0]);
    match root {
        TreeNode::Leaf { .. } => {
            if pure || !any {
                Ok(())
            } else {
                Err("impure node with candidates left unsplit".into())
            }
        }
        TreeNode::Split { feature, threshold, .. } => {
            let chosen = decrease(x, y, *feature, *threshold);
            if chosen + 1e-12 >= best {
                Ok(())
            } else {
                Err(format!("chosen decrease {chosen} < best candidate {best}"))
            }
        }
    }
}

/// Sample weights sum to one after every round and kept rounds have error below 1/2.
pub fn check_adaboost_weights(x: &Array2<f64>, y: &[u8], rounds: usize) -> Result<(), String> {
    let p = AdaBoostParams {
        n_rounds: rounds,
        ..AdaBoostParams::default()
    };
    let m = fit_adaboost(x.view(), y, &p).map_err(|e| e.to_string())?;
    for (i, s) in m.meta.weight_sums.iter().enumerate() {
        if (s - 1.0).abs() > 1e-12 {
            return Err(format!("round {}: weight sum {s}", i + 1));
        }
    }
    if let Some(e) = m.meta.round_errors[..m.meta.rounds_run].iter().find(|&&e| e >= 0.5) {
        return Err(format!("kept round with error {e}"));
    }
    Ok(())
}

/// Mean training deviance never increases from one round to the next.
pub fn check_gbc_deviance(x: &Array2<f64>, y: &[u8], learning_rate: f64, rounds: usize) -> Result<(), String> {
    let p = GbcParams {
        learning_rate,
        n_rounds: rounds,
        subsample: 1.0,
        ..GbcParams::default()
    };
    let m = fit_gradient_boost(x.view(), y, &p, 0).map_err(|e| e.to_string())?;
    for (i, w) in m.meta.loss_trace.windows(2).enumerate() {
        if w[1] > w[0] + 1e-12 {
            return Err(format!("deviance rose at round {}: {} -> {}", i + 1, w[0], w[1]));
        }
    }
    Ok(())
}

/// The reported best config has the maximal mean score and is the earliest
/// such config; mean and std are recomputable from the fold scores.
pub fn check_search_argmax(outcome: &SearchOutcome, k: usize) -> Result<(), String> {
    let means: Vec<f64> = outcome.results.iter().map(|r| r.mean_score).collect();
    let max = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let first = means.iter().position(|&m| m == max).unwrap();
    if outcome.best_index != first || outcome.best_config != outcome.results[first].config {
        return Err(format!("best index {} but first maximum at {first}", outcome.best_index));
    }
    for r in &outcome.results {
        if r.fold_scores.len() != k {
            return Err(format!("{} fold scores, expected {k}", r.fold_scores.len()));
        }
        let mean = r.fold_scores.iter().sum::<f64>() / k as f64;
        let std = (r.fold_scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / k as f64).sqrt();
        if (mean - r.mean_score).abs() > 1e-12 || (std - r.std_score).abs() > 1e-12 {
            return Err("mean/std not recomputable from folds".into());
        }
    }
    Ok(())
}
