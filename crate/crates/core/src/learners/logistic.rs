//! L2-regularized logistic regression by full-batch gradient descent.

use ndarray::{Array1, ArrayView1, ArrayView2};

use super::params::{Hyperparameters, LogisticParams, StepPolicy};
use super::{sigmoid, Algorithm, ModelSpec, ModelState, TrainedModel, TrainingMeta};
use crate::error::{Error, Result};

pub fn fit_logistic(x: ArrayView2<'_, f64>, y: &[u8], params: &LogisticParams) -> Result<TrainedModel> {
    let spec = ModelSpec {
        algorithm: Algorithm::LogisticRegression,
        hyperparameters: Hyperparameters::Logistic(params.clone()).to_map(),
        seed: 0,
    };
    super::fit(&spec, x, y)
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean log-loss plus `l2/2 * |w|^2`, and its gradient. `params` holds the
/// weights followed by the intercept, which is not penalized.
pub fn logistic_loss_and_gradient(x: ArrayView2<'_, f64>, y: &[u8], params: ArrayView1<'_, f64>, l2: f64) -> (f64, Array1<f64>) {
    let d = x.ncols();
    let n = x.nrows() as f64;
    let w = params.slice(ndarray::s![..d]);
    let b = params[d];
    let mut loss = 0.0;
    let mut grad = Array1::zeros(d + 1);
    for (row, &label) in x.rows().into_iter().zip(y) {
        let z = row.dot(&w) + b;
        let t = f64::from(label);
        loss += softplus(z) - t * z;
        let r = sigmoid(z) - t;
        for j in 0..d {
            grad[j] += r * row[j];
        }
        grad[d] += r;
    }
    loss /= n;
    grad /= n;
    loss += 0.5 * l2 * w.dot(&w);
    for j in 0..d {
        grad[j] += l2 * w[j];
    }
    (loss, grad)
}

pub(super) fn fit_state(x: ArrayView2<'_, f64>, y: &[u8], p: &LogisticParams) -> Result<(ModelState, TrainingMeta)> {
    let d = x.ncols();
    let mut theta = Array1::<f64>::zeros(d + 1);
    let (mut loss, mut grad) = logistic_loss_and_gradient(x, y, theta.view(), p.l2_strength);
    let mut trace = vec![loss];
    let mut converged = false;
    let mut iters = 0;
    let mut step = 1.0;
    while iters < p.max_iters {
        let gnorm2 = grad.dot(&grad);
        if gnorm2.sqrt() < p.tolerance {
            converged = true;
            break;
        }
        iters += 1;
        let (next, next_loss, next_grad) = match p.learning_rate_policy {
            StepPolicy::Fixed(s) => {
                let cand = &theta - &(s * &grad);
                let (l, g) = logistic_loss_and_gradient(x, y, cand.view(), p.l2_strength);
                (cand, l, g)
            }
            StepPolicy::Backtracking => {
                // Armijo with c = 1e-4; the step grows back after each accepted move
                let mut t = step;
                loop {
                    let cand = &theta - &(t * &grad);
                    let (l, g) = logistic_loss_and_gradient(x, y, cand.view(), p.l2_strength);
                    if l <= loss - 1e-4 * t * gnorm2 || t < 1e-12 {
                        step = (t * 2.0).min(1e6);
                        break (cand, l, g);
                    }
                    t *= 0.5;
                }
            }
        };
        if !next_loss.is_finite() {
            return Err(Error::Training(format!("logistic loss became non-finite at iteration {iters}")));
        }
        theta = next;
        loss = next_loss;
        grad = next_grad;
        trace.push(loss);
    }
    if !converged && grad.dot(&grad).sqrt() < p.tolerance {
        converged = true;
    }
    let state = ModelState::Linear {
        coefficients: theta.slice(ndarray::s![..d]).to_vec(),
        intercept: theta[d],
    };
    let meta = TrainingMeta {
        rounds_run: iters,
        loss_trace: trace,
        converged: Some(converged),
        ..TrainingMeta::default()
    };
    Ok((state, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::predict;
    use ndarray::array;

    #[test]
    fn zero_iterations_score_half() {
        let x = array![[1.0, 2.0], [-1.0, 0.5], [0.3, -2.0]];
        let p = LogisticParams {
            max_iters: 0,
            ..LogisticParams::default()
        };
        let m = fit_logistic(x.view(), &[1, 0, 1], &p).unwrap();
        assert!(predict(&m, x.view()).unwrap().scores.iter().all(|&s| s == 0.5));
        let ModelState::Linear { coefficients, intercept } = &m.state else { unreachable!() };
        assert!(coefficients.iter().all(|&w| w == 0.0) && *intercept == 0.0);
    }

    #[test]
    fn one_dimensional_sign() {
        let x = array![[-1.0], [1.0], [-1.0], [1.0]];
        let y = [0, 1, 0, 1];
        let p = LogisticParams {
            l2_strength: 0.0,
            max_iters: 200,
            ..LogisticParams::default()
        };
        let m = fit_logistic(x.view(), &y, &p).unwrap();
        let s = predict(&m, array![[1.0], [-1.0]].view()).unwrap().scores;
        assert!(s[0] > 0.5 && 0.5 > s[1]);
    }

    #[test]
    fn loss_trace_decreases_and_converges() {
        let x = array![[0.2, 1.0], [1.5, -0.3], [-0.7, 0.4], [-1.2, -1.0], [0.9, 0.8], [0.1, -0.6]];
        let y = [1, 1, 0, 0, 1, 0];
        let m = fit_logistic(x.view(), &y, &LogisticParams::default()).unwrap();
        assert!(m.meta.loss_trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(m.meta.converged, Some(true));
    }

    #[test]
    fn fixed_step_divergence_reported() {
        let x = array![[1e200], [-1e200]];
        let p = LogisticParams {
            learning_rate_policy: StepPolicy::Fixed(1e200),
            l2_strength: 1.0,
            ..LogisticParams::default()
        };
        let err = fit_logistic(x.view(), &[1, 0], &p).unwrap_err();
        assert!(err.to_string().contains("iteration"), "{err}");
    }
}
