//! k-nearest-neighbor voting with Euclidean distance.

use ndarray::{ArrayView1, ArrayView2};

use super::params::{KnnParams, Weighting};
use super::{ModelState, Prediction, TrainingMeta};
use crate::error::{Error, Result};

const EPS: f64 = 1e-12;

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::Hyperparameter(format!("k = {k} outside 1..={n}")));
    }
    Ok(())
}

pub(super) fn fit_state(x: ArrayView2<'_, f64>, y: &[u8], p: &KnnParams) -> Result<(ModelState, TrainingMeta)> {
    check_k(p.k, y.len())?;
    let state = ModelState::Neighbors {
        rows: x.rows().into_iter().map(|r| r.to_vec()).collect(),
        labels: y.to_vec(),
        k: p.k,
        weighting: p.weighting,
    };
    Ok((state, TrainingMeta::default()))
}

fn score_query<'a, I>(train: I, labels: &[u8], k: usize, weighting: Weighting, q: ArrayView1<'_, f64>) -> f64
where
    I: Iterator<Item = &'a [f64]>,
{
    let mut dist: Vec<(f64, usize)> = train
        .enumerate()
        .map(|(i, r)| (r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(), i))
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (mut num, mut den) = (0.0, 0.0);
    for &(d, i) in &dist[..k] {
        let w = match weighting {
            Weighting::Uniform => 1.0,
            Weighting::InverseDistance => 1.0 / (d + EPS),
        };
        den += w;
        num += w * f64::from(labels[i]);
    }
    (num / den).clamp(0.0, 1.0)
}

fn finish(scores: Vec<f64>) -> Prediction {
    let labels = scores.iter().map(|&s| u8::from(s > 0.5)).collect();
    Prediction { labels, scores }
}

pub(super) fn predict_stored(
    rows: &[Vec<f64>],
    labels: &[u8],
    k: usize,
    weighting: Weighting,
    query: ArrayView2<'_, f64>,
) -> Result<Prediction> {
    let scores = query
        .rows()
        .into_iter()
        .map(|q| score_query(rows.iter().map(Vec::as_slice), labels, k, weighting, q))
        .collect();
    Ok(finish(scores))
}

/// Scores each query row by the (weighted) positive fraction among its `k`
/// nearest training rows; distance ties go to the lower training index and an
/// exact 0.5 is labelled 0.
pub fn knn_predict(
    train_x: ArrayView2<'_, f64>,
    train_y: &[u8],
    query_x: ArrayView2<'_, f64>,
    params: &KnnParams,
) -> Result<Prediction> {
    if train_x.ncols() == 0 {
        return Err(Error::Data("zero-width training matrix".into()));
    }
    if train_x.nrows() != train_y.len() {
        return Err(Error::Shape {
            expected: train_x.nrows(),
            actual: train_y.len(),
        });
    }
    if query_x.ncols() != train_x.ncols() {
        return Err(Error::Shape {
            expected: train_x.ncols(),
            actual: query_x.ncols(),
        });
    }
    check_k(params.k, train_y.len())?;
    let rows: Vec<Vec<f64>> = train_x.rows().into_iter().map(|r| r.to_vec()).collect();
    predict_stored(&rows, train_y, params.k, params.weighting, query_x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn params(k: usize, weighting: Weighting) -> KnnParams {
        KnnParams { k, weighting }
    }

    #[test]
    fn exact_match_with_k1() {
        let x = array![[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]];
        let y = [0, 1, 0];
        let p = knn_predict(x.view(), &y, x.view(), &params(1, Weighting::Uniform)).unwrap();
        assert_eq!(p.labels, y);
    }

    #[test]
    fn hand_computed_three_points() {
        let x = array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let p = knn_predict(x.view(), &[0, 0, 1], array![[0.9, 0.1]].view(), &params(3, Weighting::Uniform)).unwrap();
        assert_eq!(p.labels, vec![0]);
        assert!((p.scores[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn full_vote_is_global_rate() {
        let x = array![[0.0], [1.0], [5.0], [9.0]];
        let y = [1, 0, 0, 0];
        let p = knn_predict(x.view(), &y, array![[3.0], [100.0]].view(), &params(4, Weighting::Uniform)).unwrap();
        assert_eq!(p.scores, vec![0.25, 0.25]);
    }

    #[test]
    fn tie_goes_to_class_zero_and_lower_index() {
        let x = array![[-1.0], [1.0], [1.0]];
        let y = [1, 0, 1];
        // equidistant rows 0 and 1 fill k=2 before row 2 (same distance as 1)
        let p = knn_predict(x.view(), &y, array![[0.0]].view(), &params(2, Weighting::Uniform)).unwrap();
        assert_eq!(p.scores, vec![0.5]);
        assert_eq!(p.labels, vec![0]);
    }

    #[test]
    fn inverse_distance_exact_match_dominates() {
        let x = array![[0.0], [0.1], [0.2]];
        let p = knn_predict(x.view(), &[1, 0, 0], array![[0.0]].view(), &params(3, Weighting::InverseDistance)).unwrap();
        assert!(p.scores[0] > 0.999);
    }

    #[test]
    fn k_out_of_range() {
        let x = array![[0.0], [1.0]];
        assert!(knn_predict(x.view(), &[0, 1], x.view(), &params(3, Weighting::Uniform)).is_err());
        assert!(knn_predict(x.view(), &[0, 1], x.view(), &params(0, Weighting::Uniform)).is_err());
    }
}
