//! Binary decision trees shared by every tree-based learner.
//!
//! Growth is greedy and depth-first. At each node every candidate feature is
//! sorted and swept once; thresholds are midpoints between consecutive
//! distinct values. The objective decides what a node's statistics are, how
//! a child is scored, when a split is admissible and what a leaf predicts,
//! which is all that differs between classification CART, least-squares
//! regression trees and second-order boosting trees.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::Criterion;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
    },
}

impl TreeNode {
    pub fn predict_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if row[*feature] <= *threshold { left } else { right },
            }
        }
    }

    /// Number of split levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }
}

/// What a tree optimizes.
pub(crate) trait Objective {
    type Stats: Copy + Default;

    fn add(&self, stats: &mut Self::Stats, row: usize);
    fn sub(&self, total: &Self::Stats, part: &Self::Stats) -> Self::Stats;
    /// Child quality; a split's gain is `score(left) + score(right) - score(parent)`.
    fn score(&self, stats: &Self::Stats) -> f64;
    fn admissible(&self, left: &Self::Stats, right: &Self::Stats) -> bool;
    /// Whether a node is worth splitting at all (e.g. not pure).
    fn splittable(&self, stats: &Self::Stats) -> bool;
    fn accept(&self, _gain: f64) -> bool {
        true
    }
    fn leaf_value(&self, stats: &Self::Stats, rows: &[usize]) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Every column's row order by (value, row index), computed once per fit.
pub(crate) struct Presorted {
    order: Vec<Vec<usize>>,
}

impl Presorted {
    pub fn new(x: ArrayView2<'_, f64>) -> Self {
        let order = x
            .columns()
            .into_iter()
            .map(|col| {
                let mut idx: Vec<usize> = (0..col.len()).collect();
                idx.sort_unstable_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Presorted { order }
    }
}

/// Best admissible split over `features` (evaluated in the given order; the
/// first candidate wins ties). `rows` must be distinct.
pub(crate) fn best_split<O: Objective>(
    x: ArrayView2<'_, f64>,
    rows: &[usize],
    features: &[usize],
    presorted: Option<&Presorted>,
    objective: &O,
    parent: &O::Stats,
) -> Option<SplitChoice> {
    let parent_score = objective.score(parent);
    let mut best: Option<SplitChoice> = None;
    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
    // filtering the global order beats sorting once the node is a sizeable
    // share of the table
    let mask = presorted.filter(|_| rows.len() * 8 >= x.nrows()).map(|_| {
        let mut m = vec![false; x.nrows()];
        rows.iter().for_each(|&r| m[r] = true);
        m
    });
    for &f in features {
        let col = x.column(f);
        sorted.clear();
        match (presorted, &mask) {
            (Some(p), Some(m)) => sorted.extend(p.order[f].iter().filter(|&&r| m[r]).map(|&r| (col[r], r))),
            _ => {
                sorted.extend(rows.iter().map(|&r| (col[r], r)));
                sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            }
        }
        if sorted[0].0 >= sorted[sorted.len() - 1].0 {
            continue;
        }
        let mut left = O::Stats::default();
        for i in 0..sorted.len() - 1 {
            objective.add(&mut left, sorted[i].1);
            let lo = sorted[i].0;
            let hi = sorted[i + 1].0;
            if lo >= hi {
                continue;
            }
            let right = objective.sub(parent, &left);
            if !objective.admissible(&left, &right) {
                continue;
            }
            let gain = objective.score(&left) + objective.score(&right) - parent_score;
            if best.is_none_or(|b| gain > b.gain) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(SplitChoice {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

/// How candidate features are chosen at each node.
pub(crate) enum FeaturePolicy<'r, R: Rng> {
    All,
    /// Draw `m` features per node; if none of them admits a split, the
    /// remaining ones are tried as a second batch.
    Random { m: usize, rng: &'r mut R },
}

pub(crate) struct Grower<'a, 'r, O: Objective, R: Rng> {
    pub x: ArrayView2<'a, f64>,
    pub objective: &'a O,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub features: Vec<usize>,
    pub policy: FeaturePolicy<'r, R>,
    pub presorted: Option<&'a Presorted>,
}

impl<O: Objective, R: Rng> Grower<'_, '_, O, R> {
    pub fn grow(&mut self, rows: &[usize]) -> TreeNode {
        self.grow_node(rows, 0)
    }

    fn node_stats(&self, rows: &[usize]) -> O::Stats {
        let mut s = O::Stats::default();
        for &r in rows {
            self.objective.add(&mut s, r);
        }
        s
    }

    fn find_split(&mut self, rows: &[usize], stats: &O::Stats) -> Option<SplitChoice> {
        match &mut self.policy {
            FeaturePolicy::All => best_split(self.x, rows, &self.features, self.presorted, self.objective, stats),
            FeaturePolicy::Random { m, rng } => {
                let mut shuffled = self.features.clone();
                shuffled.shuffle(*rng);
                let (first, rest) = shuffled.split_at((*m).min(shuffled.len()));
                let mut first = first.to_vec();
                first.sort_unstable();
                best_split(self.x, rows, &first, self.presorted, self.objective, stats).or_else(|| {
                    let mut rest = rest.to_vec();
                    rest.sort_unstable();
                    best_split(self.x, rows, &rest, self.presorted, self.objective, stats)
                })
            }
        }
    }

    fn grow_node(&mut self, rows: &[usize], depth: usize) -> TreeNode {
        let stats = self.node_stats(rows);
        let leaf = |s: &Self| TreeNode::Leaf {
            value: s.objective.leaf_value(&stats, rows),
        };
        if rows.len() < self.min_samples_split.max(2)
            || self.max_depth.is_some_and(|d| depth >= d)
            || !self.objective.splittable(&stats)
        {
            return leaf(self);
        }
        let Some(choice) = self.find_split(rows, &stats) else {
            return leaf(self);
        };
        if !self.objective.accept(choice.gain) {
            return leaf(self);
        }
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| self.x[[r, choice.feature]] <= choice.threshold);
        let left = self.grow_node(&left_rows, depth + 1);
        let right = self.grow_node(&right_rows, depth + 1);
        TreeNode::Split {
            feature: choice.feature,
            threshold: choice.threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

// ---------------------------------------------------------------------------
// Objectives

/// Weighted binary classification. Leaves hold the weighted positive fraction.
pub(crate) struct ClassImpurity<'a> {
    pub labels: &'a [u8],
    pub weights: &'a [f64],
    pub criterion: Criterion,
    pub min_samples_leaf: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct ClassStats {
    pub weight: f64,
    pub positive_weight: f64,
    pub count: usize,
    pub positives: usize,
}

/// Gini impurity of a binary node with positive fraction `p`.
pub fn gini(p: f64) -> f64 {
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

/// Binary entropy (nats) of a node with positive fraction `p`.
pub fn entropy(p: f64) -> f64 {
    let term = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
    term(p) + term(1.0 - p)
}

impl ClassImpurity<'_> {
    fn impurity(&self, s: &ClassStats) -> f64 {
        if s.weight <= 0.0 {
            return 0.0;
        }
        let p = (s.positive_weight / s.weight).clamp(0.0, 1.0);
        match self.criterion {
            Criterion::Gini => gini(p),
            Criterion::Entropy => entropy(p),
        }
    }
}

impl Objective for ClassImpurity<'_> {
    type Stats = ClassStats;

    fn add(&self, s: &mut ClassStats, row: usize) {
        let w = self.weights[row];
        s.weight += w;
        s.count += 1;
        if self.labels[row] == 1 {
            s.positive_weight += w;
            s.positives += 1;
        }
    }

    fn sub(&self, t: &ClassStats, p: &ClassStats) -> ClassStats {
        ClassStats {
            weight: t.weight - p.weight,
            positive_weight: t.positive_weight - p.positive_weight,
            count: t.count - p.count,
            positives: t.positives - p.positives,
        }
    }

    fn score(&self, s: &ClassStats) -> f64 {
        -s.weight * self.impurity(s)
    }

    fn admissible(&self, l: &ClassStats, r: &ClassStats) -> bool {
        l.count >= self.min_samples_leaf && r.count >= self.min_samples_leaf
    }

    fn splittable(&self, s: &ClassStats) -> bool {
        s.positives > 0 && s.positives < s.count
    }

    fn leaf_value(&self, s: &ClassStats, _rows: &[usize]) -> f64 {
        if s.weight > 0.0 {
            (s.positive_weight / s.weight).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

/// Least-squares regression on pseudo-residuals with Newton leaf values
/// `sum(r) / sum(h)` (logistic deviance boosting).
pub(crate) struct NewtonResidual<'a> {
    pub residuals: &'a [f64],
    pub hessians: &'a [f64],
    pub min_samples_leaf: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct ResidualStats {
    pub count: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Objective for NewtonResidual<'_> {
    type Stats = ResidualStats;

    fn add(&self, s: &mut ResidualStats, row: usize) {
        let r = self.residuals[row];
        s.count += 1;
        s.sum += r;
        s.sum_sq += r * r;
    }

    fn sub(&self, t: &ResidualStats, p: &ResidualStats) -> ResidualStats {
        ResidualStats {
            count: t.count - p.count,
            sum: t.sum - p.sum,
            sum_sq: t.sum_sq - p.sum_sq,
        }
    }

    fn score(&self, s: &ResidualStats) -> f64 {
        if s.count == 0 {
            0.0
        } else {
            s.sum * s.sum / s.count as f64
        }
    }

    fn admissible(&self, l: &ResidualStats, r: &ResidualStats) -> bool {
        l.count >= self.min_samples_leaf && r.count >= self.min_samples_leaf
    }

    fn splittable(&self, s: &ResidualStats) -> bool {
        let n = s.count as f64;
        s.count >= 2 && s.sum_sq - s.sum * s.sum / n > 1e-12 * n
    }

    fn leaf_value(&self, _s: &ResidualStats, rows: &[usize]) -> f64 {
        let num: f64 = rows.iter().map(|&r| self.residuals[r]).sum();
        let den: f64 = rows.iter().map(|&r| self.hessians[r]).sum();
        if den.abs() < 1e-150 {
            0.0
        } else {
            num / den
        }
    }
}

/// Second-order objective: gain `1/2 [G_L^2/(H_L+l) + G_R^2/(H_R+l) -
/// G^2/(H+l)] - gamma`, leaf weight `-G/(H+l)`.
pub(crate) struct SecondOrder<'a> {
    pub gradients: &'a [f64],
    pub hessians: &'a [f64],
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct GradStats {
    pub g: f64,
    pub h: f64,
    pub count: usize,
}

/// Optimal leaf weight `-G / (H + lambda)`; zero when the denominator is zero.
pub fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    let den = h + lambda;
    if den > 0.0 {
        -g / den
    } else {
        0.0
    }
}

impl Objective for SecondOrder<'_> {
    type Stats = GradStats;

    fn add(&self, s: &mut GradStats, row: usize) {
        s.g += self.gradients[row];
        s.h += self.hessians[row];
        s.count += 1;
    }

    fn sub(&self, t: &GradStats, p: &GradStats) -> GradStats {
        GradStats {
            g: t.g - p.g,
            h: t.h - p.h,
            count: t.count - p.count,
        }
    }

    fn score(&self, s: &GradStats) -> f64 {
        let den = s.h + self.lambda;
        if den > 0.0 {
            0.5 * s.g * s.g / den
        } else {
            0.0
        }
    }

    fn admissible(&self, l: &GradStats, r: &GradStats) -> bool {
        l.count > 0 && r.count > 0 && l.h >= self.min_child_weight && r.h >= self.min_child_weight
    }

    fn splittable(&self, s: &GradStats) -> bool {
        s.count >= 2
    }

    fn accept(&self, gain: f64) -> bool {
        gain - self.gamma > 0.0
    }

    fn leaf_value(&self, s: &GradStats, _rows: &[usize]) -> f64 {
        leaf_weight(s.g, s.h, self.lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn presorted_scan_matches_sorting() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = ndarray::Array2::from_shape_fn((60, 4), |_| f64::from(rng.random_range(0..5u8)));
        let y: Vec<u8> = (0..60).map(|_| rng.random_range(0..2u8)).collect();
        let w = vec![1.0; 60];
        let obj = ClassImpurity {
            labels: &y,
            weights: &w,
            criterion: Criterion::Gini,
            min_samples_leaf: 1,
        };
        let pre = Presorted::new(x.view());
        let rows: Vec<usize> = (0..60).filter(|i| i % 3 != 0).collect();
        let mut parent = ClassStats::default();
        rows.iter().for_each(|&r| obj.add(&mut parent, r));
        let a = best_split(x.view(), &rows, &[0, 1, 2, 3], Some(&pre), &obj, &parent).unwrap();
        let b = best_split(x.view(), &rows, &[0, 1, 2, 3], None, &obj, &parent).unwrap();
        assert_eq!((a.feature, a.threshold, a.gain), (b.feature, b.threshold, b.gain));
    }

    #[test]
    fn impurity_endpoints() {
        assert_eq!(gini(0.5), 0.5);
        assert_eq!(gini(0.0), 0.0);
        assert_eq!(gini(1.0), 0.0);
        assert!((entropy(0.5) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn leaf_weight_formula() {
        assert!((leaf_weight(2.0, 4.0, 1.0) + 0.4).abs() < 1e-15);
        assert_eq!(leaf_weight(1.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn midpoint_thresholds() {
        let x = array![[1.0], [2.0], [4.0]];
        let labels = [0u8, 0, 1];
        let weights = [1.0; 3];
        let obj = ClassImpurity {
            labels: &labels,
            weights: &weights,
            criterion: Criterion::Gini,
            min_samples_leaf: 1,
        };
        let mut g: Grower<'_, '_, _, ChaCha8Rng> = Grower {
            x: x.view(),
            objective: &obj,
            max_depth: None,
            min_samples_split: 2,
            features: vec![0],
            policy: FeaturePolicy::All,
            presorted: None,
        };
        match g.grow(&[0, 1, 2]) {
            TreeNode::Split { threshold, .. } => assert_eq!(threshold, 3.0),
            leaf => panic!("{leaf:?}"),
        }
    }

    #[test]
    fn serde_round_trip() {
        let t = TreeNode::Split {
            feature: 1,
            threshold: 0.1 + 0.2,
            left: Box::new(TreeNode::Leaf { value: 1.0 / 3.0 }),
            right: Box::new(TreeNode::Leaf { value: 0.9 }),
        };
        let json = serde_json::to_string(&t).unwrap();
        let back: TreeNode = serde_json::from_str(&json).unwrap();
        assert_eq!(t, back);
        assert_eq!(t.depth(), 1);
        assert_eq!(t.n_leaves(), 2);
    }
}
