//! Random forest of gini-impurity decision trees.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf { class: u8 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Binary decision tree stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

/// Gini impurity of a two-class count.
pub fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p0 = counts[0] as f64 / n;
    let p1 = counts[1] as f64 / n;
    1.0 - p0 * p0 - p1 * p1
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_features: usize,
    pub max_depth: Option<usize>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn majority(counts: [usize; 2]) -> u8 {
    // Ties go to class 0.
    u8::from(counts[1] > counts[0])
}

fn count(samples: &[usize], y: &[u8]) -> [usize; 2] {
    let mut c = [0, 0];
    for &i in samples {
        c[y[i] as usize] += 1;
    }
    c
}

/// Lowest weighted child impurity over all thresholds of one feature, or
/// `None` when the feature is constant on `samples`.
fn best_threshold(x: &Array2<f64>, y: &[u8], samples: &[usize], feature: usize) -> Option<(f64, f64)> {
    let mut pairs: Vec<(f64, u8)> = samples.iter().map(|&i| (x[[i, feature]], y[i])).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total = count(samples, y);
    let n = pairs.len() as f64;
    let mut left = [0usize; 2];
    let mut best: Option<(f64, f64)> = None;
    for k in 0..pairs.len() - 1 {
        left[pairs[k].1 as usize] += 1;
        let (lo, hi) = (pairs[k].0, pairs[k + 1].0);
        if lo == hi {
            continue;
        }
        let right = [total[0] - left[0], total[1] - left[1]];
        let nl = (k + 1) as f64;
        let impurity = (nl * gini(left) + (n - nl) * gini(right)) / n;
        if best.is_none_or(|(b, _)| impurity < b) {
            let mut threshold = lo + (hi - lo) / 2.0;
            if threshold >= hi {
                threshold = lo;
            }
            best = Some((impurity, threshold));
        }
    }
    best
}

impl DecisionTree {
    /// Grow a tree on the (possibly repeated) sample indices.
    ///
    /// Each node evaluates `max_features` randomly ordered features; when
    /// none of them is splittable the search continues through the
    /// remaining features before giving up.
    pub fn fit(x: &Array2<f64>, y: &[u8], samples: Vec<usize>, params: TreeParams, rng: &mut impl Rng) -> Self {
        let d = x.ncols();
        let mut nodes = vec![Node::Leaf { class: 0 }];
        let mut stack = vec![(0usize, samples, 0usize)];
        let mut features: Vec<usize> = (0..d).collect();

        while let Some((slot, samples, depth)) = stack.pop() {
            let counts = count(&samples, y);
            let leaf = Node::Leaf { class: majority(counts) };
            if counts[0] == 0 || counts[1] == 0 || samples.len() < 2 || params.max_depth.is_some_and(|m| depth >= m) {
                nodes[slot] = leaf;
                continue;
            }

            features.shuffle(rng);
            let mut best: Option<BestSplit> = None;
            for (tried, &f) in features.iter().enumerate() {
                if tried >= params.max_features && best.is_some() {
                    break;
                }
                if let Some((impurity, threshold)) = best_threshold(x, y, &samples, f) {
                    if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                        best = Some(BestSplit { feature: f, threshold, impurity });
                    }
                }
            }
            let Some(split) = best else {
                nodes[slot] = leaf;
                continue;
            };

            let (left, right): (Vec<usize>, Vec<usize>) =
                samples.iter().partition(|&&i| x[[i, split.feature]] <= split.threshold);
            let left_slot = nodes.len();
            nodes.push(Node::Leaf { class: 0 });
            let right_slot = nodes.len();
            nodes.push(Node::Leaf { class: 0 });
            nodes[slot] =
                Node::Split { feature: split.feature, threshold: split.threshold, left: left_slot, right: right_slot };
            stack.push((right_slot, right, depth + 1));
            stack.push((left_slot, left, depth + 1));
        }
        DecisionTree { nodes }
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { class } => return *class,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    /// Trees are grown in parallel; tree `i` uses seed `seed + i`, so the
    /// result does not depend on scheduling.
    pub fn fit(x: &Array2<f64>, y: &[u8], n_trees: usize, bootstrap: bool, params: TreeParams, seed: u64) -> Self {
        let n = x.nrows();
        let trees = (0..n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
                let samples: Vec<usize> =
                    if bootstrap { (0..n).map(|_| rng.random_range(0..n)).collect() } else { (0..n).collect() };
                DecisionTree::fit(x, y, samples, params, &mut rng)
            })
            .collect();
        RandomForest { trees }
    }

    /// Fraction of trees voting for class 1.
    pub fn vote_fraction(&self, x: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.predict(x) == 1).count();
        votes as f64 / self.trees.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn gini_values() {
        assert_eq!(gini([5, 0]), 0.0);
        assert_eq!(gini([5, 5]), 0.5);
        assert!((gini([1, 3]) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn perfect_feature_gives_stump() {
        // Feature 1 separates perfectly; feature 0 is constant.
        let x = array![[1.0, -2.0], [1.0, -1.0], [1.0, -0.5], [1.0, 0.5], [1.0, 1.0], [1.0, 3.0]];
        let y = [0, 0, 0, 1, 1, 1];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree =
            DecisionTree::fit(&x, &y, (0..6).collect(), TreeParams { max_features: 1, max_depth: None }, &mut rng);
        assert_eq!(tree.depth(), 1);
        match &tree.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 1);
                assert_eq!(*threshold, 0.0);
            }
            n => panic!("{n:?}"),
        }
    }

    #[test]
    fn xor_needs_depth_two() {
        let x = array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let y = [0, 1, 1, 0];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tree =
            DecisionTree::fit(&x, &y, (0..4).collect(), TreeParams { max_features: 2, max_depth: None }, &mut rng);
        for (i, row) in x.rows().into_iter().enumerate() {
            assert_eq!(tree.predict(row.as_slice().unwrap()), y[i]);
        }
        assert_eq!(tree.depth(), 2);
    }

    #[test]
    fn max_depth_caps_growth() {
        let x = array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let y = [0, 1, 1, 0];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tree =
            DecisionTree::fit(&x, &y, (0..4).collect(), TreeParams { max_features: 2, max_depth: Some(1) }, &mut rng);
        assert!(tree.depth() <= 1);
    }

    #[test]
    fn identical_rows_with_mixed_labels_become_majority_leaf() {
        let x = array![[1.0], [1.0], [1.0]];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree =
            DecisionTree::fit(&x, &[1, 1, 0], vec![0, 1, 2], TreeParams { max_features: 1, max_depth: None }, &mut rng);
        assert_eq!(tree.nodes, vec![Node::Leaf { class: 1 }]);
        let tie =
            DecisionTree::fit(&x, &[1, 0, 0], vec![0, 1], TreeParams { max_features: 1, max_depth: None }, &mut rng);
        assert_eq!(tie.nodes, vec![Node::Leaf { class: 0 }]);
    }
}
