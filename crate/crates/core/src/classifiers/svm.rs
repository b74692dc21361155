//! Linear SVM trained by stochastic subgradient descent on the
//! L2-regularized hinge loss, step size `1 / (lambda * t)`.
//!
//! The objective is `lambda/2 * |w|^2 + mean_i max(0, 1 - y_i (w.x_i + b))`
//! with `lambda = 1 / C`. The intercept is an extra weight on a constant
//! input of 1 and is regularized with the rest. Using the mean hinge loss
//! makes the solution independent of how often the whole training set is
//! repeated.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::platt::Platt;
use super::EpochLoss;

/// Sparse row: (column, value) pairs.
pub type SparseRow = Vec<(usize, f64)>;

/// Row access needed by the trainer.
pub trait Rows {
    fn n_rows(&self) -> usize;
    fn n_cols(&self) -> usize;
    fn dot(&self, i: usize, w: &[f64]) -> f64;
    fn add_scaled(&self, i: usize, alpha: f64, w: &mut [f64]);
}

impl Rows for Array2<f64> {
    fn n_rows(&self) -> usize {
        self.nrows()
    }
    fn n_cols(&self) -> usize {
        self.ncols()
    }
    fn dot(&self, i: usize, w: &[f64]) -> f64 {
        self.row(i).iter().zip(w).map(|(x, w)| x * w).sum()
    }
    fn add_scaled(&self, i: usize, alpha: f64, w: &mut [f64]) {
        for (wj, x) in w.iter_mut().zip(self.row(i)) {
            *wj += alpha * x;
        }
    }
}

/// Sparse rows over a fixed column count.
pub struct SparseRows<'a> {
    pub rows: &'a [SparseRow],
    pub n_cols: usize,
}

impl Rows for SparseRows<'_> {
    fn n_rows(&self) -> usize {
        self.rows.len()
    }
    fn n_cols(&self) -> usize {
        self.n_cols
    }
    fn dot(&self, i: usize, w: &[f64]) -> f64 {
        self.rows[i].iter().map(|&(j, x)| w[j] * x).sum()
    }
    fn add_scaled(&self, i: usize, alpha: f64, w: &mut [f64]) {
        for &(j, x) in &self.rows[i] {
            w[j] += alpha * x;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub platt: Platt,
}

impl LinearSvm {
    pub fn margin_dense(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.intercept
    }

    pub fn margin_sparse(&self, x: &[(usize, f64)]) -> f64 {
        x.iter().map(|&(j, v)| self.weights.get(j).copied().unwrap_or(0.0) * v).sum::<f64>() + self.intercept
    }

    /// Calibrated probability of the positive class.
    pub fn probability(&self, margin: f64) -> f64 {
        self.platt.probability(margin)
    }
}

/// Train on `rows` with labels `positive`; returns the model and the
/// per-epoch primal objective.
pub fn train_linear_svm(
    rows: &impl Rows,
    positive: &[bool],
    c: f64,
    epochs: usize,
    seed: u64,
) -> (LinearSvm, Vec<EpochLoss>) {
    let n = rows.n_rows();
    let d = rows.n_cols();
    assert_eq!(n, positive.len());
    let lambda = 1.0 / c;
    let y: Vec<f64> = positive.iter().map(|&p| if p { 1.0 } else { -1.0 }).collect();
    // Last slot holds the intercept.
    let mut w = vec![0.0; d + 1];
    let radius = 1.0 / lambda.sqrt();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = Vec::with_capacity(epochs);
    let mut t = 0u64;

    let margin = |w: &[f64], i: usize| rows.dot(i, &w[..d]) + w[d];

    for epoch in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let violated = y[i] * margin(&w, i) < 1.0;
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if violated {
                rows.add_scaled(i, eta * y[i], &mut w[..d]);
                w[d] += eta * y[i];
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
            }
        }
        let hinge = (0..n).map(|i| (1.0 - y[i] * margin(&w, i)).max(0.0)).sum::<f64>() / n as f64;
        let reg = 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>();
        log.push(EpochLoss { epoch: epoch + 1, loss: reg + hinge });
    }

    let margins: Vec<f64> = (0..n).map(|i| margin(&w, i)).collect();
    let platt = Platt::fit(&margins, positive);
    let intercept = w.pop().expect("intercept slot");
    (LinearSvm { weights: w, intercept, platt }, log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn separates_one_dimensional_points() {
        let x = array![[-3.0], [-2.0], [-1.0], [1.0], [2.0], [3.0]];
        let y = [false, false, false, true, true, true];
        let (m, log) = train_linear_svm(&x, &y, 1.0, 50, 0);
        assert!(m.weights[0] > 0.0);
        for (row, &label) in x.rows().into_iter().zip(&y) {
            let p = m.probability(m.margin_dense(row.as_slice().unwrap()));
            assert_eq!(p > 0.5, label);
        }
        assert_eq!(log.len(), 50);
    }

    #[test]
    fn sparse_and_dense_agree() {
        let dense = array![[1.0, 0.0], [0.0, 1.0], [2.0, 0.0], [0.0, 2.0]];
        let sparse: Vec<SparseRow> = vec![vec![(0, 1.0)], vec![(1, 1.0)], vec![(0, 2.0)], vec![(1, 2.0)]];
        let y = [true, false, true, false];
        let (a, _) = train_linear_svm(&dense, &y, 1.0, 20, 9);
        let (b, _) = train_linear_svm(&SparseRows { rows: &sparse, n_cols: 2 }, &y, 1.0, 20, 9);
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((a.intercept - b.intercept).abs() < 1e-12);
    }
}
