use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use super::{FeatureError, FeatureVector};

/// Column standardizer fitted on training rows.
///
/// Columns whose spread is negligible relative to their mean are flagged
/// constant and pass through unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    mean: Vec<f64>,
    std: Vec<f64>,
    constant: Vec<bool>,
}

pub(crate) fn is_negligible_spread(std: f64, mean: f64) -> bool {
    std <= 1e-12 * mean.abs().max(1.0)
}

fn column_moments(col: ArrayView1<'_, f64>) -> (f64, f64) {
    let n = col.len() as f64;
    let mean = col.sum() / n;
    let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl Scaler {
    pub fn fit(train: &Array2<f64>) -> Result<Self, FeatureError> {
        if train.nrows() == 0 {
            return Err(FeatureError::EmptyMatrix);
        }
        let mut mean = Vec::with_capacity(train.ncols());
        let mut std = Vec::with_capacity(train.ncols());
        let mut constant = Vec::with_capacity(train.ncols());
        for col in train.axis_iter(Axis(1)) {
            let (m, s) = column_moments(col);
            mean.push(m);
            std.push(s);
            constant.push(is_negligible_spread(s, m));
        }
        Ok(Scaler { mean, std, constant })
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    /// Per-column constant flags.
    pub fn constant(&self) -> &[bool] {
        &self.constant
    }

    pub fn apply_slice(&self, row: &mut [f64]) -> Result<(), FeatureError> {
        if row.len() != self.width() {
            return Err(FeatureError::Dimension { expected: self.width(), got: row.len() });
        }
        for (j, v) in row.iter_mut().enumerate() {
            if !self.constant[j] {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
        Ok(())
    }

    pub fn apply(&self, v: &FeatureVector) -> Result<FeatureVector, FeatureError> {
        let mut values = v.values().to_vec();
        self.apply_slice(&mut values)?;
        FeatureVector::new(v.layout().clone(), values)
    }

    pub fn transform(&self, m: &Array2<f64>) -> Result<Array2<f64>, FeatureError> {
        if m.ncols() != self.width() {
            return Err(FeatureError::Dimension { expected: self.width(), got: m.ncols() });
        }
        let mut out = m.clone();
        for mut row in out.axis_iter_mut(Axis(0)) {
            self.apply_slice(row.as_slice_mut().expect("standard layout"))?;
        }
        Ok(out)
    }
}
