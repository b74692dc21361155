use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::scaler::is_negligible_spread;
use super::FeatureError;
use crate::corpus::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub feature: String,
    pub coefficient: f64,
    /// The feature had no spread; its coefficient is reported as 0.
    pub constant: bool,
}

/// Point-biserial correlation of each feature with the fake label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub entries: Vec<CorrelationEntry>,
}

impl CorrelationReport {
    /// Two-column tab-separated table with a header row.
    pub fn to_table(&self) -> String {
        let mut out = String::from("feature\tcoefficient\n");
        for e in &self.entries {
            let flag = if e.constant { "\t(constant)" } else { "" };
            out.push_str(&format!("{}\t{:.6}{flag}\n", e.feature, e.coefficient));
        }
        out
    }
}

/// Pearson correlation between each column and the binary labels.
pub fn feature_label_correlation(
    names: &[String],
    matrix: &Array2<f64>,
    labels: &[Label],
) -> Result<CorrelationReport, FeatureError> {
    if matrix.nrows() != labels.len() {
        return Err(FeatureError::LabelCount { rows: matrix.nrows(), labels: labels.len() });
    }
    if names.len() != matrix.ncols() {
        return Err(FeatureError::Dimension { expected: matrix.ncols(), got: names.len() });
    }
    if labels.len() < 2 {
        return Err(FeatureError::TooFewRows(labels.len()));
    }
    let n = labels.len() as f64;
    let y: Vec<f64> = labels.iter().map(|l| l.as_u8() as f64).collect();
    let y_mean = y.iter().sum::<f64>() / n;
    let y_dev: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let y_ss = y_dev.iter().map(|d| d * d).sum::<f64>();
    if y_ss == 0.0 {
        return Err(FeatureError::SingleClass);
    }

    let entries = matrix
        .axis_iter(Axis(1))
        .zip(names)
        .map(|(col, name)| {
            let mean = col.sum() / n;
            let x_ss = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
            if is_negligible_spread((x_ss / n).sqrt(), mean) {
                return CorrelationEntry { feature: name.clone(), coefficient: 0.0, constant: true };
            }
            let cov = col.iter().zip(&y_dev).map(|(x, dy)| (x - mean) * dy).sum::<f64>();
            let r = (cov / (x_ss.sqrt() * y_ss.sqrt())).clamp(-1.0, 1.0);
            CorrelationEntry { feature: name.clone(), coefficient: r, constant: false }
        })
        .collect();
    Ok(CorrelationReport { entries })
}
