use std::io::{self, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::FeatureLayout;

/// One line of an exported feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub id: String,
    pub layout_hash: String,
    pub values: Vec<f64>,
}

/// Write `matrix` as line-delimited `{id, layout_hash, values}` records.
pub fn write_feature_rows<W: Write>(
    mut out: W,
    ids: &[String],
    layout: &FeatureLayout,
    matrix: &Array2<f64>,
) -> io::Result<()> {
    assert_eq!(ids.len(), matrix.nrows(), "one id per matrix row");
    let layout_hash = layout.hash();
    for (id, row) in ids.iter().zip(matrix.rows()) {
        let rec = FeatureRow { id: id.clone(), layout_hash: layout_hash.clone(), values: row.to_vec() };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
