use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use super::{reference_rows, EvalMode, ExperimentReport, HarnessError};

/// Line-delimited JSON, one report per line.
pub fn write_reports<W: Write>(mut out: W, reports: &[ExperimentReport]) -> io::Result<()> {
    for r in reports {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_reports<R: BufRead>(input: R) -> Result<Vec<ExperimentReport>, HarnessError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| HarnessError::Report { line: i + 1, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| HarnessError::Report { line: i + 1, message: e.to_string() })?,
        );
    }
    Ok(out)
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
}

/// Grid of runs in the style of the published tables, optionally followed
/// by the published reference rows of the matching setting.
pub fn render_table(reports: &[ExperimentReport], with_reference: bool) -> String {
    let header = ["Evaluation", "Train", "Test", "Features", "Classifier", "Seed", "Prec.", "Recall", "F-score"];
    let mut rows: Vec<[String; 9]> = reports
        .iter()
        .map(|r| {
            [
                r.mode.to_string(),
                r.train_langs.clone(),
                r.test_langs.clone(),
                r.families.clone(),
                r.classifier.clone(),
                r.seed.to_string(),
                pct(Some(r.precision)),
                pct(Some(r.recall)),
                pct(Some(r.f_score)),
            ]
        })
        .collect();
    if with_reference {
        let mono = !reports.is_empty()
            && reports.iter().all(|r| {
                r.mode == EvalMode::SplitWithinLangs && r.train_langs == r.test_langs && !r.train_langs.contains('+')
            });
        for r in reference_rows(mono) {
            rows.push([
                format!("reference: {}", r.setting),
                r.train.to_string(),
                r.test.to_string(),
                r.features.to_string(),
                r.model.to_string(),
                "-".to_string(),
                pct(r.precision),
                pct(r.recall),
                pct(Some(r.f_score)),
            ]);
        }
    }
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[&str]| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, &w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "| {} |", padded.join(" | "));
    };
    line(&mut out, &header);
    let _ = writeln!(out, "|{}|", widths.iter().map(|w| "-".repeat(w + 2)).collect::<Vec<_>>().join("|"));
    for row in &rows {
        line(&mut out, &row.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}
