//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

/// Textbook full-table edit distance, kept deliberately naive.
pub fn levenshtein_oracle(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + if a[i - 1] == b[j - 1] { 0 } else { 1 };
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

/// Brute-force search for a separating line through 2-D points: scans
/// directions on a fine angular grid and checks whether some threshold on
/// the projection splits the two classes perfectly.
pub fn linearly_separable_2d(points: &[[f64; 2]], labels: &[bool]) -> bool {
    for step in 0..3600 {
        let theta = step as f64 * std::f64::consts::PI / 1800.0;
        let (c, s) = (theta.cos(), theta.sin());
        let proj = |p: &[f64; 2]| p[0] * c + p[1] * s;
        let max_neg = points.iter().zip(labels).filter(|(_, &l)| !l).map(|(p, _)| proj(p)).fold(f64::MIN, f64::max);
        let min_pos = points.iter().zip(labels).filter(|(_, &l)| l).map(|(p, _)| proj(p)).fold(f64::MAX, f64::min);
        if max_neg < min_pos {
            return true;
        }
    }
    false
}
