//! Offensive-language probability ("bias score") from a linear SVM over
//! TF-IDF weighted word and character n-grams.
//!
//! Rows are raw term counts times smoothed idf, without length
//! normalization, so every feature enters the margin linearly.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::svm::{train_linear_svm, LinearSvm, SparseRow, SparseRows};
use crate::corpus::preprocess_text;

/// Score used when no bias model is configured.
pub const NEUTRAL_BIAS: f64 = 0.5;

const MODEL_FORMAT: &str = "tweetguard-bias-model";
const FORMAT_MAJOR: u32 = 1;

#[derive(Debug, Error)]
pub enum BiasError {
    #[error("bias corpus needs at least one example per class")]
    SingleClass,
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("corrupt bias model: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BiasConfig {
    /// Inclusive word n-gram range.
    pub word_ngrams: (usize, usize),
    /// Inclusive character n-gram range.
    pub char_ngrams: (usize, usize),
    pub c: f64,
    pub epochs: usize,
}

impl Default for BiasConfig {
    fn default() -> Self {
        BiasConfig { word_ngrams: (1, 2), char_ngrams: (3, 5), c: 1.0, epochs: 30 }
    }
}

/// One labeled example of the offensive-language corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasExample {
    pub text: String,
    pub offensive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasModel {
    pub format: String,
    pub major: u32,
    pub config: BiasConfig,
    pub config_hash: String,
    pub seed: u64,
    /// n-gram to column; word grams are prefixed `w:`, char grams `c:`.
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    pub svm: LinearSvm,
}

/// n-gram counts of an already preprocessed text.
fn ngram_counts(text: &str, cfg: &BiasConfig) -> BTreeMap<String, u32> {
    let mut counts = BTreeMap::new();
    let words: Vec<&str> = text.split_whitespace().collect();
    for n in cfg.word_ngrams.0.max(1)..=cfg.word_ngrams.1 {
        for w in words.windows(n) {
            *counts.entry(format!("w:{}", w.join(" "))).or_insert(0) += 1;
        }
    }
    let chars: Vec<char> = text.chars().collect();
    for n in cfg.char_ngrams.0.max(1)..=cfg.char_ngrams.1 {
        for w in chars.windows(n) {
            *counts.entry(format!("c:{}", w.iter().collect::<String>())).or_insert(0) += 1;
        }
    }
    counts
}

/// Train the bias model. Identical inputs give byte-identical models.
pub fn train_bias_model(corpus: &[BiasExample], cfg: &BiasConfig, seed: u64) -> Result<BiasModel, BiasError> {
    let n_pos = corpus.iter().filter(|e| e.offensive).count();
    if n_pos == 0 || n_pos == corpus.len() {
        return Err(BiasError::SingleClass);
    }
    let docs: Vec<BTreeMap<String, u32>> =
        corpus.iter().map(|e| ngram_counts(&preprocess_text(&e.text), cfg)).collect();

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in &docs {
        for gram in doc.keys() {
            *df.entry(gram.as_str()).or_insert(0) += 1;
        }
    }
    let n = docs.len() as f64;
    let vocabulary: BTreeMap<String, usize> = df.keys().enumerate().map(|(i, g)| (g.to_string(), i)).collect();
    let idf: Vec<f64> = df.values().map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0).collect();

    let rows: Vec<SparseRow> = docs
        .iter()
        .map(|doc| {
            doc.iter()
                .map(|(g, &c)| {
                    let j = vocabulary[g];
                    (j, c as f64 * idf[j])
                })
                .collect()
        })
        .collect();
    let positive: Vec<bool> = corpus.iter().map(|e| e.offensive).collect();
    let (svm, _) =
        train_linear_svm(&SparseRows { rows: &rows, n_cols: vocabulary.len() }, &positive, cfg.c, cfg.epochs, seed);

    Ok(BiasModel {
        format: MODEL_FORMAT.to_string(),
        major: FORMAT_MAJOR,
        config: cfg.clone(),
        config_hash: crate::fingerprint::digest_json(&(cfg, seed)),
        seed,
        vocabulary,
        idf,
        svm,
    })
}

impl BiasModel {
    /// TF-IDF row of `text`; unknown n-grams are dropped.
    pub fn vectorize(&self, text: &str) -> SparseRow {
        ngram_counts(&preprocess_text(text), &self.config)
            .into_iter()
            .filter_map(|(g, c)| self.vocabulary.get(&g).map(|&j| (j, c as f64 * self.idf[j])))
            .collect()
    }

    /// Calibrated probability for an already vectorized row.
    pub fn score_row(&self, row: &[(usize, f64)]) -> f64 {
        self.svm.probability(self.svm.margin_sparse(row))
    }

    /// Probability that `text` is offensive, strictly inside (0, 1).
    pub fn bias_score(&self, text: &str) -> f64 {
        self.score_row(&self.vectorize(text))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec(self).expect("model serialization cannot fail");
        bytes.push(b'\n');
        bytes
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, BiasError> {
        let m: BiasModel = serde_json::from_slice(bytes).map_err(|e| BiasError::Corrupt(e.to_string()))?;
        if m.format != MODEL_FORMAT || m.major != FORMAT_MAJOR {
            return Err(BiasError::Corrupt(format!("unsupported format {} v{}", m.format, m.major)));
        }
        if m.idf.len() != m.vocabulary.len() || m.svm.weights.len() != m.vocabulary.len() {
            return Err(BiasError::Corrupt("vocabulary, idf and weight lengths differ".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), BiasError> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|source| BiasError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BiasError> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|source| BiasError::Io { path: path.display().to_string(), source })?;
        Self::from_bytes(&bytes)
    }

    pub fn fingerprint(&self) -> String {
        crate::fingerprint::digest_bytes(&self.to_bytes())
    }
}

/// Bias score, or [`NEUTRAL_BIAS`] without a model.
pub fn bias_score_or_neutral(model: Option<&BiasModel>, text: &str) -> f64 {
    model.map_or(NEUTRAL_BIAS, |m| m.bias_score(text))
}

#[derive(Deserialize)]
struct CorpusLine {
    text: String,
    offensive: u8,
}

/// Parse a line-delimited `{text, offensive: 0|1}` corpus.
pub fn parse_bias_corpus(input: &str) -> Result<Vec<BiasExample>, BiasError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: CorpusLine =
            serde_json::from_str(line).map_err(|e| BiasError::Parse { line: i + 1, message: e.to_string() })?;
        let offensive = match parsed.offensive {
            0 => false,
            1 => true,
            v => return Err(BiasError::Parse { line: i + 1, message: format!("offensive must be 0 or 1, got {v}") }),
        };
        out.push(BiasExample { text: parsed.text, offensive });
    }
    Ok(out)
}

pub fn load_bias_corpus(path: impl AsRef<Path>) -> Result<Vec<BiasExample>, BiasError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| BiasError::Io { path: path.display().to_string(), source })?;
    parse_bias_corpus(&text)
}

/// Distinct n-grams of `text` under `cfg`, for inspection.
pub fn ngrams(text: &str, cfg: &BiasConfig) -> BTreeSet<String> {
    ngram_counts(&preprocess_text(text), cfg).into_keys().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy_corpus() -> Vec<BiasExample> {
        (0..10)
            .flat_map(|_| {
                [
                    BiasExample { text: "you idiot".into(), offensive: true },
                    BiasExample { text: "have a nice day".into(), offensive: false },
                ]
            })
            .collect()
    }

    #[test]
    fn toy_model_orders_examples() {
        let m = train_bias_model(&toy_corpus(), &BiasConfig::default(), 7).unwrap();
        assert!(m.bias_score("you idiot") > 0.5);
        assert!(m.bias_score("have a nice day") < 0.5);
        assert_eq!(m.svm.weights.len(), m.vocabulary.len());
    }

    #[test]
    fn empty_text_scores_through_intercept() {
        let m = train_bias_model(&toy_corpus(), &BiasConfig::default(), 7).unwrap();
        assert!(m.vectorize("").is_empty());
        assert_eq!(m.bias_score(""), m.svm.platt.probability(m.svm.intercept));
        assert_eq!(m.bias_score("zzzz qqqq"), m.bias_score(""));
    }

    #[test]
    fn training_is_deterministic() {
        let a = train_bias_model(&toy_corpus(), &BiasConfig::default(), 3).unwrap();
        let b = train_bias_model(&toy_corpus(), &BiasConfig::default(), 3).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
        assert_eq!(BiasModel::from_bytes(&a.to_bytes()).unwrap(), a);
    }

    #[test]
    fn single_class_rejected() {
        let pos: Vec<_> = toy_corpus().into_iter().filter(|e| e.offensive).collect();
        assert!(matches!(train_bias_model(&pos, &BiasConfig::default(), 0), Err(BiasError::SingleClass)));
    }

    #[test]
    fn neutral_without_model() {
        assert_eq!(bias_score_or_neutral(None, "anything"), NEUTRAL_BIAS);
    }

    #[test]
    fn ngram_extraction() {
        let cfg = BiasConfig { word_ngrams: (1, 2), char_ngrams: (3, 3), ..Default::default() };
        let g = ngrams("#tag Ab cd", &cfg);
        let expected: BTreeSet<String> =
            ["w:ab", "w:cd", "w:ab cd", "c:ab ", "c:b c", "c: cd"].iter().map(|s| s.to_string()).collect();
        assert_eq!(g, expected);
    }

    #[test]
    fn corpus_parsing_reports_line() {
        let ok = parse_bias_corpus("{\"text\":\"a\",\"offensive\":1}\n\n{\"text\":\"b\",\"offensive\":0}\n").unwrap();
        assert_eq!(ok.len(), 2);
        let err =
            parse_bias_corpus("{\"text\":\"a\",\"offensive\":1}\n{\"text\":\"b\",\"offensive\":2}\n").unwrap_err();
        assert!(err.to_string().starts_with("line 2:"), "{err}");
    }
}
