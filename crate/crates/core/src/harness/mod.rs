//! Experiment runner: metrics, the mono-lingual / multilingual / zero-shot
//! evaluation matrix, seed sweeps and table rendering.

mod metrics;
mod reference;
mod report;
mod run;

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::{ClassifierError, ClassifierKind, TrainConfig};
use crate::corpus::{CorpusError, Lang};
use crate::features::{Family, FeatureError};
use crate::pipeline::PipelineError;

pub use metrics::{compute_metrics, confusion, ClassScores, Confusion, MacroScores, Metrics};
pub use reference::{reference_rows, ReferenceRow};
pub use report::{read_reports, render_table, write_reports};
pub use run::{
    dataset_features, evaluate_bundle, run_experiment, seed_sweep, seed_sweep_with, BundleEvaluation,
    ExperimentOutcome, ExperimentReport, SeedFailure, SweepOutcome, SweepSummary,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{pred} predictions but {gold} gold labels")]
    LengthMismatch { pred: usize, gold: usize },
    #[error("no predictions to score")]
    NoPredictions,
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("no embedding for record `{0}`")]
    MissingEmbedding(String),
    #[error("{0} set is empty")]
    EmptyPartition(&'static str),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("malformed report line {line}: {message}")]
    Report { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Stratified split of the selected languages; train and test come
    /// from the two partitions.
    SplitWithinLangs,
    /// Train on every record of `train_langs`, test on every record of the
    /// disjoint `test_langs`.
    HoldoutLanguage,
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMode::SplitWithinLangs => "split_within_langs",
            EvalMode::HoldoutLanguage => "holdout_language",
        })
    }
}

fn default_train_fraction() -> f64 {
    0.8
}

fn default_factver_k() -> usize {
    crate::factver::DEFAULT_K
}

fn default_as_of() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap()
}

/// One experiment. Read from TOML; `as_of` is an RFC 3339 string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub mode: EvalMode,
    pub train_langs: BTreeSet<Lang>,
    pub test_langs: BTreeSet<Lang>,
    pub families: Vec<Family>,
    /// Seed for the split and the classifier. Overrides `classifier.seed`.
    pub seed: u64,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    /// Reference time for account-age features.
    #[serde(default = "default_as_of")]
    pub as_of: DateTime<Utc>,
    #[serde(default = "default_factver_k")]
    pub factver_k: usize,
    #[serde(default)]
    pub sweep_seeds: Vec<u64>,
    pub classifier: TrainConfig,
}

impl ExperimentConfig {
    pub fn new(
        mode: EvalMode,
        train_langs: impl IntoIterator<Item = Lang>,
        test_langs: impl IntoIterator<Item = Lang>,
        families: &[Family],
        kind: ClassifierKind,
        seed: u64,
    ) -> Self {
        ExperimentConfig {
            name: String::new(),
            mode,
            train_langs: train_langs.into_iter().collect(),
            test_langs: test_langs.into_iter().collect(),
            families: Family::canonical(families),
            seed,
            train_fraction: default_train_fraction(),
            as_of: default_as_of(),
            factver_k: default_factver_k(),
            sweep_seeds: Vec::new(),
            classifier: TrainConfig::new(kind, seed),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.train_langs.is_empty() || self.test_langs.is_empty() {
            return Err(HarnessError::Config("train_langs and test_langs must be non-empty".into()));
        }
        if self.families.is_empty() {
            return Err(HarnessError::Config("at least one feature family is required".into()));
        }
        if self.mode == EvalMode::HoldoutLanguage {
            let shared: Vec<&str> = self.train_langs.intersection(&self.test_langs).map(|l| l.as_str()).collect();
            if !shared.is_empty() {
                return Err(HarnessError::Config(format!(
                    "holdout_language mode needs disjoint languages; {} in both",
                    shared.join(", ")
                )));
            }
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(HarnessError::Config(format!("train_fraction {} is outside (0, 1)", self.train_fraction)));
        }
        Ok(())
    }

    /// Copy with the run seed replaced.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.seed = seed;
        c.classifier.seed = seed;
        c
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.families = Family::canonical(&cfg.families);
        cfg.classifier.seed = cfg.seed;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes to TOML")
    }

    pub fn fingerprint(&self) -> String {
        crate::fingerprint::digest_json(self)
    }
}

/// Short language list such as `Eng+Hin+Ben`.
pub fn lang_list(langs: &BTreeSet<Lang>) -> String {
    let mut v: Vec<Lang> = langs.iter().copied().collect();
    v.sort_by_key(|l| Lang::ALL.iter().position(|x| x == l));
    v.iter().map(|l| &l.name()[..3]).collect::<Vec<_>>().join("+")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holdout_requires_disjoint_languages() {
        let cfg = ExperimentConfig::new(
            EvalMode::HoldoutLanguage,
            [Lang::En, Lang::Hi],
            [Lang::Hi],
            &[Family::TextEmbd],
            ClassifierKind::SoftmaxHead,
            1,
        );
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("hi in both"), "{err}");
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = ExperimentConfig::new(
            EvalMode::SplitWithinLangs,
            Lang::ALL,
            [Lang::Bn],
            &[Family::FactVer, Family::TextEmbd],
            ClassifierKind::RandomForest,
            42,
        );
        cfg.sweep_seeds = vec![1, 2, 3];
        let text = cfg.to_toml();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn minimal_toml() {
        let cfg = ExperimentConfig::from_toml(
            r#"
mode = "holdout_language"
train_langs = ["en", "bn"]
test_langs = ["hi"]
families = ["TextEmbd"]
seed = 7
as_of = "2020-06-01T00:00:00Z"

[classifier]
kind = "softmax_head"
"#,
        )
        .unwrap();
        assert_eq!(cfg.train_fraction, 0.8);
        assert_eq!(cfg.classifier.seed, 7);
        assert_eq!(cfg.as_of, Utc.with_ymd_and_hms(2020, 6, 1, 0, 0, 0).unwrap());
        assert_eq!(lang_list(&cfg.train_langs), "Eng+Ben");
    }
}
