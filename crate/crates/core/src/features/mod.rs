//! Hand-crafted features and feature-vector assembly.
//!
//! Five feature families feed the classifiers. Assembled vectors always
//! follow the canonical family order `TextEmbd, tweettext, tweetuser,
//! FactVer, Bias`, whatever order the caller lists them in.

mod correlation;
mod export;
mod scaler;
mod text;
mod user;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use correlation::{feature_label_correlation, CorrelationEntry, CorrelationReport};
pub use export::{write_feature_rows, FeatureRow};
pub use scaler::Scaler;
pub use text::{extract_text_features, TextFeatures};
pub use user::{extract_user_features, num_matches, UserFeatures};

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("family unavailable: {0}")]
    MissingFamily(Family),
    #[error("non-finite value in feature `{0}`")]
    NonFinite(String),
    #[error("reference time {as_of} precedes account creation {created_at}")]
    AsOfBeforeCreation { as_of: String, created_at: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("empty matrix")]
    EmptyMatrix,
    #[error("matrix has {rows} rows but {labels} labels")]
    LabelCount { rows: usize, labels: usize },
    #[error("at least two rows are needed, got {0}")]
    TooFewRows(usize),
    #[error("all labels are identical; correlation is undefined")]
    SingleClass,
    #[error("unknown feature family `{0}`")]
    UnknownFamily(String),
}

/// Feature family tags, declared in canonical concatenation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "TextEmbd")]
    TextEmbd,
    #[serde(rename = "tweettext", alias = "TweetText")]
    TweetText,
    #[serde(rename = "tweetuser", alias = "TweetUser")]
    TweetUser,
    #[serde(rename = "FactVer")]
    FactVer,
    #[serde(rename = "Bias")]
    Bias,
}

impl Family {
    pub const ALL: [Family; 5] =
        [Family::TextEmbd, Family::TweetText, Family::TweetUser, Family::FactVer, Family::Bias];

    pub fn tag(self) -> &'static str {
        match self {
            Family::TextEmbd => "TextEmbd",
            Family::TweetText => "tweettext",
            Family::TweetUser => "tweetuser",
            Family::FactVer => "FactVer",
            Family::Bias => "Bias",
        }
    }

    /// Sorted, de-duplicated family list.
    pub fn canonical(families: &[Family]) -> Vec<Family> {
        let mut v = families.to_vec();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// `TextEmbd + tweetuser` style label for report tables.
    pub fn label(families: &[Family]) -> String {
        Family::canonical(families).iter().map(|f| f.tag()).collect::<Vec<_>>().join(" + ")
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Family {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.tag().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| FeatureError::UnknownFamily(s.to_string()))
    }
}

/// Ordered feature names plus the family each span belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    names: Vec<String>,
    families: Vec<(Family, usize)>,
}

impl FeatureLayout {
    /// Layout for a family selection; `embedding_dim` sizes the TextEmbd span.
    pub fn for_families(families: &[Family], embedding_dim: usize) -> Self {
        let mut names = Vec::new();
        let mut spans = Vec::new();
        for family in Family::canonical(families) {
            let before = names.len();
            match family {
                Family::TextEmbd => names.extend((0..embedding_dim).map(|i| format!("TextEmbd[{i}]"))),
                Family::TweetText => names.extend(TextFeatures::NAMES.iter().map(|n| format!("tweettext.{n}"))),
                Family::TweetUser => names.extend(UserFeatures::NAMES.iter().map(|n| format!("tweetuser.{n}"))),
                Family::FactVer => names.push("FactVer.score".into()),
                Family::Bias => names.push("Bias.score".into()),
            }
            spans.push((family, names.len() - before));
        }
        FeatureLayout { names, families: spans }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn families(&self) -> Vec<Family> {
        self.families.iter().map(|(f, _)| *f).collect()
    }

    /// Width of the TextEmbd span, 0 when absent.
    pub fn embedding_dim(&self) -> usize {
        self.families.iter().find(|(f, _)| *f == Family::TextEmbd).map_or(0, |(_, n)| *n)
    }

    /// Stable digest of the ordered feature names.
    pub fn hash(&self) -> String {
        crate::fingerprint::digest_json(&self.names)
    }
}

/// Numeric vector with the layout it was assembled under.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    layout: Arc<FeatureLayout>,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(layout: Arc<FeatureLayout>, values: Vec<f64>) -> Result<Self, FeatureError> {
        if values.len() != layout.len() {
            return Err(FeatureError::Dimension { expected: layout.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite(layout.names[i].clone()));
        }
        Ok(FeatureVector { layout, values })
    }

    pub fn layout(&self) -> &Arc<FeatureLayout> {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// (name, value) pairs in layout order.
    pub fn named(&self) -> impl Iterator<Item = (&str, f64)> {
        self.layout.names.iter().map(String::as_str).zip(self.values.iter().copied())
    }
}

/// Per-family inputs available for one tweet.
#[derive(Debug, Clone, Default)]
pub struct FeatureParts {
    pub embedding: Option<Vec<f64>>,
    pub text: Option<TextFeatures>,
    pub user: Option<UserFeatures>,
    pub factver: Option<f64>,
    pub bias: Option<f64>,
}

impl FeatureParts {
    fn family_values(&self, family: Family) -> Option<Vec<f64>> {
        match family {
            Family::TextEmbd => self.embedding.clone(),
            Family::TweetText => self.text.as_ref().map(|t| t.values().to_vec()),
            Family::TweetUser => self.user.as_ref().map(|u| u.values().to_vec()),
            Family::FactVer => self.factver.map(|v| vec![v]),
            Family::Bias => self.bias.map(|v| vec![v]),
        }
    }
}

/// Concatenate the requested families in canonical order.
pub fn assemble_feature_vector(families: &[Family], parts: &FeatureParts) -> Result<FeatureVector, FeatureError> {
    let families = Family::canonical(families);
    let mut values = Vec::new();
    let mut embedding_dim = 0;
    for &family in &families {
        let part = parts.family_values(family).ok_or(FeatureError::MissingFamily(family))?;
        if family == Family::TextEmbd {
            embedding_dim = part.len();
        }
        values.extend(part);
    }
    let layout = Arc::new(FeatureLayout::for_families(&families, embedding_dim));
    FeatureVector::new(layout, values)
}

/// Like [`assemble_feature_vector`] but against a fixed layout, so that
/// every row of a matrix shares one `Arc`.
pub fn assemble_with_layout(layout: &Arc<FeatureLayout>, parts: &FeatureParts) -> Result<FeatureVector, FeatureError> {
    let mut values = Vec::with_capacity(layout.len());
    for &(family, width) in &layout.families {
        let part = parts.family_values(family).ok_or(FeatureError::MissingFamily(family))?;
        if part.len() != width {
            return Err(FeatureError::Dimension { expected: width, got: part.len() });
        }
        values.extend(part);
    }
    FeatureVector::new(Arc::clone(layout), values)
}
