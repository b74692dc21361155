//! Feature construction for one tweet and single-text classification.
//!
//! The same [`build_parts`] routine feeds both experiment runs and the
//! prediction service, so a trained bundle sees identical features at
//! training and serving time.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::biaser::{BiasModel, NEUTRAL_BIAS};
use crate::classifiers::{decide, ClassifierError, TrainedModel};
use crate::corpus::{preprocess_text, Lang, UserProfile};
use crate::embeddings::{text_key, EmbeddingProviderClient, EmbeddingStore, ProviderError};
use crate::factver::{factver_score, FactVerScore, MatchedTitle, TrustedIndex};
use crate::features::{
    assemble_with_layout, extract_user_features, Family, FeatureError, FeatureLayout, FeatureParts, Scaler,
    TextFeatures,
};

const BUNDLE_FORMAT: &str = "tweetguard-bundle";
const BUNDLE_MAJOR: u32 = 1;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("missing feature family: {0}")]
    MissingFamily(Family),
    #[error("empty input")]
    EmptyInput,
    #[error("no embedding available for `{0}`")]
    MissingEmbedding(String),
    #[error("embedding provider unavailable: {0}")]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("corrupt bundle: {0}")]
    Corrupt(String),
}

/// Shared resources and settings for feature construction.
#[derive(Debug, Clone, Copy)]
pub struct FeatureContext<'a> {
    pub as_of: DateTime<Utc>,
    pub factver_k: usize,
    pub trusted: Option<&'a TrustedIndex>,
    pub bias: Option<&'a BiasModel>,
    /// Use [`NEUTRAL_BIAS`] when Bias is requested without a model.
    pub neutral_bias: bool,
}

/// Raw inputs for one tweet.
#[derive(Debug, Clone, Copy)]
pub struct TweetInput<'a> {
    pub text: &'a str,
    pub retweet_count: u64,
    pub favourite_count: u64,
    pub user: Option<&'a UserProfile>,
}

/// Compute the requested families. The FactVer details are returned for
/// display when that family is computed.
pub fn build_parts(
    families: &[Family],
    ctx: &FeatureContext<'_>,
    tweet: TweetInput<'_>,
    embedding: Option<Vec<f64>>,
) -> Result<(FeatureParts, Option<FactVerScore>), PipelineError> {
    let mut parts = FeatureParts::default();
    let mut fv = None;
    for &family in families {
        match family {
            Family::TextEmbd => parts.embedding = Some(embedding.clone().ok_or(PipelineError::MissingFamily(family))?),
            Family::TweetText => {
                parts.text = Some(TextFeatures {
                    retweet_count: tweet.retweet_count,
                    favourite_count: tweet.favourite_count,
                    ..TextFeatures::from_text(tweet.text)
                })
            }
            Family::TweetUser => {
                let user = tweet.user.ok_or(PipelineError::MissingFamily(family))?;
                parts.user = Some(extract_user_features(user, ctx.as_of)?);
            }
            Family::FactVer => {
                let idx = ctx.trusted.ok_or(PipelineError::MissingFamily(family))?;
                let score = factver_score(&preprocess_text(tweet.text), idx, ctx.factver_k);
                parts.factver = Some(score.score);
                fv = Some(score);
            }
            Family::Bias => {
                parts.bias = Some(match ctx.bias {
                    Some(m) => m.bias_score(tweet.text),
                    None if ctx.neutral_bias => NEUTRAL_BIAS,
                    None => return Err(PipelineError::MissingFamily(family)),
                })
            }
        }
    }
    Ok((parts, fv))
}

/// Everything needed to classify a text with a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineBundle {
    pub format: String,
    pub major: u32,
    pub model: TrainedModel,
    pub scaler: Scaler,
    pub layout: FeatureLayout,
    pub as_of: DateTime<Utc>,
    pub factver_k: usize,
    /// Model id of the embeddings used in training, when TextEmbd is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_model_id: Option<String>,
    /// Digests of the trusted index and bias model used in training.
    #[serde(default)]
    pub resources: BTreeMap<String, String>,
}

impl PipelineBundle {
    pub fn new(
        model: TrainedModel,
        scaler: Scaler,
        layout: FeatureLayout,
        as_of: DateTime<Utc>,
        factver_k: usize,
    ) -> Self {
        PipelineBundle {
            format: BUNDLE_FORMAT.to_string(),
            major: BUNDLE_MAJOR,
            model,
            scaler,
            layout,
            as_of,
            factver_k,
            embedding_model_id: None,
            resources: BTreeMap::new(),
        }
    }

    pub fn families(&self) -> Vec<Family> {
        self.layout.families()
    }

    pub fn requires(&self, family: Family) -> bool {
        self.families().contains(&family)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec(self).expect("bundle serialization cannot fail");
        bytes.push(b'\n');
        bytes
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PipelineError> {
        let b: PipelineBundle = serde_json::from_slice(bytes).map_err(|e| PipelineError::Corrupt(e.to_string()))?;
        if b.format != BUNDLE_FORMAT || b.major != BUNDLE_MAJOR {
            return Err(PipelineError::Corrupt(format!("unsupported format {} v{}", b.format, b.major)));
        }
        if b.layout.hash() != b.model.layout_hash || b.scaler.width() != b.layout.len() {
            return Err(PipelineError::Corrupt("model, scaler and layout disagree".into()));
        }
        Ok(b)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes())
            .map_err(|source| PipelineError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|source| PipelineError::Io { path: path.display().to_string(), source })?;
        Self::from_bytes(&bytes)
    }

    pub fn fingerprint(&self) -> String {
        crate::fingerprint::digest_bytes(&self.to_bytes())
    }
}

/// Body of a prediction request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyRequest {
    pub text: String,
    #[serde(default)]
    pub user: Option<UserProfile>,
    #[serde(default)]
    pub lang: Option<Lang>,
    #[serde(default)]
    pub retweet_count: Option<u64>,
    #[serde(default)]
    pub favourite_count: Option<u64>,
}

impl ClassifyRequest {
    pub fn text(text: impl Into<String>) -> Self {
        ClassifyRequest { text: text.into(), user: None, lang: None, retweet_count: None, favourite_count: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureValue {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    /// `fake` or `non_fake`.
    pub label: String,
    pub p_fake: f64,
    /// Unscaled hand-crafted feature values; embedding entries are omitted.
    pub feature_breakdown: Vec<FeatureValue>,
    /// Width of the embedding used, 0 when the model has no TextEmbd family.
    pub embedding_dim: usize,
    pub factver_titles: Vec<MatchedTitle>,
    pub model_fingerprint: String,
}

/// Resources loaded next to a bundle.
#[derive(Debug, Clone, Copy, Default)]
pub struct Resources<'a> {
    pub embeddings: Option<&'a EmbeddingStore>,
    pub trusted: Option<&'a TrustedIndex>,
    pub bias: Option<&'a BiasModel>,
}

/// Classify with an already resolved embedding (ignored when the model
/// has no TextEmbd family).
pub fn classify_with_embedding(
    bundle: &PipelineBundle,
    fingerprint: &str,
    res: &Resources<'_>,
    req: &ClassifyRequest,
    embedding: Option<Vec<f64>>,
) -> Result<Verdict, PipelineError> {
    if preprocess_text(&req.text).is_empty() {
        return Err(PipelineError::EmptyInput);
    }
    let families = bundle.families();
    if families.contains(&Family::TweetUser) && req.user.is_none() {
        return Err(PipelineError::MissingFamily(Family::TweetUser));
    }
    let ctx = FeatureContext {
        as_of: bundle.as_of,
        factver_k: bundle.factver_k,
        trusted: res.trusted,
        bias: res.bias,
        neutral_bias: true,
    };
    let tweet = TweetInput {
        text: &req.text,
        retweet_count: req.retweet_count.unwrap_or(0),
        favourite_count: req.favourite_count.unwrap_or(0),
        user: req.user.as_ref(),
    };
    let (parts, fv) = build_parts(&families, &ctx, tweet, embedding)?;
    let layout = Arc::new(bundle.layout.clone());
    let raw = assemble_with_layout(&layout, &parts)?;
    let scaled = bundle.scaler.apply(&raw)?;
    let probs = bundle.model.predict_proba(&scaled)?;
    let feature_breakdown = raw
        .named()
        .filter(|(name, _)| !name.starts_with("TextEmbd["))
        .map(|(name, value)| FeatureValue { name: name.to_string(), value })
        .collect();
    Ok(Verdict {
        label: decide(probs).as_str().to_string(),
        p_fake: probs[1],
        feature_breakdown,
        embedding_dim: layout.embedding_dim(),
        factver_titles: fv.map(|s| s.matched_titles).unwrap_or_default(),
        model_fingerprint: fingerprint.to_string(),
    })
}

/// Classify a text, resolving its embedding from the store first and the
/// provider second.
pub async fn classify_text(
    bundle: &PipelineBundle,
    fingerprint: &str,
    res: &Resources<'_>,
    provider: Option<&EmbeddingProviderClient>,
    req: &ClassifyRequest,
) -> Result<Verdict, PipelineError> {
    let clean = preprocess_text(&req.text);
    if clean.is_empty() {
        return Err(PipelineError::EmptyInput);
    }
    let embedding = if bundle.requires(Family::TextEmbd) {
        let stored = res.embeddings.and_then(|s| s.get(&text_key(&req.text))).map(<[f64]>::to_vec);
        match (stored, provider) {
            (Some(v), _) => Some(v),
            (None, Some(client)) => client.fetch(&[clean]).await?.pop(),
            (None, None) => return Err(PipelineError::MissingEmbedding(req.text.clone())),
        }
    } else {
        None
    };
    classify_with_embedding(bundle, fingerprint, res, req, embedding)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::mlp::Network;
    use crate::classifiers::{ClassifierKind, ModelBody, TrainConfig, FORMAT_VERSION, MODEL_FORMAT};
    use chrono::TimeZone;
    use ndarray::Array2;

    fn zero_head_bundle(families: &[Family], dim: usize) -> PipelineBundle {
        let layout = FeatureLayout::for_families(families, dim);
        let width = layout.len();
        let model = TrainedModel {
            format: MODEL_FORMAT.into(),
            version: FORMAT_VERSION,
            config: TrainConfig::new(ClassifierKind::SoftmaxHead, 0),
            config_fingerprint: String::new(),
            layout_hash: layout.hash(),
            input_width: width,
            body: ModelBody::SoftmaxHead(Network::zeros(&[width, 2])),
        };
        let scaler = Scaler::fit(&Array2::from_shape_fn((2, width), |(i, j)| (i + j) as f64)).unwrap();
        PipelineBundle::new(model, scaler, layout, Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap(), 5)
    }

    #[test]
    fn user_family_without_profile_is_rejected() {
        let b = zero_head_bundle(&[Family::TweetText, Family::TweetUser], 0);
        let err = classify_with_embedding(&b, "fp", &Resources::default(), &ClassifyRequest::text("hello"), None)
            .unwrap_err();
        assert!(matches!(err, PipelineError::MissingFamily(Family::TweetUser)));
        assert_eq!(err.to_string(), "missing feature family: tweetuser");
    }

    #[test]
    fn empty_after_preprocessing_is_rejected() {
        let b = zero_head_bundle(&[Family::TweetText], 0);
        let err =
            classify_with_embedding(&b, "fp", &Resources::default(), &ClassifyRequest::text("#a @b http://x"), None);
        assert!(matches!(err, Err(PipelineError::EmptyInput)));
    }

    #[test]
    fn verdict_from_zero_head() {
        let b = zero_head_bundle(&[Family::TweetText, Family::Bias], 0);
        let v = classify_with_embedding(&b, "fp", &Resources::default(), &ClassifyRequest::text("Is it TRUE?"), None)
            .unwrap();
        assert_eq!(v.p_fake, 0.5);
        assert_eq!(v.label, "non_fake");
        let bias = v.feature_breakdown.iter().find(|f| f.name == "Bias.score").unwrap();
        assert_eq!(bias.value, NEUTRAL_BIAS);
        let upper = v.feature_breakdown.iter().find(|f| f.name == "tweettext.n_upper").unwrap();
        assert_eq!(upper.value, 5.0);
    }

    #[test]
    fn embedding_width_checked() {
        let b = zero_head_bundle(&[Family::TextEmbd], 4);
        let err =
            classify_with_embedding(&b, "fp", &Resources::default(), &ClassifyRequest::text("x"), Some(vec![0.0; 3]));
        assert!(matches!(err, Err(PipelineError::Feature(FeatureError::Dimension { expected: 4, got: 3 }))));
    }

    #[test]
    fn bundle_round_trip() {
        let b = zero_head_bundle(&[Family::TextEmbd, Family::TweetText], 3);
        assert_eq!(PipelineBundle::from_bytes(&b.to_bytes()).unwrap(), b);
        let mut broken = b.clone();
        broken.layout = FeatureLayout::for_families(&[Family::Bias], 0);
        assert!(matches!(PipelineBundle::from_bytes(&broken.to_bytes()), Err(PipelineError::Corrupt(_))));
    }

    #[test]
    fn request_rejects_unknown_fields() {
        assert!(serde_json::from_str::<ClassifyRequest>(r#"{"text":"a","txet":"b"}"#).is_err());
        let r: ClassifyRequest = serde_json::from_str(r#"{"text":"a","lang":"hi"}"#).unwrap();
        assert_eq!(r.lang, Some(Lang::Hi));
    }
}
