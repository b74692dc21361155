use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use unicode_normalization::UnicodeNormalization;

use super::CorpusError;

/// Language tag of a tweet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lang {
    En,
    Hi,
    Bn,
}

impl Lang {
    pub const ALL: [Lang; 3] = [Lang::En, Lang::Hi, Lang::Bn];

    pub fn as_str(self) -> &'static str {
        match self {
            Lang::En => "en",
            Lang::Hi => "hi",
            Lang::Bn => "bn",
        }
    }

    /// Human-readable language name, used in report tables.
    pub fn name(self) -> &'static str {
        match self {
            Lang::En => "English",
            Lang::Hi => "Hindi",
            Lang::Bn => "Bengali",
        }
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Lang {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "en" | "english" => Ok(Lang::En),
            "hi" | "hindi" => Ok(Lang::Hi),
            "bn" | "bengali" => Ok(Lang::Bn),
            other => Err(CorpusError::UnknownLang(other.to_string())),
        }
    }
}

/// Binary class label. Fake is the positive class throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    NonFake,
    Fake,
}

impl Label {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Label::NonFake),
            1 => Some(Label::Fake),
            _ => None,
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Label::NonFake => 0,
            Label::Fake => 1,
        }
    }

    pub fn as_index(self) -> usize {
        self.as_u8() as usize
    }

    pub fn is_fake(self) -> bool {
        self == Label::Fake
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::NonFake => "non_fake",
            Label::Fake => "fake",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.as_u8())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = u8::deserialize(deserializer)?;
        Label::from_u8(v).ok_or_else(|| serde::de::Error::custom(format!("label must be 0 or 1, got {v}")))
    }
}

/// Provenance of a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    #[default]
    Original,
    Translated,
}

/// Author profile attached to a tweet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub handle: String,
    pub real_name: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub official_url: Option<String>,
    pub followers_count: u64,
    pub friends_count: u64,
    pub listed_count: u64,
    pub favourites_count: u64,
    pub statuses_count: u64,
    pub geo_enabled: bool,
    pub verified: bool,
    pub protected: bool,
    pub created_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latest_tweet_at: Option<DateTime<Utc>>,
}

impl UserProfile {
    pub fn validate(&self) -> Result<(), String> {
        if let Some(latest) = self.latest_tweet_at {
            if latest < self.created_at {
                return Err(format!("user.latest_tweet_at ({latest}) precedes user.created_at ({})", self.created_at));
            }
        }
        Ok(())
    }
}

/// One tweet as stored in a dataset file.
///
/// Optional keys stay `Option` so that a loaded record serializes back to
/// exactly the keys it was read with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub id: String,
    pub text: String,
    pub lang: Lang,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retweet_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub favourite_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Source>,
    /// Id of the tweet this record was translated from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user: Option<UserProfile>,
}

impl TweetRecord {
    /// Minimal record with only the required keys set.
    pub fn new(id: impl Into<String>, text: impl Into<String>, lang: Lang, label: Label) -> Self {
        TweetRecord {
            schema: None,
            id: id.into(),
            text: text.into(),
            lang,
            label,
            retweet_count: None,
            favourite_count: None,
            source: None,
            origin_id: None,
            user: None,
        }
    }

    pub fn source(&self) -> Source {
        self.source.unwrap_or_default()
    }

    /// Key used to keep translations of one tweet in the same partition.
    pub fn group_key(&self) -> &str {
        self.origin_id.as_deref().unwrap_or(&self.id)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("field `id` is empty".into());
        }
        let normalized: String = self.text.nfc().collect();
        if normalized.trim().is_empty() {
            return Err("field `text` is empty after Unicode normalization".into());
        }
        if let Some(user) = &self.user {
            user.validate()?;
        }
        Ok(())
    }
}
