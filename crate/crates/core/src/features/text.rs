use serde::{Deserialize, Serialize};

use crate::corpus::TweetRecord;

/// Tweet-level counts, computed on the raw (un-preprocessed) text.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextFeatures {
    pub retweet_count: u64,
    pub favourite_count: u64,
    pub n_upper: u64,
    pub n_question: u64,
    pub n_exclaim: u64,
}

impl TextFeatures {
    pub const NAMES: [&'static str; 5] = ["retweet_count", "favourite_count", "n_upper", "n_question", "n_exclaim"];

    pub fn values(&self) -> [f64; 5] {
        [
            self.retweet_count as f64,
            self.favourite_count as f64,
            self.n_upper as f64,
            self.n_question as f64,
            self.n_exclaim as f64,
        ]
    }

    /// Counts for a bare text with no engagement data.
    pub fn from_text(text: &str) -> Self {
        let mut f = TextFeatures::default();
        for c in text.chars() {
            match c {
                '?' => f.n_question += 1,
                '!' => f.n_exclaim += 1,
                c if c.is_uppercase() => f.n_upper += 1,
                _ => {}
            }
        }
        f
    }
}

pub fn extract_text_features(rec: &TweetRecord) -> TextFeatures {
    TextFeatures {
        retweet_count: rec.retweet_count.unwrap_or(0),
        favourite_count: rec.favourite_count.unwrap_or(0),
        ..TextFeatures::from_text(&rec.text)
    }
}
