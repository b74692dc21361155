//! Fact-verification score.
//!
//! A tweet is compared against titles of documents from trusted sources:
//! the score is the mean normalized edit distance between the tweet text
//! and the best-matching titles, so lower means better corroboration. The
//! document collection is an offline [`TrustedIndex`]; any other backend can
//! be plugged in through [`TitleSearch`].

mod levenshtein;

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use levenshtein::{levenshtein, normalized_distance};

use crate::corpus::preprocess_text;

/// Number of titles averaged when the caller does not say otherwise.
pub const DEFAULT_K: usize = 10;

#[derive(Debug, Error)]
pub enum FactVerError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
}

/// A search result from a trusted source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrustedDocument {
    pub title: String,
    pub url: String,
}

/// Anything that can return trusted titles for a query.
pub trait TitleSearch {
    /// Up to `k` best hits for an already preprocessed query, best first.
    fn search(&self, query: &str, k: usize) -> Vec<TrustedDocument>;
}

/// Counts from building an index.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IndexStats {
    pub kept: usize,
    pub off_allowlist: usize,
    pub empty_title: usize,
}

/// Offline collection of titles restricted to allowlisted domains.
#[derive(Debug, Clone, Default)]
pub struct TrustedIndex {
    documents: Vec<TrustedDocument>,
    tokens: Vec<HashSet<String>>,
    allowlist: BTreeSet<String>,
}

fn tokenize(text: &str) -> HashSet<String> {
    text.split_whitespace().map(str::to_string).collect()
}

fn jaccard(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    let inter = a.intersection(b).count();
    if inter == 0 {
        return 0.0;
    }
    inter as f64 / (a.len() + b.len() - inter) as f64
}

/// Host of `url`, lowercased, with a missing scheme tolerated.
fn host_of(url: &str) -> Option<String> {
    let parsed = url::Url::parse(url).or_else(|_| url::Url::parse(&format!("https://{url}"))).ok()?;
    parsed.host_str().map(|h| h.trim_end_matches('.').to_ascii_lowercase())
}

impl TrustedIndex {
    /// Keep only documents with a non-empty title whose host is an
    /// allowlisted domain or one of its subdomains.
    pub fn new(documents: Vec<TrustedDocument>, allowlist: impl IntoIterator<Item = String>) -> (Self, IndexStats) {
        let allowlist: BTreeSet<String> = allowlist
            .into_iter()
            .map(|d| d.trim().trim_end_matches('.').to_ascii_lowercase())
            .filter(|d| !d.is_empty())
            .collect();
        let mut index = TrustedIndex { allowlist, ..Default::default() };
        let mut stats = IndexStats::default();
        for doc in documents {
            if doc.title.trim().is_empty() {
                stats.empty_title += 1;
            } else if !index.is_allowed(&doc.url) {
                stats.off_allowlist += 1;
            } else {
                stats.kept += 1;
                index.tokens.push(tokenize(&preprocess_text(&doc.title)));
                index.documents.push(doc);
            }
        }
        (index, stats)
    }

    /// Read a line-delimited `{title, url}` index file and a one-domain-per-line
    /// allowlist (blank lines and `#` comments ignored).
    pub fn load(
        index_path: impl AsRef<Path>,
        allowlist_path: impl AsRef<Path>,
    ) -> Result<(Self, IndexStats), FactVerError> {
        let read = |p: &Path| {
            fs::read_to_string(p).map_err(|source| FactVerError::Io { path: p.display().to_string(), source })
        };
        let index_path = index_path.as_ref();
        let mut documents = Vec::new();
        for (i, line) in read(index_path)?.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let doc: TrustedDocument = serde_json::from_str(line).map_err(|e| FactVerError::Parse {
                path: index_path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
            documents.push(doc);
        }
        let allowlist = read(allowlist_path.as_ref())?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect::<Vec<_>>();
        Ok(Self::new(documents, allowlist))
    }

    pub fn is_allowed(&self, url: &str) -> bool {
        let Some(host) = host_of(url) else { return false };
        self.allowlist
            .iter()
            .any(|d| host == *d || host.strip_suffix(d.as_str()).is_some_and(|rest| rest.ends_with('.')))
    }

    pub fn documents(&self) -> &[TrustedDocument] {
        &self.documents
    }

    pub fn allowlist(&self) -> &BTreeSet<String> {
        &self.allowlist
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Content digest over documents and allowlist.
    pub fn digest(&self) -> String {
        crate::fingerprint::digest_json(&(&self.documents, &self.allowlist))
    }
}

impl TitleSearch for TrustedIndex {
    /// Rank by token-set Jaccard similarity; documents sharing no token are
    /// not hits. Ties keep index order.
    fn search(&self, query: &str, k: usize) -> Vec<TrustedDocument> {
        let q = tokenize(query);
        let mut scored: Vec<(usize, f64)> =
            self.tokens.iter().enumerate().map(|(i, t)| (i, jaccard(&q, t))).filter(|&(_, s)| s > 0.0).collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.into_iter().take(k).map(|(i, _)| self.documents[i].clone()).collect()
    }
}

/// Titles of the top-`k` hits for `query`.
pub fn retrieve_titles(query: &str, idx: &impl TitleSearch, k: usize) -> Vec<String> {
    idx.search(query, k).into_iter().map(|d| d.title).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedTitle {
    pub title: String,
    pub url: String,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactVerScore {
    /// Mean normalized distance in `[0, 1]`.
    pub score: f64,
    pub k_used: usize,
    pub matched_titles: Vec<MatchedTitle>,
}

/// Mean normalized edit distance between `text` and the retrieved titles.
///
/// `text` is expected to be preprocessed; titles are preprocessed before
/// comparison. With no hits the score is 1.0.
pub fn factver_score(text: &str, idx: &impl TitleSearch, k: usize) -> FactVerScore {
    let k = k.max(1);
    let matched_titles: Vec<MatchedTitle> = idx
        .search(text, k)
        .into_iter()
        .map(|d| {
            let distance = normalized_distance(text, &preprocess_text(&d.title));
            MatchedTitle { title: d.title, url: d.url, distance }
        })
        .collect();
    let k_used = matched_titles.len();
    let score = if k_used == 0 { 1.0 } else { matched_titles.iter().map(|m| m.distance).sum::<f64>() / k_used as f64 };
    FactVerScore { score, k_used, matched_titles }
}
