use std::sync::OnceLock;

use regex::Regex;

/// URL pattern: an `http://`, `https://` or `www.` prefix up to the next
/// whitespace. Matching is case-insensitive so that lowercasing cannot
/// reveal a new match.
pub fn url_pattern() -> &'static Regex {
    static URL: OnceLock<Regex> = OnceLock::new();
    URL.get_or_init(|| Regex::new(r"(?i)(?:https?://|www\.)\S*").expect("static regex"))
}

/// Normalize tweet text: drop URLs, hashtags and user mentions, lowercase,
/// collapse whitespace.
///
/// Scripts without case (Devanagari, Bengali) pass through unchanged apart
/// from token removal.
pub fn preprocess_text(raw: &str) -> String {
    let without_urls = url_pattern().replace_all(raw, " ");
    let mut out = String::with_capacity(without_urls.len());
    for token in without_urls.split_whitespace() {
        if token.starts_with('#') || token.starts_with('@') {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(token.chars().flat_map(char::to_lowercase));
    }
    out
}
