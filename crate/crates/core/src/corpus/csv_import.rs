use std::collections::HashMap;
use std::io::Read;

use chrono::{DateTime, Utc};

use super::{CorpusError, Dataset, Label, Lang, LineError, LineErrorKind, Source, TweetRecord, UserProfile};

/// Convert the released CSV layout into dataset records.
///
/// Recognised columns (case-insensitive): `id` (or `tweet_id`), `text` (or
/// `tweet`), `lang`, `label`, `retweet_count`, `favourite_count` (or
/// `favorite_count`), `source`, `origin_id`, and user columns prefixed with
/// `user_` (`user_handle`, `user_real_name`, `user_description`,
/// `user_official_url`, the five counts, the three flags, `user_created_at`,
/// `user_latest_tweet_at`). A user profile is attached when `user_handle`
/// is non-empty. `default_lang` fills rows without a `lang` column.
///
/// Labels accept `1`/`0`, `fake`/`real`, `fake`/`non_fake` and `true`/`false`.
/// Timestamps accept RFC 3339 or the platform's `Wed Oct 10 20:19:24 +0000 2018` form.
pub fn convert_csv<R: Read>(reader: R, default_lang: Option<Lang>) -> Result<Dataset, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers = rdr.headers().map_err(|e| CorpusError::Csv(e.to_string()))?.clone();
    let columns: HashMap<String, usize> =
        headers.iter().enumerate().map(|(i, h)| (h.trim().to_ascii_lowercase(), i)).collect();

    let col = |names: &[&str]| names.iter().find_map(|n| columns.get(*n).copied());
    let id_col = col(&["id", "tweet_id"]).ok_or_else(|| CorpusError::Csv("missing `id` column".into()))?;
    let text_col = col(&["text", "tweet"]).ok_or_else(|| CorpusError::Csv("missing `text` column".into()))?;
    let label_col = col(&["label"]).ok_or_else(|| CorpusError::Csv("missing `label` column".into()))?;
    let lang_col = col(&["lang", "language"]);
    if lang_col.is_none() && default_lang.is_none() {
        return Err(CorpusError::Csv("no `lang` column and no default language given".into()));
    }

    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        // Line 1 is the header.
        let line = idx + 2;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                errors.push(LineError { line, kind: LineErrorKind::Json(e.to_string()) });
                continue;
            }
        };
        let get = |names: &[&str]| col(names).and_then(|i| row.get(i)).map(str::trim).filter(|s| !s.is_empty());
        let result = (|| -> Result<TweetRecord, LineErrorKind> {
            let label = parse_label(row.get(label_col).unwrap_or("").trim())?;
            let lang = match lang_col.and_then(|i| row.get(i)).map(str::trim).filter(|s| !s.is_empty()) {
                Some(tag) => tag.parse().map_err(|e: CorpusError| LineErrorKind::Invalid(e.to_string()))?,
                None => default_lang.ok_or(LineErrorKind::MissingField("lang"))?,
            };
            let mut rec =
                TweetRecord::new(row.get(id_col).unwrap_or("").trim(), row.get(text_col).unwrap_or(""), lang, label);
            rec.retweet_count = parse_opt_count(get(&["retweet_count"]), "retweet_count")?;
            rec.favourite_count = parse_opt_count(get(&["favourite_count", "favorite_count"]), "favourite_count")?;
            rec.source = match get(&["source"]) {
                None => None,
                Some(s) if s.eq_ignore_ascii_case("original") => Some(Source::Original),
                Some(s) if s.eq_ignore_ascii_case("translated") => Some(Source::Translated),
                Some(s) => return Err(LineErrorKind::Invalid(format!("unknown source `{s}`"))),
            };
            rec.origin_id = get(&["origin_id"]).map(str::to_string);
            if let Some(handle) = get(&["user_handle", "user_screen_name"]) {
                let count = |name: &'static str| -> Result<u64, LineErrorKind> {
                    Ok(parse_opt_count(get(&[name]), name)?.unwrap_or(0))
                };
                let flag = |name: &'static str| parse_flag(get(&[name]), name);
                let created_at = get(&["user_created_at"])
                    .ok_or(LineErrorKind::MissingField("user_created_at"))
                    .and_then(|s| parse_time(s, "user_created_at"))?;
                rec.user = Some(UserProfile {
                    handle: handle.to_string(),
                    real_name: get(&["user_real_name", "user_name"]).unwrap_or("").to_string(),
                    description: get(&["user_description"]).unwrap_or("").to_string(),
                    official_url: get(&["user_official_url", "user_url"]).map(str::to_string),
                    followers_count: count("user_followers_count")?,
                    friends_count: count("user_friends_count")?,
                    listed_count: count("user_listed_count")?,
                    favourites_count: count("user_favourites_count")?,
                    statuses_count: count("user_statuses_count")?,
                    geo_enabled: flag("user_geo_enabled")?,
                    verified: flag("user_verified")?,
                    protected: flag("user_protected")?,
                    created_at,
                    latest_tweet_at: get(&["user_latest_tweet_at"])
                        .map(|s| parse_time(s, "user_latest_tweet_at"))
                        .transpose()?,
                });
            }
            rec.validate().map_err(LineErrorKind::Invalid)?;
            Ok(rec)
        })();
        match result {
            Ok(rec) => records.push(rec),
            Err(kind) => errors.push(LineError { line, kind }),
        }
    }

    if !errors.is_empty() {
        return Err(CorpusError::InvalidLines(errors));
    }
    Dataset::from_records(records)
}

fn parse_label(raw: &str) -> Result<Label, LineErrorKind> {
    match raw.to_ascii_lowercase().as_str() {
        "1" | "fake" | "true" => Ok(Label::Fake),
        "0" | "real" | "non_fake" | "non-fake" | "false" => Ok(Label::NonFake),
        "" => Err(LineErrorKind::MissingField("label")),
        _ => Err(LineErrorKind::UnknownLabel(raw.to_string())),
    }
}

fn parse_opt_count(raw: Option<&str>, field: &str) -> Result<Option<u64>, LineErrorKind> {
    raw.map(|s| {
        // Some exports write integral counts as floats ("12.0").
        s.parse::<u64>().or_else(|_| match s.parse::<f64>() {
            Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64 => Ok(v as u64),
            _ => Err(LineErrorKind::Invalid(format!("field `{field}`: `{s}` is not a non-negative count"))),
        })
    })
    .transpose()
}

fn parse_flag(raw: Option<&str>, field: &str) -> Result<bool, LineErrorKind> {
    match raw.map(str::to_ascii_lowercase).as_deref() {
        None | Some("0") | Some("false") => Ok(false),
        Some("1") | Some("true") => Ok(true),
        Some(other) => Err(LineErrorKind::Invalid(format!("field `{field}`: `{other}` is not a boolean"))),
    }
}

fn parse_time(raw: &str, field: &str) -> Result<DateTime<Utc>, LineErrorKind> {
    DateTime::parse_from_rfc3339(raw)
        .or_else(|_| DateTime::parse_from_str(raw, "%a %b %d %H:%M:%S %z %Y"))
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| LineErrorKind::Invalid(format!("field `{field}`: {e}")))
}
