//! Tweet dataset: record schema, loading, preprocessing and splitting.
//!
//! Dataset files are UTF-8, one JSON object per line. Required keys are
//! `id`, `text`, `lang` and `label`; `retweet_count`, `favourite_count`,
//! `source`, `origin_id`, `user` and `schema` are optional. When a line
//! carries `schema` it must match the version the caller asked for.

mod csv_import;
mod preprocess;
mod record;
mod split;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde_json::Value;
use thiserror::Error;

pub use csv_import::convert_csv;
pub use preprocess::{preprocess_text, url_pattern};
pub use record::{Label, Lang, Source, TweetRecord, UserProfile};
pub use split::{split_dataset, Split};

/// Current dataset schema tag.
pub const SCHEMA_V1: &str = "tweets/v1";

const REQUIRED_KEYS: [&str; 4] = ["id", "text", "lang", "label"];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{} malformed line(s):\n{}", .0.len(), LineErrors(.0))]
    InvalidLines(Vec<LineError>),
    #[error("unknown language tag `{0}`")]
    UnknownLang(String),
    #[error("dataset is empty")]
    Empty,
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("stratum ({lang}, {label}) has {count} record(s); at least 2 are needed to stratify")]
    StratumTooSmall { lang: Lang, label: Label, count: usize },
    #[error("csv conversion failed: {0}")]
    Csv(String),
}

/// One problem found on one line of a dataset file.
#[derive(Debug, Clone, PartialEq)]
pub struct LineError {
    /// 1-based line number.
    pub line: usize,
    pub kind: LineErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LineErrorKind {
    Json(String),
    MissingField(&'static str),
    UnknownLabel(String),
    SchemaMismatch { expected: String, found: String },
    DuplicateId(String),
    Invalid(String),
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: ", self.line)?;
        match &self.kind {
            LineErrorKind::Json(msg) => write!(f, "not a JSON object ({msg})"),
            LineErrorKind::MissingField(field) => write!(f, "missing required field `{field}`"),
            LineErrorKind::UnknownLabel(v) => write!(f, "unknown value {v} for field `label`"),
            LineErrorKind::SchemaMismatch { expected, found } => {
                write!(f, "schema version `{found}` does not match expected `{expected}`")
            }
            LineErrorKind::DuplicateId(id) => write!(f, "duplicate id `{id}`"),
            LineErrorKind::Invalid(msg) => f.write_str(msg),
        }
    }
}

struct LineErrors<'a>(&'a [LineError]);

impl fmt::Display for LineErrors<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  {e}")?;
        }
        Ok(())
    }
}

/// Validated, immutable collection of tweets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<TweetRecord>,
    tallies: BTreeMap<(Lang, Label), usize>,
}

impl Dataset {
    /// Build a dataset from records, enforcing record invariants and unique ids.
    pub fn from_records(records: Vec<TweetRecord>) -> Result<Self, CorpusError> {
        let mut errors = Vec::new();
        let mut seen = HashSet::new();
        for (i, rec) in records.iter().enumerate() {
            if let Err(msg) = rec.validate() {
                errors.push(LineError { line: i + 1, kind: LineErrorKind::Invalid(msg) });
            }
            if !seen.insert(rec.id.as_str()) {
                errors.push(LineError { line: i + 1, kind: LineErrorKind::DuplicateId(rec.id.clone()) });
            }
        }
        if !errors.is_empty() {
            return Err(CorpusError::InvalidLines(errors));
        }
        Ok(Self::new_unchecked(records))
    }

    fn new_unchecked(records: Vec<TweetRecord>) -> Self {
        let mut tallies = BTreeMap::new();
        for rec in &records {
            *tallies.entry((rec.lang, rec.label)).or_insert(0) += 1;
        }
        Dataset { records, tallies }
    }

    /// Subset that keeps the records selected by `keep`, in order.
    pub fn filter(&self, mut keep: impl FnMut(&TweetRecord) -> bool) -> Dataset {
        Self::new_unchecked(self.records.iter().filter(|r| keep(r)).cloned().collect())
    }

    pub fn records(&self) -> &[TweetRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Per-(language, label) record counts.
    pub fn tallies(&self) -> &BTreeMap<(Lang, Label), usize> {
        &self.tallies
    }

    pub fn count(&self, lang: Lang, label: Label) -> usize {
        self.tallies.get(&(lang, label)).copied().unwrap_or(0)
    }

    pub fn languages(&self) -> Vec<Lang> {
        let mut langs: Vec<Lang> = self.tallies.keys().map(|(l, _)| *l).collect();
        langs.dedup();
        langs
    }

    /// Serialize back to the line-delimited file format.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for rec in &self.records {
            out.push_str(&serde_json::to_string(rec).expect("record serialization cannot fail"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        let path = path.as_ref();
        fs::write(path, self.to_jsonl()).map_err(|source| CorpusError::Io { path: path.display().to_string(), source })
    }

    /// Content digest of the serialized dataset.
    pub fn digest(&self) -> String {
        crate::fingerprint::digest_bytes(self.to_jsonl().as_bytes())
    }

    /// Language/label count table in the same shape as the usual dataset
    /// statistics table.
    pub fn stats_table(&self) -> String {
        let mut out = String::from("Language\tFake\tNon-Fake\n");
        let (mut fake, mut non_fake) = (0, 0);
        for lang in self.languages() {
            let f = self.count(lang, Label::Fake);
            let n = self.count(lang, Label::NonFake);
            fake += f;
            non_fake += n;
            out.push_str(&format!("{}\t{f}\t{n}\n", lang.name()));
        }
        out.push_str(&format!("Total\t{fake}\t{non_fake}\n"));
        out
    }
}

/// Load and validate a dataset file.
///
/// Every line is checked; all problems are reported together with their
/// line numbers. Blank lines are ignored.
pub fn load_dataset(path: impl AsRef<Path>, schema: &str) -> Result<Dataset, CorpusError> {
    let path = path.as_ref();
    let text =
        fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.display().to_string(), source })?;
    parse_dataset(&text, schema)
}

/// Parse dataset content already held in memory.
pub fn parse_dataset(text: &str, schema: &str) -> Result<Dataset, CorpusError> {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut seen = HashSet::new();

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(line, schema) {
            Ok(rec) => {
                if !seen.insert(rec.id.clone()) {
                    errors.push(LineError { line: line_no, kind: LineErrorKind::DuplicateId(rec.id) });
                } else {
                    records.push(rec);
                }
            }
            Err(kind) => errors.push(LineError { line: line_no, kind }),
        }
    }

    if !errors.is_empty() {
        return Err(CorpusError::InvalidLines(errors));
    }
    Ok(Dataset::new_unchecked(records))
}

fn parse_line(line: &str, schema: &str) -> Result<TweetRecord, LineErrorKind> {
    let value: Value = serde_json::from_str(line).map_err(|e| LineErrorKind::Json(e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| LineErrorKind::Json("expected an object".into()))?;

    if let Some(found) = obj.get("schema") {
        let found = found.as_str().map(str::to_string).unwrap_or_else(|| found.to_string());
        if found != schema {
            return Err(LineErrorKind::SchemaMismatch { expected: schema.to_string(), found });
        }
    }
    for key in REQUIRED_KEYS {
        if !obj.contains_key(key) {
            return Err(LineErrorKind::MissingField(key));
        }
    }
    let label = &obj["label"];
    if !matches!(label.as_u64(), Some(0 | 1)) {
        return Err(LineErrorKind::UnknownLabel(label.to_string()));
    }

    let rec: TweetRecord = serde_json::from_value(value).map_err(|e| LineErrorKind::Invalid(e.to_string()))?;
    rec.validate().map_err(LineErrorKind::Invalid)?;
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(id: &str, lang: &str, label: u8) -> String {
        format!(r#"{{"id":"{id}","text":"tweet {id}","lang":"{lang}","label":{label}}}"#)
    }

    #[test]
    fn empty_input_gives_empty_dataset() {
        let ds = parse_dataset("", SCHEMA_V1).unwrap();
        assert!(ds.is_empty());
        assert!(ds.tallies().is_empty());
        assert_eq!(ds.count(Lang::En, Label::Fake), 0);
    }

    #[test]
    fn missing_label_names_line_and_field() {
        let err = parse_dataset(r#"{"id":"1","text":"x","lang":"en"}"#, SCHEMA_V1).unwrap_err();
        match &err {
            CorpusError::InvalidLines(errs) => {
                assert_eq!(errs.len(), 1);
                assert_eq!(errs[0].line, 1);
                assert_eq!(errs[0].kind, LineErrorKind::MissingField("label"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let msg = err.to_string();
        assert!(msg.contains("line 1") && msg.contains("`label`"), "{msg}");
    }

    #[test]
    fn tallies_by_language_and_label() {
        let text = [line("a", "hi", 1), line("b", "hi", 0), line("c", "hi", 0), line("d", "bn", 1)].join("\n");
        let ds = parse_dataset(&text, SCHEMA_V1).unwrap();
        assert_eq!(ds.len(), 4);
        assert_eq!(ds.count(Lang::Hi, Label::Fake), 1);
        assert_eq!(ds.count(Lang::Hi, Label::NonFake), 2);
        assert_eq!(ds.count(Lang::Bn, Label::Fake), 1);
        assert_eq!(ds.tallies().values().sum::<usize>(), ds.len());
    }

    #[test]
    fn rejects_duplicates_bad_labels_and_schema() {
        let text = [
            line("a", "en", 1),
            line("a", "en", 0),
            line("b", "en", 2),
            r#"{"schema":"tweets/v2","id":"c","text":"t","lang":"en","label":1}"#.to_string(),
            line("d", "fr", 1),
            r#"{"id":"e","text":"   ","lang":"en","label":1}"#.to_string(),
            "not json".to_string(),
        ]
        .join("\n");
        let err = parse_dataset(&text, SCHEMA_V1).unwrap_err();
        let CorpusError::InvalidLines(errs) = err else { panic!() };
        let lines: Vec<usize> = errs.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![2, 3, 4, 5, 6, 7]);
        assert!(matches!(errs[0].kind, LineErrorKind::DuplicateId(_)));
        assert!(matches!(errs[1].kind, LineErrorKind::UnknownLabel(_)));
        assert!(matches!(errs[2].kind, LineErrorKind::SchemaMismatch { .. }));
        assert!(matches!(errs[3].kind, LineErrorKind::Invalid(_)));
        assert!(matches!(errs[4].kind, LineErrorKind::Invalid(_)));
        assert!(matches!(errs[5].kind, LineErrorKind::Json(_)));
    }

    #[test]
    fn negative_counts_are_rejected() {
        let text = r#"{"id":"a","text":"t","lang":"en","label":1,"retweet_count":-3}"#;
        assert!(parse_dataset(text, SCHEMA_V1).is_err());
    }

    #[test]
    fn user_timestamps_must_be_ordered() {
        let text = r#"{"id":"a","text":"t","lang":"en","label":1,"user":{"handle":"h","real_name":"r","description":"","followers_count":1,"friends_count":1,"listed_count":0,"favourites_count":0,"statuses_count":3,"geo_enabled":false,"verified":false,"protected":false,"created_at":"2020-05-01T00:00:00Z","latest_tweet_at":"2020-04-01T00:00:00Z"}}"#;
        let err = parse_dataset(text, SCHEMA_V1).unwrap_err();
        assert!(err.to_string().contains("latest_tweet_at"));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_dataset("/definitely/not/here.jsonl", SCHEMA_V1).unwrap_err();
        assert!(matches!(err, CorpusError::Io { .. }));
    }
}
