//! Seeded synthetic fixtures: a trilingual tweet dataset with
//! label-conditioned Gaussian embeddings, 2-D blobs, a toy
//! offensive-language corpus and a small trusted-source index.
//!
//! Embedding means differ by label along the all-ones direction and by
//! language along directions orthogonal to it, so a single linear
//! separator works for every language, including one held out of training.

use std::fs;
use std::io;
use std::path::Path;

use chrono::{DateTime, Duration, TimeZone, Utc};
use ndarray::Array2;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::biaser::BiasExample;
use crate::corpus::{Dataset, Label, Lang, Source, TweetRecord, UserProfile};
use crate::embeddings::EmbeddingStore;
use crate::factver::{TrustedDocument, TrustedIndex};

pub const SYNTHETIC_DIM: usize = 16;
pub const SYNTHETIC_MODEL_ID: &str = "synthetic-gaussian-16";
/// Records per language; half fake, half non-fake.
pub const PER_LANGUAGE: usize = 100;
/// Label mean offset per embedding coordinate.
const LABEL_SHIFT: f64 = 1.25;
/// Language mean offset per embedding coordinate.
const LANG_SHIFT: f64 = 1.0;

/// Default reference time for the synthetic user profiles.
pub fn synthetic_as_of() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap()
}

fn lang_pattern(lang: Lang, j: usize) -> f64 {
    // Each pattern sums to zero over the 16 coordinates.
    let positive = match lang {
        Lang::En => j < SYNTHETIC_DIM / 2,
        Lang::Hi => j.is_multiple_of(2),
        Lang::Bn => j % 4 < 2,
    };
    if positive {
        1.0
    } else {
        -1.0
    }
}

fn words(lang: Lang, label: Label) -> &'static [&'static str] {
    match (lang, label) {
        (Lang::En, Label::Fake) => {
            &["miracle", "cure", "secret", "shocking", "banned", "garlic", "5g", "hoax", "BREAKING", "exposed"]
        }
        (Lang::En, Label::NonFake) => &[
            "ministry",
            "reports",
            "cases",
            "vaccination",
            "guidelines",
            "hospital",
            "update",
            "data",
            "centre",
            "official",
        ],
        (Lang::Hi, Label::Fake) => {
            &["चमत्कार", "इलाज", "गुप्त", "चौंकाने", "प्रतिबंधित", "लहसुन", "झूठ", "साजिश", "वायरल", "सच"]
        }
        (Lang::Hi, Label::NonFake) => {
            &["मंत्रालय", "रिपोर्ट", "मामले", "टीकाकरण", "दिशानिर्देश", "अस्पताल", "अपडेट", "आंकड़े", "केंद्र", "आधिकारिक"]
        }
        (Lang::Bn, Label::Fake) => {
            &["অলৌকিক", "নিরাময়", "গোপন", "চমকপ্রদ", "নিষিদ্ধ", "রসুন", "গুজব", "ষড়যন্ত্র", "ভাইরাল", "সত্য"]
        }
        (Lang::Bn, Label::NonFake) => {
            &["মন্ত্রক", "প্রতিবেদন", "সংক্রমণ", "টিকাকরণ", "নির্দেশিকা", "হাসপাতাল", "আপডেট", "তথ্য", "কেন্দ্র", "সরকারি"]
        }
    }
}

fn synthetic_text(lang: Lang, label: Label, i: usize, rng: &mut impl Rng) -> String {
    let pool = words(lang, label);
    let mut parts: Vec<String> = (0..5).map(|_| pool.choose(rng).expect("non-empty pool").to_string()).collect();
    parts.push(format!("#{}{i}", lang.as_str()));
    if label.is_fake() && rng.random_bool(0.5) {
        parts.push("!!".into());
    }
    parts.push(format!("n{i}"));
    parts.join(" ")
}

fn synthetic_user(label: Label, i: usize, rng: &mut impl Rng, as_of: DateTime<Utc>) -> UserProfile {
    let age_days: i64 = if label.is_fake() { rng.random_range(30..400) } else { rng.random_range(400..3000) };
    let created_at = as_of - Duration::days(age_days);
    let latest_tweet_at = Some(as_of - Duration::days(rng.random_range(0..age_days.min(30))));
    let (followers, friends) = if label.is_fake() {
        (rng.random_range(0..500), rng.random_range(100..2000))
    } else {
        (rng.random_range(1000..50000), rng.random_range(50..1000))
    };
    UserProfile {
        handle: format!("user{i}"),
        real_name: format!("User {i}"),
        description: if label.is_fake() { "truth seeker".into() } else { "news desk https://example.org".into() },
        official_url: (!label.is_fake()).then(|| "https://example.org".into()),
        followers_count: followers,
        friends_count: friends,
        listed_count: rng.random_range(0..100),
        favourites_count: rng.random_range(0..5000),
        statuses_count: rng.random_range(10..20000),
        geo_enabled: rng.random_bool(0.3),
        verified: !label.is_fake() && rng.random_bool(0.5),
        protected: false,
        created_at,
        latest_tweet_at,
    }
}

/// Trilingual dataset (`PER_LANGUAGE` records per language, balanced
/// labels) and the matching embedding store keyed by record id.
///
/// The first five Hindi and Bengali records of each label are marked as
/// translations of the English record with the same index and label.
pub fn trilingual(seed: u64) -> (Dataset, EmbeddingStore) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).expect("valid normal");
    let as_of = synthetic_as_of();
    let mut records = Vec::new();
    let mut store = EmbeddingStore::new(SYNTHETIC_DIM, SYNTHETIC_MODEL_ID).expect("positive dim");
    for lang in Lang::ALL {
        for i in 0..PER_LANGUAGE {
            let label = if i % 2 == 0 { Label::Fake } else { Label::NonFake };
            let id = format!("{}-{i:03}", lang.as_str());
            let mut rec = TweetRecord::new(&id, synthetic_text(lang, label, i, &mut rng), lang, label);
            rec.retweet_count = Some(rng.random_range(0..200));
            rec.favourite_count = Some(rng.random_range(0..500));
            if lang != Lang::En && i < 10 {
                rec.source = Some(Source::Translated);
                rec.origin_id = Some(format!("en-{i:03}"));
            }
            rec.user = Some(synthetic_user(label, i, &mut rng, as_of));
            let sign = if label.is_fake() { 1.0 } else { -1.0 };
            let v: Vec<f64> = (0..SYNTHETIC_DIM)
                .map(|j| sign * LABEL_SHIFT + LANG_SHIFT * lang_pattern(lang, j) + noise.sample(&mut rng))
                .collect();
            store.insert(id, v).expect("generated vectors are valid");
            records.push(rec);
        }
    }
    (Dataset::from_records(records).expect("generated records are valid"), store)
}

/// Two Gaussian blobs in the plane centred at `(-2.5, -2.5)` (non-fake)
/// and `(2.5, 2.5)` (fake) with standard deviation 0.6; labels alternate.
pub fn blobs_2d(n: usize, seed: u64) -> (Array2<f64>, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.6).expect("valid normal");
    let mut x = Array2::zeros((n, 2));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = if i % 2 == 0 { Label::Fake } else { Label::NonFake };
        let c = if label.is_fake() { 2.5 } else { -2.5 };
        x[[i, 0]] = c + noise.sample(&mut rng);
        x[[i, 1]] = c + noise.sample(&mut rng);
        y.push(label);
    }
    (x, y)
}

/// Small offensive-language corpus for the bias model.
pub fn bias_corpus() -> Vec<BiasExample> {
    let offensive = [
        "you idiot",
        "shut up you fool",
        "what a stupid liar",
        "idiot government clowns",
        "you are a disgrace",
        "stupid fools spreading lies",
        "pathetic liar",
        "get lost you clown",
    ];
    let clean = [
        "have a nice day",
        "stay safe and healthy",
        "thank you doctors",
        "new vaccination centre opens today",
        "ministry publishes daily update",
        "please wear masks",
        "hospital beds available",
        "wishing everyone well",
    ];
    offensive
        .iter()
        .map(|t| BiasExample { text: t.to_string(), offensive: true })
        .chain(clean.iter().map(|t| BiasExample { text: t.to_string(), offensive: false }))
        .collect()
}

pub fn trusted_allowlist() -> Vec<String> {
    ["who.int", "mohfw.gov.in", "pib.gov.in", "icmr.gov.in"].iter().map(|s| s.to_string()).collect()
}

pub fn trusted_documents() -> Vec<TrustedDocument> {
    let doc = |title: &str, url: &str| TrustedDocument { title: title.into(), url: url.into() };
    vec![
        doc("Ministry reports daily vaccination update", "https://www.mohfw.gov.in/update"),
        doc("Official guidelines for hospital admission", "https://mohfw.gov.in/guidelines"),
        doc("No evidence that garlic cures covid", "https://www.who.int/mythbusters"),
        doc("5G networks do not spread the virus", "https://www.who.int/5g"),
        doc("Vaccination centre data released", "https://pib.gov.in/release"),
        doc("मंत्रालय टीकाकरण रिपोर्ट जारी", "https://pib.gov.in/hindi"),
        doc("সরকারি টিকাকরণ তথ্য প্রকাশিত", "https://pib.gov.in/bengali"),
        doc("Research update on vaccine trial", "https://icmr.gov.in/trial"),
        doc("Miracle cure exposed as hoax", "https://example-blog.com/hoax"),
    ]
}

pub fn trusted_index() -> TrustedIndex {
    TrustedIndex::new(trusted_documents(), trusted_allowlist()).0
}

/// File names written by [`write_fixtures`].
pub const FIXTURE_FILES: [&str; 5] =
    ["dataset.jsonl", "embeddings.jsonl", "trusted_index.jsonl", "allowlist.txt", "bias_corpus.jsonl"];

/// Write the synthetic fixtures into `dir`.
pub fn write_fixtures(dir: &Path, seed: u64) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let (ds, store) = trilingual(seed);
    fs::write(dir.join(FIXTURE_FILES[0]), ds.to_jsonl())?;
    fs::write(dir.join(FIXTURE_FILES[1]), store.to_jsonl())?;
    let index: String =
        trusted_documents().iter().map(|d| serde_json::to_string(d).expect("serializes") + "\n").collect();
    fs::write(dir.join(FIXTURE_FILES[2]), index)?;
    fs::write(dir.join(FIXTURE_FILES[3]), trusted_allowlist().join("\n") + "\n")?;
    let corpus: String = bias_corpus()
        .iter()
        .map(|e| serde_json::json!({"text": e.text, "offensive": u8::from(e.offensive)}).to_string() + "\n")
        .collect();
    fs::write(dir.join(FIXTURE_FILES[4]), corpus)
}
