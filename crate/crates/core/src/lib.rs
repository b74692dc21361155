//! Multilingual fake-tweet detection engine.
//!
//! The crate is organised around the stages of the detection pipeline:
//!
//! - [`corpus`]: tweet records, dataset loading, text preprocessing and
//!   stratified splitting.
//! - [`features`]: hand-crafted tweet and user features, scaling, feature
//!   assembly and the feature/label correlation report.
//! - [`factver`]: fact-verification score from edit distance against titles
//!   retrieved from an allowlisted trusted-source index.
//! - [`biaser`]: offensive-language probability from a TF-IDF n-gram linear
//!   classifier.
//! - [`embeddings`]: precomputed sentence embeddings and the embedding
//!   provider client.
//! - [`classifiers`]: linear SVM, random forest, MLP and softmax head behind
//!   one train/predict/serialize contract.
//! - [`harness`]: metrics, experiment runner and seed sweeps.
//! - [`pipeline`]: single-text classification used by the prediction service.

pub mod biaser;
pub mod classifiers;
pub mod corpus;
pub mod embeddings;
pub mod factver;
pub mod features;
pub mod fingerprint;
pub mod harness;
pub mod pipeline;
pub mod synthetic;

pub use corpus::{Dataset, Label, Lang, TweetRecord, UserProfile};

pub use features::{Family, FeatureLayout, FeatureVector};
