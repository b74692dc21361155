//! Trained bundles on the synthetic corpus and an in-process server.
#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use tokio::net::TcpListener;
use tweetguard::classifiers::ClassifierKind;
use tweetguard::embeddings::EmbeddingStore;
use tweetguard::harness::{run_experiment, EvalMode, ExperimentConfig};
use tweetguard::pipeline::{PipelineBundle, Resources};
use tweetguard::{synthetic, Dataset, Family, Lang};
use tweetguard_server::{router, serve_listener, AppState};

pub struct Trained {
    pub bundle: PipelineBundle,
    pub ds: Dataset,
    pub store: EmbeddingStore,
}

/// Bundle trained on a stratified split of all three languages.
pub fn trained(families: &[Family], kind: ClassifierKind) -> Trained {
    let (ds, store) = synthetic::trilingual(7);
    let trusted = synthetic::trusted_index();
    let res = Resources { embeddings: Some(&store), trusted: Some(&trusted), bias: None };
    let mut cfg = ExperimentConfig::new(EvalMode::SplitWithinLangs, Lang::ALL, Lang::ALL, families, kind, 42);
    cfg.as_of = synthetic::synthetic_as_of();
    let bundle = run_experiment(&cfg, &ds, &res).expect("synthetic experiment runs").bundle;
    Trained { bundle, ds, store }
}

/// Service state whose store answers lookups by record text.
pub fn state(t: &Trained) -> AppState {
    let mut s = AppState::new(t.bundle.clone()).with_embeddings(t.store.with_text_keys(&t.ds));
    if t.bundle.requires(Family::FactVer) {
        s = s.with_trusted(synthetic::trusted_index());
    }
    s
}

/// Serve `state` on an ephemeral port; returns the base address.
pub async fn spawn(state: Arc<AppState>, static_dir: Option<&Path>) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").await.expect("ephemeral port");
    let addr = listener.local_addr().expect("bound address");
    let app = router(state, static_dir);
    tokio::spawn(async move { serve_listener(listener, app, std::future::pending()).await.expect("server runs") });
    format!("http://{addr}")
}
