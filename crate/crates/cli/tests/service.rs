mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::routing::post;
use axum::{Json, Router};
use common::{spawn, state, trained};
use serde_json::{json, Value};
use tweetguard::classifiers::ClassifierKind;
use tweetguard::embeddings::EmbeddingProviderClient;
use tweetguard::pipeline::Verdict;
use tweetguard::{Family, FeatureVector};
use tweetguard_server::{AppState, ErrorBody, Health, VersionInfo};

async fn post_json(url: &str, body: &str) -> (u16, String) {
    let resp = reqwest::Client::new()
        .post(format!("{url}/predict"))
        .header("content-type", "application/json")
        .body(body.to_string())
        .send()
        .await
        .unwrap();
    (resp.status().as_u16(), resp.text().await.unwrap())
}

fn predict_body(text: &str) -> String {
    json!({ "text": text }).to_string()
}

#[tokio::test]
async fn health_and_version() {
    let t = trained(&[Family::TextEmbd], ClassifierKind::SoftmaxHead);
    let url = spawn(Arc::new(state(&t)), None).await;
    let h: Health = reqwest::get(format!("{url}/health")).await.unwrap().json().await.unwrap();
    assert_eq!(h.status, "ok");
    assert_eq!(h.model_fingerprint, t.bundle.fingerprint());
    assert_eq!(h.dim, 16);
    assert_eq!(h.families, vec![Family::TextEmbd]);
    let v: VersionInfo = reqwest::get(format!("{url}/version")).await.unwrap().json().await.unwrap();
    assert_eq!(v.name, "tweetguard");
    assert_eq!(v.bundle_format, "tweetguard-bundle");
}

#[tokio::test]
async fn predict_equals_scaled_model_output() {
    let t = trained(&[Family::TextEmbd], ClassifierKind::SoftmaxHead);
    let url = spawn(Arc::new(state(&t)), None).await;
    for rec in t.ds.records().iter().step_by(37) {
        let (status, body) = post_json(&url, &predict_body(&rec.text)).await;
        assert_eq!(status, 200, "{body}");
        let v: Verdict = serde_json::from_str(&body).unwrap();
        let layout = Arc::new(t.bundle.layout.clone());
        let raw = FeatureVector::new(layout, t.store.get(&rec.id).unwrap().to_vec()).unwrap();
        let probs = t.bundle.model.predict_proba(&t.bundle.scaler.apply(&raw).unwrap()).unwrap();
        assert_eq!(v.p_fake, probs[1]);
        assert_eq!(v.label, if probs[1] > probs[0] { "fake" } else { "non_fake" });
        assert!(v.feature_breakdown.is_empty());
        assert_eq!(v.embedding_dim, 16);
    }
}

#[tokio::test]
async fn malformed_bodies_get_field_reports() {
    let t = trained(&[Family::TextEmbd], ClassifierKind::SoftmaxHead);
    let url = spawn(Arc::new(state(&t)), None).await;
    let cases = [
        ("not json", ""),
        (r#"{"lang": "hi"}"#, "text"),
        (r#"{"text": 5}"#, "text"),
        (r#"{"text": "x", "foo": 1}"#, "foo"),
        (r#"{"text": "x", "lang": "fr"}"#, "lang"),
        (r#"{"text": "x", "user": {"handle": "a", "followers_count": "many"}}"#, "user.followers_count"),
        (r#"{"text": "x"} trailing"#, ""),
    ];
    for (body, path) in cases {
        let (status, resp) = post_json(&url, body).await;
        assert_eq!(status, 400, "{body}");
        let err: ErrorBody = serde_json::from_str(&resp).unwrap();
        assert_eq!(err.kind, "malformed_request");
        assert_eq!(err.fields.len(), 1, "{resp}");
        assert_eq!(err.fields[0].path, path, "{body} -> {resp}");
    }
}

#[tokio::test]
async fn unprocessable_requests() {
    let t = trained(&[Family::TweetText, Family::TweetUser], ClassifierKind::SoftmaxHead);
    let url = spawn(Arc::new(state(&t)), None).await;

    let (status, resp) = post_json(&url, &predict_body("plain text, no author")).await;
    assert_eq!(status, 422);
    let err: ErrorBody = serde_json::from_str(&resp).unwrap();
    assert_eq!(err.kind, "missing_feature_family");
    assert!(err.error.contains("missing feature family"), "{}", err.error);

    let (status, resp) = post_json(&url, &predict_body("#only @tags https://t.co/x")).await;
    assert_eq!(status, 422);
    let err: ErrorBody = serde_json::from_str(&resp).unwrap();
    assert_eq!((err.kind.as_str(), err.error.as_str()), ("empty_input", "empty input"));

    let rec = &t.ds.records()[0];
    let body = json!({ "text": rec.text, "user": rec.user, "retweet_count": 3 }).to_string();
    let (status, resp) = post_json(&url, &body).await;
    assert_eq!(status, 200, "{resp}");
    let v: Verdict = serde_json::from_str(&resp).unwrap();
    assert_eq!(v.feature_breakdown.len(), 24);
    assert_eq!(v.embedding_dim, 0);
    assert_eq!(v.feature_breakdown[0].value, 3.0);
}

#[tokio::test]
async fn unknown_text_without_provider_is_unavailable() {
    let t = trained(&[Family::TextEmbd], ClassifierKind::SoftmaxHead);
    let url = spawn(Arc::new(state(&t)), None).await;
    let (status, resp) = post_json(&url, &predict_body("a text nobody embedded")).await;
    assert_eq!(status, 503);
    assert_eq!(serde_json::from_str::<ErrorBody>(&resp).unwrap().kind, "embedding_unavailable");
}

async fn mock_provider(calls: Arc<AtomicUsize>) -> String {
    let app = Router::new().route(
        "/embed",
        post(move |Json(body): Json<Value>| {
            let calls = calls.clone();
            async move {
                calls.fetch_add(1, Ordering::SeqCst);
                let n = body["texts"].as_array().unwrap().len();
                let v: Vec<f64> = (0..16).map(|j| if j % 3 == 0 { 1.5 } else { -0.5 }).collect();
                Json(json!({ "model_id": "mock", "vectors": vec![v; n] }))
            }
        }),
    );
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}/")
}

#[tokio::test]
async fn provider_fills_store_misses() {
    let t = trained(&[Family::TextEmbd], ClassifierKind::LinearSvm);
    let calls = Arc::new(AtomicUsize::new(0));
    let provider_url = mock_provider(calls.clone()).await;
    let client = EmbeddingProviderClient::new(&provider_url, 8, Duration::from_secs(5), 0, Some(16)).unwrap();
    let url = spawn(Arc::new(state(&t).with_provider(client)), None).await;

    let (status, resp) = post_json(&url, &predict_body("a text nobody embedded")).await;
    assert_eq!(status, 200, "{resp}");
    assert_eq!(calls.load(Ordering::SeqCst), 1);

    let (status, _) = post_json(&url, &predict_body(&t.ds.records()[0].text)).await;
    assert_eq!(status, 200);
    assert_eq!(calls.load(Ordering::SeqCst), 1, "stored texts skip the provider");
}

#[tokio::test]
async fn provider_down_is_unavailable() {
    let t = trained(&[Family::TextEmbd], ClassifierKind::SoftmaxHead);
    let client =
        EmbeddingProviderClient::new("http://127.0.0.1:9/", 8, Duration::from_millis(500), 0, Some(16)).unwrap();
    let url = spawn(Arc::new(state(&t).with_provider(client)), None).await;
    let (status, resp) = post_json(&url, &predict_body("a text nobody embedded")).await;
    assert_eq!(status, 503, "{resp}");
}

#[tokio::test]
async fn concurrent_identical_requests_agree() {
    let t = trained(&[Family::TextEmbd, Family::TweetText, Family::FactVer], ClassifierKind::RandomForest);
    let app_state = Arc::new(state(&t));
    let before = app_state.bundle.fingerprint();
    let url = spawn(app_state.clone(), None).await;
    let body = predict_body(&t.ds.records()[4].text);
    let handles: Vec<_> = (0..100)
        .map(|_| {
            let (url, body) = (url.clone(), body.clone());
            tokio::spawn(async move { post_json(&url, &body).await })
        })
        .collect();
    let mut bodies = Vec::new();
    for h in handles {
        let (status, resp) = h.await.unwrap();
        assert_eq!(status, 200, "{resp}");
        bodies.push(resp);
    }
    let first: Verdict = serde_json::from_str(&bodies[0]).unwrap();
    assert!(bodies.iter().all(|b| serde_json::from_str::<Verdict>(b).unwrap() == first));
    assert!(!first.factver_titles.is_empty() || first.feature_breakdown.iter().any(|f| f.name.starts_with("FactVer")));
    assert_eq!(app_state.bundle.fingerprint(), before);
    assert_eq!(first.model_fingerprint, before);
}

#[tokio::test]
async fn static_mount_serves_page() {
    let t = trained(&[Family::TextEmbd], ClassifierKind::SoftmaxHead);
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<h1>triage</h1>").unwrap();
    let url = spawn(Arc::new(state(&t)), Some(dir.path())).await;
    let resp = reqwest::get(format!("{url}/")).await.unwrap();
    assert_eq!(resp.status().as_u16(), 200);
    assert_eq!(resp.text().await.unwrap(), "<h1>triage</h1>");
    assert_eq!(reqwest::get(format!("{url}/missing.js")).await.unwrap().status().as_u16(), 404);
}

#[tokio::test]
async fn predict_latency_within_budget() {
    let t = trained(&[Family::TextEmbd, Family::TweetText, Family::FactVer], ClassifierKind::RandomForest);
    let url = spawn(Arc::new(state(&t)), None).await;
    let client = reqwest::Client::new();
    let mut times = Vec::new();
    for rec in t.ds.records().iter().take(60) {
        let start = Instant::now();
        let resp = client.post(format!("{url}/predict")).json(&json!({ "text": rec.text })).send().await.unwrap();
        assert_eq!(resp.status().as_u16(), 200);
        resp.bytes().await.unwrap();
        times.push(start.elapsed());
    }
    times.sort();
    let median = times[times.len() / 2];
    assert!(median < Duration::from_millis(50), "median {median:?}");
}

#[test]
fn state_check_rejects_unusable_resources() {
    let t = trained(&[Family::TextEmbd, Family::FactVer], ClassifierKind::SoftmaxHead);
    assert!(AppState::new(t.bundle.clone()).check().is_err(), "no embeddings, no provider");
    let no_index = AppState::new(t.bundle.clone()).with_embeddings(t.store.clone());
    assert!(no_index.check().unwrap_err().to_string().contains("trusted index"));
    let mut other = tweetguard::embeddings::EmbeddingStore::new(8, "x").unwrap();
    other.insert("a", vec![0.0; 8]).unwrap();
    let bad_dim =
        AppState::new(t.bundle.clone()).with_embeddings(other).with_trusted(tweetguard::synthetic::trusted_index());
    assert!(bad_dim.check().unwrap_err().to_string().contains("width"));
}
