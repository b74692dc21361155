use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use tweetguard::embeddings::{EmbeddingProviderClient, ProviderError};

#[derive(Clone)]
struct Mock {
    calls: Arc<AtomicUsize>,
    /// Vectors dropped from every response.
    drop: usize,
    /// Requests failing with 503 before success.
    failures: usize,
}

async fn embed(State(m): State<Mock>, Json(body): Json<Value>) -> (StatusCode, Json<Value>) {
    let n = m.calls.fetch_add(1, Ordering::SeqCst);
    if n < m.failures {
        return (StatusCode::SERVICE_UNAVAILABLE, Json(json!({"error": "warming up"})));
    }
    let texts = body["texts"].as_array().unwrap();
    let vectors: Vec<Vec<f64>> = texts
        .iter()
        .skip(m.drop)
        .map(|t| {
            let t = t.as_str().unwrap();
            vec![t.len() as f64, t.chars().next().map_or(0.0, |c| c as u32 as f64), 1.0]
        })
        .collect();
    (StatusCode::OK, Json(json!({"model_id": "mock", "vectors": vectors})))
}

async fn serve(drop: usize, failures: usize) -> (String, Arc<AtomicUsize>) {
    let calls = Arc::new(AtomicUsize::new(0));
    let app = Router::new().route("/embed", post(embed)).with_state(Mock { calls: calls.clone(), drop, failures });
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (format!("http://{addr}/"), calls)
}

fn texts(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{}text{}", (b'a' + i as u8) as char, "x".repeat(i))).collect()
}

#[tokio::test]
async fn batches_and_preserves_order() {
    let (url, calls) = serve(0, 0).await;
    let client = EmbeddingProviderClient::new(&url, 2, Duration::from_secs(5), 0, Some(3)).unwrap();
    let input = texts(5);
    let out = client.fetch(&input).await.unwrap();
    assert_eq!(calls.load(Ordering::SeqCst), 3);
    assert_eq!(out.len(), 5);
    for (t, v) in input.iter().zip(&out) {
        assert_eq!(v[0], t.len() as f64);
        assert_eq!(v[1], t.chars().next().unwrap() as u32 as f64);
    }
}

#[tokio::test]
async fn order_independent_of_batch_size() {
    let (url, _) = serve(0, 0).await;
    let input = texts(7);
    let mut results = Vec::new();
    for b in 1..=8 {
        let client = EmbeddingProviderClient::new(&url, b, Duration::from_secs(5), 0, None).unwrap();
        results.push(client.fetch(&input).await.unwrap());
    }
    assert!(results.windows(2).all(|w| w[0] == w[1]));
}

#[tokio::test]
async fn short_response_is_error() {
    let (url, _) = serve(1, 0).await;
    let client = EmbeddingProviderClient::new(&url, 5, Duration::from_secs(5), 0, None).unwrap();
    let err = client.fetch(&texts(5)).await.unwrap_err();
    assert!(matches!(err, ProviderError::CountMismatch { expected: 5, got: 4 }), "{err}");
}

#[tokio::test]
async fn empty_input_sends_nothing() {
    let (url, calls) = serve(0, 0).await;
    let client = EmbeddingProviderClient::new(&url, 2, Duration::from_secs(5), 0, None).unwrap();
    assert!(client.fetch(&[]).await.unwrap().is_empty());
    assert_eq!(calls.load(Ordering::SeqCst), 0);
}

#[tokio::test]
async fn dimension_checked() {
    let (url, _) = serve(0, 0).await;
    let client = EmbeddingProviderClient::new(&url, 2, Duration::from_secs(5), 0, Some(768)).unwrap();
    assert!(matches!(client.fetch(&texts(1)).await, Err(ProviderError::Dimension { expected: 768, got: 3 })));
}

#[tokio::test]
async fn transient_failures_retried_within_budget() {
    let (url, calls) = serve(0, 2).await;
    let client = EmbeddingProviderClient::new(&url, 4, Duration::from_secs(5), 2, None).unwrap();
    assert_eq!(client.fetch(&texts(2)).await.unwrap().len(), 2);
    assert_eq!(calls.load(Ordering::SeqCst), 3);

    let (url, _) = serve(0, 2).await;
    let client = EmbeddingProviderClient::new(&url, 4, Duration::from_secs(5), 1, None).unwrap();
    assert!(matches!(client.fetch(&texts(2)).await, Err(ProviderError::Status { status: 503, .. })));
}

#[tokio::test]
async fn unreachable_provider() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let client = EmbeddingProviderClient::new(&format!("http://{addr}/"), 2, Duration::from_secs(2), 0, None).unwrap();
    assert!(matches!(client.fetch(&texts(1)).await, Err(ProviderError::Transport(_) | ProviderError::Timeout)));
}
