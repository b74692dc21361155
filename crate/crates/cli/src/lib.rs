//! HTTP prediction service over a trained pipeline bundle.
//!
//! Endpoints: `POST /predict`, `GET /health`, `GET /version`, and an
//! optional static mount at `/` for the triage page. Loaded artifacts are
//! immutable; handlers only read them.

mod config;

use std::future::Future;
use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::net::TcpListener;
use tower_http::services::ServeDir;
use tower_http::trace::TraceLayer;
use tweetguard::biaser::{BiasError, BiasModel};
use tweetguard::classifiers::MODEL_FORMAT;
use tweetguard::corpus::{load_dataset, SCHEMA_V1};
use tweetguard::embeddings::{load_embeddings, EmbeddingError, EmbeddingProviderClient, EmbeddingStore, ProviderError};
use tweetguard::factver::{FactVerError, TrustedIndex};
use tweetguard::features::FeatureError;
use tweetguard::pipeline::{classify_text, ClassifyRequest, PipelineBundle, PipelineError, Resources, Verdict};
use tweetguard::Family;

pub use config::{ProviderConfig, ServerConfig};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("invalid service config: {0}")]
    Config(String),
    #[error("cannot load model bundle: {0}")]
    Bundle(#[from] PipelineError),
    #[error("cannot load embeddings: {0}")]
    Embeddings(#[from] EmbeddingError),
    #[error("cannot load trusted index: {0}")]
    Trusted(#[from] FactVerError),
    #[error("cannot load bias model: {0}")]
    Bias(#[from] BiasError),
    #[error("invalid embedding provider: {0}")]
    Provider(#[from] ProviderError),
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
}

/// Everything a request handler reads.
#[derive(Debug)]
pub struct AppState {
    pub bundle: PipelineBundle,
    pub fingerprint: String,
    pub embeddings: Option<EmbeddingStore>,
    pub trusted: Option<TrustedIndex>,
    pub bias: Option<BiasModel>,
    pub provider: Option<EmbeddingProviderClient>,
}

impl AppState {
    pub fn new(bundle: PipelineBundle) -> Self {
        let fingerprint = bundle.fingerprint();
        AppState { bundle, fingerprint, embeddings: None, trusted: None, bias: None, provider: None }
    }

    pub fn with_embeddings(mut self, store: EmbeddingStore) -> Self {
        self.embeddings = Some(store);
        self
    }

    pub fn with_trusted(mut self, index: TrustedIndex) -> Self {
        self.trusted = Some(index);
        self
    }

    pub fn with_bias(mut self, model: BiasModel) -> Self {
        self.bias = Some(model);
        self
    }

    pub fn with_provider(mut self, client: EmbeddingProviderClient) -> Self {
        self.provider = Some(client);
        self
    }

    /// Load the bundle and its resources from the paths in `cfg`.
    pub fn from_config(cfg: &ServerConfig) -> Result<Self, ServeError> {
        let path = cfg.bundle.as_ref().ok_or_else(|| ServeError::Config("no model bundle given".into()))?;
        let mut state = AppState::new(PipelineBundle::load(path)?);
        if let Some(p) = &cfg.embeddings {
            let store = load_embeddings(p)?;
            state.embeddings = Some(match &cfg.dataset {
                Some(d) => {
                    store.with_text_keys(&load_dataset(d, SCHEMA_V1).map_err(|e| ServeError::Config(e.to_string()))?)
                }
                None => store,
            });
        }
        match (&cfg.trusted_index, &cfg.allowlist) {
            (Some(i), Some(a)) => state.trusted = Some(TrustedIndex::load(i, a)?.0),
            (None, None) => {}
            _ => return Err(ServeError::Config("trusted_index and allowlist go together".into())),
        }
        if let Some(p) = &cfg.bias_model {
            state.bias = Some(BiasModel::load(p)?);
        }
        if let Some(p) = &cfg.provider {
            let dim = Some(state.bundle.layout.embedding_dim()).filter(|d| *d > 0);
            state.provider = Some(EmbeddingProviderClient::new(&p.url, p.batch_size, p.timeout(), p.retries, dim)?);
        }
        state.check()?;
        Ok(state)
    }

    /// Reject resource sets that would fail every request.
    pub fn check(&self) -> Result<(), ServeError> {
        let dim = self.bundle.layout.embedding_dim();
        if self.bundle.requires(Family::TextEmbd) {
            if self.embeddings.is_none() && self.provider.is_none() {
                return Err(ServeError::Config(
                    "model uses TextEmbd but neither embeddings nor a provider is set".into(),
                ));
            }
            if let Some(s) = &self.embeddings {
                if s.dim() != dim {
                    return Err(ServeError::Config(format!(
                        "embedding width {} does not match model width {dim}",
                        s.dim()
                    )));
                }
            }
        }
        if self.bundle.requires(Family::FactVer) && self.trusted.is_none() {
            return Err(ServeError::Config("model uses FactVer but no trusted index is set".into()));
        }
        if self.bundle.requires(Family::Bias) && self.bias.is_none() {
            tracing::warn!("model uses Bias but no bias model is set; neutral score will be used");
        }
        Ok(())
    }

    pub fn resources(&self) -> Resources<'_> {
        Resources { embeddings: self.embeddings.as_ref(), trusted: self.trusted.as_ref(), bias: self.bias.as_ref() }
    }

    pub async fn classify(&self, req: &ClassifyRequest) -> Result<Verdict, PipelineError> {
        classify_text(&self.bundle, &self.fingerprint, &self.resources(), self.provider.as_ref(), req).await
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldIssue {
    /// Dotted path into the request body; empty for the body itself.
    pub path: String,
    pub message: String,
}

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub kind: String,
    #[serde(default)]
    pub fields: Vec<FieldIssue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub model_fingerprint: String,
    /// Embedding width the model expects, 0 without TextEmbd.
    pub dim: usize,
    pub input_width: usize,
    pub families: Vec<Family>,
    pub classifier: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionInfo {
    pub name: String,
    pub version: String,
    pub model_format: String,
    pub bundle_format: String,
}

fn error_response(status: StatusCode, kind: &str, error: String, fields: Vec<FieldIssue>) -> Response {
    (status, Json(ErrorBody { error, kind: kind.to_string(), fields })).into_response()
}

/// Status and error kind for a classification failure.
pub fn status_for(e: &PipelineError) -> (StatusCode, &'static str) {
    match e {
        PipelineError::MissingFamily(_) => (StatusCode::UNPROCESSABLE_ENTITY, "missing_feature_family"),
        PipelineError::EmptyInput => (StatusCode::UNPROCESSABLE_ENTITY, "empty_input"),
        PipelineError::Feature(
            FeatureError::MissingFamily(_) | FeatureError::AsOfBeforeCreation { .. } | FeatureError::NonFinite(_),
        ) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_features"),
        PipelineError::Provider(_) | PipelineError::MissingEmbedding(_) => {
            (StatusCode::SERVICE_UNAVAILABLE, "embedding_unavailable")
        }
        _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
    }
}

/// Root-level serde messages name the field only in the text.
fn field_issue(path: &str, message: String) -> FieldIssue {
    let path = if path == "." {
        ["missing field `", "unknown field `"]
            .iter()
            .find_map(|p| message.strip_prefix(p))
            .and_then(|rest| rest.split('`').next())
            .unwrap_or("")
            .to_string()
    } else {
        path.to_string()
    };
    FieldIssue { path, message }
}

fn parse_request(body: &[u8]) -> Result<ClassifyRequest, Box<Response>> {
    let reject = |issue: FieldIssue| {
        let error = format!("malformed request: {}", issue.message);
        Box::new(error_response(StatusCode::BAD_REQUEST, "malformed_request", error, vec![issue]))
    };
    let de = &mut serde_json::Deserializer::from_slice(body);
    let req: ClassifyRequest = serde_path_to_error::deserialize(&mut *de)
        .map_err(|e| reject(field_issue(&e.path().to_string(), e.inner().to_string())))?;
    de.end().map_err(|e| reject(FieldIssue { path: String::new(), message: e.to_string() }))?;
    Ok(req)
}

async fn predict(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let req = match parse_request(&body) {
        Ok(r) => r,
        Err(resp) => return *resp,
    };
    match state.classify(&req).await {
        Ok(v) => Json(v).into_response(),
        Err(e) => {
            let (status, kind) = status_for(&e);
            if status.is_server_error() {
                tracing::error!(error = %e, kind, "prediction failed");
            }
            error_response(status, kind, e.to_string(), Vec::new())
        }
    }
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    let b = &state.bundle;
    Json(Health {
        status: "ok".into(),
        model_fingerprint: state.fingerprint.clone(),
        dim: b.layout.embedding_dim(),
        input_width: b.layout.len(),
        families: b.families(),
        classifier: b.model.kind().as_str().into(),
    })
}

async fn version(State(state): State<Arc<AppState>>) -> Json<VersionInfo> {
    Json(VersionInfo {
        name: "tweetguard".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        model_format: MODEL_FORMAT.into(),
        bundle_format: state.bundle.format.clone(),
    })
}

pub fn router(state: Arc<AppState>, static_dir: Option<&Path>) -> Router {
    let mut app = Router::new()
        .route("/predict", post(predict))
        .route("/health", get(health))
        .route("/version", get(version))
        .with_state(state);
    if let Some(dir) = static_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    app.layer(TraceLayer::new_for_http())
}

/// Serve on an already bound listener until `shutdown` resolves.
pub async fn serve_listener(
    listener: TcpListener,
    app: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

/// Load artifacts, bind `cfg.bind` and serve until `shutdown` resolves.
pub async fn serve(cfg: &ServerConfig, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), ServeError> {
    let state = Arc::new(AppState::from_config(cfg)?);
    let listener =
        TcpListener::bind(&cfg.bind).await.map_err(|source| ServeError::Bind { addr: cfg.bind.clone(), source })?;
    let addr = listener.local_addr().map_err(|source| ServeError::Bind { addr: cfg.bind.clone(), source })?;
    tracing::info!(%addr, fingerprint = %state.fingerprint, "serving");
    let app = router(state, cfg.static_dir.as_deref());
    serve_listener(listener, app, shutdown).await.map_err(|source| ServeError::Bind { addr: cfg.bind.clone(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_field_is_named() {
        let err = parse_request(br#"{"lang": "hi"}"#).unwrap_err();
        assert_eq!(err.status(), StatusCode::BAD_REQUEST);
    }

    #[test]
    fn field_issue_paths() {
        assert_eq!(field_issue(".", "missing field `text`".into()).path, "text");
        assert_eq!(field_issue(".", "unknown field `foo`, expected one of ...".into()).path, "foo");
        assert_eq!(field_issue("user.followers_count", "invalid type".into()).path, "user.followers_count");
        assert_eq!(field_issue(".", "EOF while parsing".into()).path, "");
    }

    #[test]
    fn trailing_garbage_rejected() {
        assert!(parse_request(br#"{"text": "a"} x"#).is_err());
        assert!(parse_request(br#"{"text": "a"}"#).is_ok());
    }

    #[test]
    fn error_statuses() {
        assert_eq!(status_for(&PipelineError::EmptyInput).0, StatusCode::UNPROCESSABLE_ENTITY);
        assert_eq!(status_for(&PipelineError::MissingFamily(Family::TweetUser)).0, StatusCode::UNPROCESSABLE_ENTITY);
        assert_eq!(status_for(&PipelineError::MissingEmbedding("x".into())).0, StatusCode::SERVICE_UNAVAILABLE);
        assert_eq!(status_for(&PipelineError::Corrupt("x".into())).0, StatusCode::INTERNAL_SERVER_ERROR);
    }
}
