use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::ServeError;

fn default_bind() -> String {
    "127.0.0.1:8080".to_string()
}

/// Service settings, read from TOML. Command-line flags and `TWEETGUARD_*`
/// variables override individual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerConfig {
    #[serde(default = "default_bind")]
    pub bind: String,
    pub bundle: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// Dataset whose record texts become extra lookup keys into `embeddings`.
    pub dataset: Option<PathBuf>,
    pub trusted_index: Option<PathBuf>,
    pub allowlist: Option<PathBuf>,
    pub bias_model: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
    pub provider: Option<ProviderConfig>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: default_bind(),
            bundle: None,
            embeddings: None,
            dataset: None,
            trusted_index: None,
            allowlist: None,
            bias_model: None,
            static_dir: None,
            provider: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    /// Base address; requests go to `<url>/embed`.
    pub url: String,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
}

fn default_batch() -> usize {
    tweetguard::embeddings::DEFAULT_BATCH_SIZE
}

fn default_timeout_ms() -> u64 {
    5_000
}

fn default_retries() -> u32 {
    2
}

impl ProviderConfig {
    pub fn new(url: impl Into<String>) -> Self {
        ProviderConfig {
            url: url.into(),
            batch_size: default_batch(),
            timeout_ms: default_timeout_ms(),
            retries: default_retries(),
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }
}

impl ServerConfig {
    pub fn from_toml(text: &str) -> Result<Self, ServeError> {
        toml::from_str(text).map_err(|e| ServeError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ServeError> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|e| ServeError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}
