//! Service and CLI configuration loaded from TOML.
//!
//! ```toml
//! data_dir = "data"
//! seed = 42
//! worker_limit = 1
//!
//! [server]
//! bind = "127.0.0.1:8080"
//! cors_origins = ["http://localhost:5173"]
//!
//! [[auth.tokens]]
//! principal = "analyst"
//! token = "change-me"
//!
//! [thresholds]
//! sentiment = 0.2
//! propaganda = 0.5
//!
//! [analysis]
//! granularity = "day"
//! spike_window = 7
//! z_threshold = 2.0
//!
//! [[adapters]]
//! id = "arabert_sentiment"
//! kind = "sentiment"
//! url = "http://127.0.0.1:9000/classify"
//!
//! [sources.generic_http]
//! url_template = "https://example.org/search?q={query}&n={limit}"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use crate::classify::{AdapterRegistry, ClassifierAdapter};
use crate::connectors::{HttpSourceConfig, SourceRegistry};
use crate::engine::{AnalysisSettings, EngineOptions};
use crate::store::AnalysisKind;

pub const CONFIG_ENV: &str = "MARSAD_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl ConfigError {
    pub fn code(&self) -> &'static str {
        "INVALID_CONFIG"
    }
}

#[derive(Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenEntry {
    pub principal: String,
    pub token: String,
}

impl fmt::Debug for TokenEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TokenEntry")
            .field("principal", &self.principal)
            .field("token", &"[redacted]")
            .finish()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuthConfig {
    pub tokens: Vec<TokenEntry>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: String,
    /// Dashboard origins allowed by CORS; empty disables cross-origin access.
    pub cors_origins: Vec<String>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: "127.0.0.1:8080".into(),
            cors_origins: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub sentiment: f64,
    pub propaganda: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            sentiment: crate::classify::DEFAULT_SENTIMENT_THRESHOLD,
            propaganda: crate::classify::DEFAULT_PROPAGANDA_THRESHOLD,
        }
    }
}

#[derive(Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdapterConfig {
    pub id: String,
    pub kind: String,
    pub url: String,
    #[serde(default)]
    pub token: Option<String>,
    #[serde(default)]
    pub timeout_secs: Option<u64>,
    #[serde(default)]
    pub in_flight: Option<usize>,
}

impl fmt::Debug for AdapterConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdapterConfig")
            .field("id", &self.id)
            .field("kind", &self.kind)
            .field("url", &self.url)
            .field("token", &self.token.as_ref().map(|_| "[redacted]"))
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourcesConfig {
    pub concurrency: usize,
    pub generic_http: HttpSourceConfig,
    /// When absent the stub answers from the local fixture.
    pub credentialed_stub: Option<HttpSourceConfig>,
}

impl Default for SourcesConfig {
    fn default() -> Self {
        SourcesConfig {
            concurrency: crate::connectors::DEFAULT_SOURCE_CONCURRENCY,
            generic_http: HttpSourceConfig::default(),
            credentialed_stub: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub data_dir: PathBuf,
    pub seed: u64,
    pub worker_limit: usize,
    pub server: ServerConfig,
    pub auth: AuthConfig,
    pub thresholds: Thresholds,
    pub analysis: AnalysisSettings,
    pub adapters: Vec<AdapterConfig>,
    pub sources: SourcesConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            data_dir: PathBuf::from("data"),
            seed: 42,
            worker_limit: crate::jobs::DEFAULT_WORKER_LIMIT,
            server: ServerConfig::default(),
            auth: AuthConfig::default(),
            thresholds: Thresholds::default(),
            analysis: AnalysisSettings::default(),
            adapters: Vec::new(),
            sources: SourcesConfig::default(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Self::parse_at(text, Path::new("<inline>"))
    }

    fn parse_at(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.message().to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_at(&text, path)
    }

    /// An explicit path wins, then `MARSAD_CONFIG`, then built-in defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.worker_limit == 0 {
            return invalid("worker_limit must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.thresholds.sentiment) {
            return invalid("thresholds.sentiment must lie in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.thresholds.propaganda) {
            return invalid("thresholds.propaganda must lie in [0, 1]".into());
        }
        if self.analysis.spike_window == 0 {
            return invalid("analysis.spike_window must be at least 1".into());
        }
        if !(self.analysis.z_threshold.is_finite() && self.analysis.z_threshold > 0.0) {
            return invalid("analysis.z_threshold must be positive".into());
        }
        let d = self.analysis.pagerank.damping;
        if !(d > 0.0 && d < 1.0) {
            return invalid("analysis.pagerank.damping must lie in (0, 1)".into());
        }
        let mut principals = std::collections::BTreeSet::new();
        for t in &self.auth.tokens {
            if t.token.is_empty() || t.principal.is_empty() {
                return invalid("auth tokens need a principal and a non-empty token".into());
            }
            if !principals.insert(t.principal.as_str()) {
                return invalid(format!("principal `{}` listed twice", t.principal));
            }
        }
        for a in &self.adapters {
            self.adapter_kind(a)?;
        }
        Ok(())
    }

    fn adapter_kind(&self, a: &AdapterConfig) -> Result<AnalysisKind, ConfigError> {
        let kind: AnalysisKind = a
            .kind
            .parse()
            .map_err(|_| ConfigError::Invalid(format!("adapter `{}`: unknown kind `{}`", a.id, a.kind)))?;
        if !matches!(kind, AnalysisKind::Sentiment | AnalysisKind::Propaganda) {
            return Err(ConfigError::Invalid(format!(
                "adapter `{}`: only sentiment and propaganda adapters are supported",
                a.id
            )));
        }
        Ok(kind)
    }

    pub fn db_path(&self) -> PathBuf {
        self.data_dir.join("marsad.db")
    }

    pub fn engine_options(&self) -> Result<EngineOptions, ConfigError> {
        let mut adapters = AdapterRegistry::default();
        for a in &self.adapters {
            let mut adapter = ClassifierAdapter::http(&a.id, self.adapter_kind(a)?, &a.url, a.token.clone());
            if let Some(secs) = a.timeout_secs {
                adapter = adapter.with_timeout(Duration::from_secs(secs));
            }
            if let Some(n) = a.in_flight {
                adapter = adapter.with_in_flight_limit(n);
            }
            adapters.register(adapter);
        }
        Ok(EngineOptions {
            analysis: self.analysis.clone(),
            adapters,
            sentiment_threshold: self.thresholds.sentiment,
            propaganda_threshold: self.thresholds.propaganda,
            ..EngineOptions::default()
        })
    }

    pub fn source_registry(&self) -> SourceRegistry {
        SourceRegistry::builtin_with_concurrency(
            self.sources.generic_http.clone(),
            self.sources.credentialed_stub.clone(),
            self.sources.concurrency,
        )
    }
}
