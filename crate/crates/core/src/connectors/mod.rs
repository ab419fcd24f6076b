//! Pluggable online data sources.
//!
//! A source is either free (keyless) or credentialed. Every search returns
//! [`RawRecord`]s that go through the same validation path as file uploads;
//! nothing is stored until the caller ingests them.

mod http;
mod mock;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{parse_timestamp, RawRecord};
use crate::limit::Limiter;

pub use http::{FieldMap, HttpSource, HttpSourceConfig};
pub use mock::MockSource;

pub const DEFAULT_SOURCE_CONCURRENCY: usize = 2;
pub const MAX_SEARCH_LIMIT: usize = 1000;
const REDACTED: &str = "[redacted]";

#[derive(Debug, Error)]
pub enum ConnectorError {
    #[error("unknown source `{0}`")]
    UnknownSource(String),
    #[error("invalid search parameters: {0}")]
    InvalidParams(String),
    #[error("source `{0}` requires credentials")]
    CredentialsRequired(String),
    #[error("source `{0}` is keyless and does not accept credentials")]
    CredentialsNotAccepted(String),
    #[error("source `{source_id}` unreachable: {message}")]
    Unreachable { source_id: String, message: String },
    #[error("source `{0}` is rate limiting requests")]
    RateLimited(String),
    #[error("source `{source_id}` sent an unusable response: {message}")]
    BadResponse { source_id: String, message: String },
    #[error("source `{0}` is already registered")]
    Duplicate(String),
    #[error("invalid source descriptor: {0}")]
    BadDescriptor(String),
}

impl ConnectorError {
    pub fn code(&self) -> &'static str {
        match self {
            ConnectorError::UnknownSource(_) => "NOT_FOUND",
            ConnectorError::InvalidParams(_) => "INVALID_PARAMS",
            ConnectorError::CredentialsRequired(_) => "CREDENTIALS_REQUIRED",
            ConnectorError::CredentialsNotAccepted(_) => "CREDENTIALS_NOT_ACCEPTED",
            ConnectorError::Unreachable { .. } => "SOURCE_UNREACHABLE",
            ConnectorError::RateLimited(_) => "RATE_LIMITED",
            ConnectorError::BadResponse { .. } => "BAD_SOURCE_RESPONSE",
            ConnectorError::Duplicate(_) => "DUPLICATE_SOURCE",
            ConnectorError::BadDescriptor(_) => "BAD_DESCRIPTOR",
        }
    }

    /// Replace every credential value that leaked into a message.
    fn scrub(self, credentials: Option<&Credentials>) -> Self {
        let Some(creds) = credentials else {
            return self;
        };
        let clean = |m: String| creds.scrub(&m);
        match self {
            ConnectorError::Unreachable { source_id, message } => ConnectorError::Unreachable {
                source_id,
                message: clean(message),
            },
            ConnectorError::BadResponse { source_id, message } => ConnectorError::BadResponse {
                source_id,
                message: clean(message),
            },
            ConnectorError::InvalidParams(m) => ConnectorError::InvalidParams(clean(m)),
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceMode {
    Free,
    Credentialed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamType {
    String,
    Integer,
    Timestamp,
    Secret,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub param_type: ParamType,
    pub required: bool,
}

impl ParamSpec {
    pub fn new(name: &str, param_type: ParamType, required: bool) -> Self {
        ParamSpec {
            name: name.to_string(),
            param_type,
            required,
        }
    }
}

/// What a source is and which inputs it takes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDescriptor {
    pub source_id: String,
    pub display_name: String,
    pub mode: SourceMode,
    pub params: Vec<ParamSpec>,
    /// Empty for free sources.
    pub credentials: Vec<ParamSpec>,
}

impl SourceDescriptor {
    /// The search parameters every source accepts.
    pub fn standard_params() -> Vec<ParamSpec> {
        vec![
            ParamSpec::new("query", ParamType::String, true),
            ParamSpec::new("limit", ParamType::Integer, true),
            ParamSpec::new("since", ParamType::Timestamp, false),
            ParamSpec::new("until", ParamType::Timestamp, false),
        ]
    }

    pub fn free(source_id: &str, display_name: &str) -> Self {
        SourceDescriptor {
            source_id: source_id.to_string(),
            display_name: display_name.to_string(),
            mode: SourceMode::Free,
            params: Self::standard_params(),
            credentials: Vec::new(),
        }
    }

    pub fn credentialed(source_id: &str, display_name: &str, fields: &[&str]) -> Self {
        SourceDescriptor {
            source_id: source_id.to_string(),
            display_name: display_name.to_string(),
            mode: SourceMode::Credentialed,
            params: Self::standard_params(),
            credentials: fields
                .iter()
                .map(|f| ParamSpec::new(f, ParamType::Secret, true))
                .collect(),
        }
    }

    /// Structural check of the descriptor against the descriptor rules.
    pub fn validate(&self) -> Result<(), ConnectorError> {
        let bad = |m: String| Err(ConnectorError::BadDescriptor(format!("{}: {m}", self.source_id)));
        let valid_id = |s: &str| {
            !s.is_empty() && s.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
        };
        if !valid_id(&self.source_id) {
            return bad("source_id must be non-empty [a-z0-9_]".into());
        }
        if self.display_name.trim().is_empty() {
            return bad("empty display name".into());
        }
        for required in ["query", "limit"] {
            if !self.params.iter().any(|p| p.name == required && p.required) {
                return bad(format!("missing required param `{required}`"));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for p in self.params.iter().chain(&self.credentials) {
            if !seen.insert(p.name.as_str()) {
                return bad(format!("field `{}` declared twice", p.name));
            }
        }
        if self.params.iter().any(|p| p.param_type == ParamType::Secret) {
            return bad("secrets belong in the credential schema".into());
        }
        match self.mode {
            SourceMode::Free if !self.credentials.is_empty() => {
                bad("free source declares credential fields".into())
            }
            SourceMode::Credentialed if !self.credentials.iter().any(|c| c.required) => {
                bad("credentialed source declares no required credential".into())
            }
            _ => Ok(()),
        }
    }
}

/// Secret key/value pairs passed through to a credentialed source.
///
/// Never serialized and redacted in `Debug`.
#[derive(Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(transparent)]
pub struct Credentials(BTreeMap<String, String>);

impl Credentials {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: &str) -> Self {
        self.0.insert(key.to_string(), value.to_string());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.0.values().all(|v| v.is_empty())
    }

    pub fn scrub(&self, text: &str) -> String {
        let mut out = text.to_string();
        for v in self.0.values().filter(|v| !v.is_empty()) {
            out = out.replace(v.as_str(), REDACTED);
        }
        out
    }
}

impl fmt::Debug for Credentials {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.0.keys().map(|k| (k, REDACTED)))
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchRequest {
    pub query: String,
    pub limit: usize,
    #[serde(default)]
    pub since: Option<DateTime<Utc>>,
    #[serde(default)]
    pub until: Option<DateTime<Utc>>,
}

impl SearchRequest {
    pub fn new(query: impl Into<String>, limit: usize) -> Self {
        SearchRequest {
            query: query.into(),
            limit,
            since: None,
            until: None,
        }
    }

    fn validate(&self) -> Result<(), ConnectorError> {
        if self.query.trim().is_empty() {
            return Err(ConnectorError::InvalidParams("query must not be empty".into()));
        }
        if !(1..=MAX_SEARCH_LIMIT).contains(&self.limit) {
            return Err(ConnectorError::InvalidParams(format!(
                "limit must be between 1 and {MAX_SEARCH_LIMIT}"
            )));
        }
        if let (Some(a), Some(b)) = (self.since, self.until) {
            if a > b {
                return Err(ConnectorError::InvalidParams("since is after until".into()));
            }
        }
        Ok(())
    }

    fn in_range(&self, record: &RawRecord) -> bool {
        let Some(ts) = record.fields.get("timestamp").and_then(|t| parse_timestamp(t)) else {
            return true;
        };
        self.since.is_none_or(|s| ts >= s) && self.until.is_none_or(|u| ts <= u)
    }
}

/// A data source. Implementations receive credentials only in credentialed
/// mode, after the registry has checked them.
pub trait Source: Send + Sync {
    fn descriptor(&self) -> &SourceDescriptor;
    fn fetch(
        &self,
        request: &SearchRequest,
        credentials: Option<&Credentials>,
    ) -> Result<Vec<RawRecord>, ConnectorError>;
}

struct Entry {
    source: Arc<dyn Source>,
    limiter: Arc<Limiter>,
}

/// Registered sources keyed by id.
pub struct SourceRegistry {
    sources: BTreeMap<String, Entry>,
    concurrency: usize,
}

impl fmt::Debug for SourceRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SourceRegistry")
            .field("sources", &self.sources.keys().collect::<Vec<_>>())
            .field("concurrency", &self.concurrency)
            .finish()
    }
}

impl SourceRegistry {
    pub fn empty(concurrency: usize) -> Self {
        SourceRegistry {
            sources: BTreeMap::new(),
            concurrency: concurrency.max(1),
        }
    }

    /// `mock_local`, `generic_http` and `credentialed_stub`.
    pub fn builtin(generic: HttpSourceConfig, credentialed: Option<HttpSourceConfig>) -> Self {
        Self::builtin_with_concurrency(generic, credentialed, DEFAULT_SOURCE_CONCURRENCY)
    }

    pub fn builtin_with_concurrency(
        generic: HttpSourceConfig,
        credentialed: Option<HttpSourceConfig>,
        concurrency: usize,
    ) -> Self {
        let mut r = Self::empty(concurrency);
        let sources: [Arc<dyn Source>; 3] = [
            Arc::new(MockSource::builtin()),
            Arc::new(HttpSource::generic(generic)),
            Arc::new(HttpSource::credentialed_stub(credentialed)),
        ];
        for s in sources {
            r.register(s).expect("built-in sources are valid and distinct");
        }
        r
    }

    pub fn register(&mut self, source: Arc<dyn Source>) -> Result<(), ConnectorError> {
        let d = source.descriptor();
        d.validate()?;
        if self.sources.contains_key(&d.source_id) {
            return Err(ConnectorError::Duplicate(d.source_id.clone()));
        }
        self.sources.insert(
            d.source_id.clone(),
            Entry {
                source,
                limiter: Arc::new(Limiter::new(self.concurrency)),
            },
        );
        Ok(())
    }

    pub fn list_sources(&self) -> Vec<SourceDescriptor> {
        self.sources.values().map(|e| e.source.descriptor().clone()).collect()
    }

    pub fn descriptor(&self, source_id: &str) -> Option<&SourceDescriptor> {
        self.sources.get(source_id).map(|e| e.source.descriptor())
    }

    /// Query a source. Records come back renumbered from 1, filtered to the
    /// requested date range and capped at `limit`.
    pub fn search(
        &self,
        source_id: &str,
        request: &SearchRequest,
        credentials: Option<&Credentials>,
    ) -> Result<Vec<RawRecord>, ConnectorError> {
        let entry = self
            .sources
            .get(source_id)
            .ok_or_else(|| ConnectorError::UnknownSource(source_id.to_string()))?;
        let d = entry.source.descriptor();
        request.validate()?;
        let creds = credentials.filter(|c| !c.is_empty());
        match d.mode {
            SourceMode::Free if creds.is_some() => {
                return Err(ConnectorError::CredentialsNotAccepted(source_id.to_string()));
            }
            SourceMode::Credentialed => {
                let present = |f: &ParamSpec| creds.and_then(|c| c.get(&f.name)).is_some_and(|v| !v.is_empty());
                if !d.credentials.iter().filter(|f| f.required).all(present) {
                    return Err(ConnectorError::CredentialsRequired(source_id.to_string()));
                }
            }
            SourceMode::Free => {}
        }
        tracing::info!(source = source_id, limit = request.limit, "source search");
        let fetched = {
            let _permit = entry.limiter.acquire();
            entry.source.fetch(request, creds).map_err(|e| e.scrub(creds))?
        };
        Ok(fetched
            .into_iter()
            .filter(|r| request.in_range(r))
            .take(request.limit)
            .enumerate()
            .map(|(i, mut r)| {
                r.row_index = i + 1;
                r
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Ingestor, PostSchema, SourceFormat, Stopwords};

    fn registry() -> SourceRegistry {
        SourceRegistry::builtin(HttpSourceConfig::default(), None)
    }

    #[test]
    fn three_builtin_sources() {
        let ids: Vec<_> = registry().list_sources().into_iter().map(|d| d.source_id).collect();
        assert_eq!(ids, ["credentialed_stub", "generic_http", "mock_local"]);
    }

    #[test]
    fn descriptors_pass_their_own_rules() {
        for d in registry().list_sources() {
            d.validate().unwrap();
            let json = serde_json::to_value(&d).unwrap();
            let back: SourceDescriptor = serde_json::from_value(json).unwrap();
            assert_eq!(back, d);
            back.validate().unwrap();
        }
    }

    #[test]
    fn bad_descriptors_rejected() {
        let mut d = SourceDescriptor::free("x", "X");
        d.credentials.push(ParamSpec::new("token", ParamType::Secret, true));
        assert_eq!(d.validate().unwrap_err().code(), "BAD_DESCRIPTOR");
        let mut d = SourceDescriptor::credentialed("y", "Y", &["token"]);
        d.credentials.clear();
        assert!(d.validate().is_err());
        let mut d = SourceDescriptor::free("z", "Z");
        d.params.retain(|p| p.name != "limit");
        assert!(d.validate().is_err());
        assert!(SourceDescriptor::free("Bad Id", "B").validate().is_err());
    }

    struct Custom(SourceDescriptor);

    impl Source for Custom {
        fn descriptor(&self) -> &SourceDescriptor {
            &self.0
        }
        fn fetch(&self, _: &SearchRequest, _: Option<&Credentials>) -> Result<Vec<RawRecord>, ConnectorError> {
            Ok(Vec::new())
        }
    }

    #[test]
    fn custom_source_appears() {
        let mut r = registry();
        r.register(Arc::new(Custom(SourceDescriptor::free("news_feed", "News")))).unwrap();
        assert_eq!(r.list_sources().len(), 4);
        assert!(r.descriptor("news_feed").is_some());
        let dup = r.register(Arc::new(Custom(SourceDescriptor::free("news_feed", "News"))));
        assert_eq!(dup.unwrap_err().code(), "DUPLICATE_SOURCE");
    }

    #[test]
    fn mock_doha_five() {
        let recs = registry().search("mock_local", &SearchRequest::new("doha", 5), None).unwrap();
        assert_eq!(recs.len(), 5);
        for (i, r) in recs.iter().enumerate() {
            assert_eq!(r.row_index, i + 1);
            assert!(r.fields["text"].to_lowercase().contains("doha"));
        }
        let ingestor = Ingestor::new(PostSchema::default(), Stopwords::builtin()).unwrap();
        let (posts, report) = ingestor.validate_records(recs);
        assert_eq!(posts.len(), 5);
        assert!(report.rejected.is_empty());
        assert!(posts.iter().all(|p| p.text.to_lowercase().contains("doha")));
    }

    #[test]
    fn date_range_filters() {
        let mut req = SearchRequest::new("doha", 100);
        req.since = Some("2024-03-05T00:00:00Z".parse().unwrap());
        let recs = registry().search("mock_local", &req, None).unwrap();
        assert!(!recs.is_empty());
        assert!(recs.iter().all(|r| r.fields["timestamp"].as_str() >= "2024-03-05"));
    }

    #[test]
    fn stub_without_token() {
        let err = registry()
            .search("credentialed_stub", &SearchRequest::new("doha", 3), None)
            .unwrap_err();
        assert_eq!(err.code(), "CREDENTIALS_REQUIRED");
        let empty = Credentials::new().with("access_token", "");
        let err = registry()
            .search("credentialed_stub", &SearchRequest::new("doha", 3), Some(&empty))
            .unwrap_err();
        assert_eq!(err.code(), "CREDENTIALS_REQUIRED");
    }

    #[test]
    fn stub_with_token_serves_fixture() {
        let creds = Credentials::new().with("access_token", "s3cret-value");
        let recs = registry()
            .search("credentialed_stub", &SearchRequest::new("doha", 3), Some(&creds))
            .unwrap();
        assert_eq!(recs.len(), 3);
        assert!(recs.iter().all(|r| r.source_format == SourceFormat::Jsonl));
        assert!(!format!("{recs:?}").contains("s3cret-value"));
    }

    #[test]
    fn free_source_rejects_credentials() {
        let creds = Credentials::new().with("access_token", "abc");
        let err = registry()
            .search("mock_local", &SearchRequest::new("doha", 3), Some(&creds))
            .unwrap_err();
        assert_eq!(err.code(), "CREDENTIALS_NOT_ACCEPTED");
    }

    #[test]
    fn params_checked() {
        let r = registry();
        for req in [SearchRequest::new("", 5), SearchRequest::new("x", 0), SearchRequest::new("x", 5000)] {
            assert_eq!(r.search("mock_local", &req, None).unwrap_err().code(), "INVALID_PARAMS");
        }
        assert_eq!(
            r.search("nope", &SearchRequest::new("x", 1), None).unwrap_err().code(),
            "NOT_FOUND"
        );
    }

    #[test]
    fn credentials_redacted() {
        let c = Credentials::new().with("access_token", "tok-123");
        assert!(!format!("{c:?}").contains("tok-123"));
        assert_eq!(c.scrub("bad tok-123 here"), "bad [redacted] here");
        let e = ConnectorError::Unreachable {
            source_id: "s".into(),
            message: "GET https://x/?t=tok-123 failed".into(),
        }
        .scrub(Some(&c));
        assert!(!e.to_string().contains("tok-123"));
    }
}
