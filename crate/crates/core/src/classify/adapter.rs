use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    classify_sentiment_with, classify_text, Lexicon, PatternSet, DEFAULT_PROPAGANDA_THRESHOLD,
    DEFAULT_SENTIMENT_THRESHOLD,
};
use crate::ingest::Post;
use crate::store::AnalysisKind;

pub const DEFAULT_ADAPTER_TIMEOUT: Duration = Duration::from_secs(30);
pub const DEFAULT_IN_FLIGHT: usize = 4;

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("adapter `{adapter}` is unreachable: {message}")]
    Unreachable { adapter: String, message: String },
    #[error("adapter `{adapter}` sent a bad response: {message}")]
    BadResponse { adapter: String, message: String },
    #[error("no adapter registered for {0}")]
    NotRegistered(String),
    #[error("adapter `{0}` cannot classify {1}")]
    Unsupported(String, AnalysisKind),
}

impl AdapterError {
    pub fn code(&self) -> &'static str {
        match self {
            AdapterError::Unreachable { .. } => "ADAPTER_UNREACHABLE",
            AdapterError::BadResponse { .. } => "BAD_ADAPTER_RESPONSE",
            AdapterError::NotRegistered(_) => "NOT_FOUND",
            AdapterError::Unsupported(..) => "UNSUPPORTED_KIND",
        }
    }
}

/// Where an adapter's labels come from.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Endpoint {
    /// The in-process lexicon or pattern baseline.
    Baseline,
    Http { url: String, token: Option<String> },
}

impl fmt::Debug for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Baseline => f.write_str("Baseline"),
            Endpoint::Http { url, token } => f
                .debug_struct("Http")
                .field("url", url)
                .field("token", &token.as_ref().map(|_| "<redacted>"))
                .finish(),
        }
    }
}

/// A classifier reachable in-process or over HTTP, with a cap on
/// concurrent calls.
#[derive(Debug, Clone)]
pub struct ClassifierAdapter {
    pub adapter_id: String,
    pub kind: AnalysisKind,
    pub endpoint: Endpoint,
    pub label_set: Vec<String>,
    pub timeout: Duration,
    in_flight: Arc<crate::limit::Limiter>,
}

impl ClassifierAdapter {
    pub fn baseline(kind: AnalysisKind) -> Self {
        Self::with_endpoint(format!("baseline_{kind}"), kind, Endpoint::Baseline)
    }

    pub fn http(adapter_id: impl Into<String>, kind: AnalysisKind, url: impl Into<String>, token: Option<String>) -> Self {
        Self::with_endpoint(
            adapter_id.into(),
            kind,
            Endpoint::Http {
                url: url.into(),
                token,
            },
        )
    }

    fn with_endpoint(adapter_id: String, kind: AnalysisKind, endpoint: Endpoint) -> Self {
        ClassifierAdapter {
            adapter_id,
            kind,
            endpoint,
            label_set: kind.label_set().iter().map(|s| s.to_string()).collect(),
            timeout: DEFAULT_ADAPTER_TIMEOUT,
            in_flight: Arc::new(crate::limit::Limiter::new(DEFAULT_IN_FLIGHT)),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_in_flight_limit(mut self, limit: usize) -> Self {
        self.in_flight = Arc::new(crate::limit::Limiter::new(limit));
        self
    }

    pub fn is_baseline(&self) -> bool {
        self.endpoint == Endpoint::Baseline
    }
}

/// One adapter per kind; registering a second one for a kind replaces the
/// default.
#[derive(Debug, Clone)]
pub struct AdapterRegistry {
    defaults: BTreeMap<AnalysisKind, ClassifierAdapter>,
}

impl Default for AdapterRegistry {
    fn default() -> Self {
        let mut defaults = BTreeMap::new();
        for kind in [AnalysisKind::Sentiment, AnalysisKind::Propaganda] {
            defaults.insert(kind, ClassifierAdapter::baseline(kind));
        }
        AdapterRegistry { defaults }
    }
}

impl AdapterRegistry {
    pub fn register(&mut self, adapter: ClassifierAdapter) {
        self.defaults.insert(adapter.kind, adapter);
    }

    pub fn default_for(&self, kind: AnalysisKind) -> Result<&ClassifierAdapter, AdapterError> {
        self.defaults
            .get(&kind)
            .ok_or_else(|| AdapterError::NotRegistered(kind.to_string()))
    }

    pub fn adapters(&self) -> impl Iterator<Item = &ClassifierAdapter> {
        self.defaults.values()
    }
}

/// Settings the in-process baselines read.
#[derive(Debug, Clone)]
pub struct Baselines {
    pub lexicon: Lexicon,
    pub patterns: PatternSet,
    pub sentiment_threshold: f64,
    pub propaganda_threshold: f64,
}

impl Default for Baselines {
    fn default() -> Self {
        Baselines {
            lexicon: Lexicon::builtin(),
            patterns: PatternSet::builtin(),
            sentiment_threshold: DEFAULT_SENTIMENT_THRESHOLD,
            propaganda_threshold: DEFAULT_PROPAGANDA_THRESHOLD,
        }
    }
}

/// Label for one batch item, or a marker for why it has none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ItemLabel {
    Labeled { id: String, label: String, score: f64 },
    Failed { id: String, error: String },
}

impl ItemLabel {
    pub fn id(&self) -> &str {
        match self {
            ItemLabel::Labeled { id, .. } | ItemLabel::Failed { id, .. } => id,
        }
    }
}

#[derive(Serialize)]
struct WireItem<'a> {
    id: &'a str,
    text: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    kind: AnalysisKind,
    items: Vec<WireItem<'a>>,
}

#[derive(Deserialize)]
struct WireLabel {
    id: String,
    label: String,
    score: f64,
}

#[derive(Deserialize)]
struct WireResponse {
    labels: Vec<WireLabel>,
}

/// Label a batch of posts, one entry per post in input order.
pub fn invoke_adapter(
    adapter: &ClassifierAdapter,
    posts: &[Post],
    baselines: &Baselines,
) -> Result<Vec<ItemLabel>, AdapterError> {
    match &adapter.endpoint {
        Endpoint::Baseline => run_baseline(adapter, posts, baselines),
        Endpoint::Http { url, token } => {
            let _permit = adapter.in_flight.acquire();
            call_http(adapter, url, token.as_deref(), posts)
        }
    }
}

fn run_baseline(
    adapter: &ClassifierAdapter,
    posts: &[Post],
    b: &Baselines,
) -> Result<Vec<ItemLabel>, AdapterError> {
    match adapter.kind {
        AnalysisKind::Sentiment => Ok(posts
            .iter()
            .map(|p| {
                let s = classify_sentiment_with(p, &b.lexicon, b.sentiment_threshold);
                ItemLabel::Labeled {
                    id: p.id.clone(),
                    label: s.label.as_str().to_string(),
                    score: s.score,
                }
            })
            .collect()),
        AnalysisKind::Propaganda => Ok(posts
            .iter()
            .map(|p| {
                let l = classify_text(&p.norm_text, &b.patterns, b.propaganda_threshold);
                ItemLabel::Labeled {
                    id: p.id.clone(),
                    label: if l.flag { "propaganda" } else { "not_propaganda" }.to_string(),
                    score: l.score,
                }
            })
            .collect()),
        other => Err(AdapterError::Unsupported(adapter.adapter_id.clone(), other)),
    }
}

fn call_http(
    adapter: &ClassifierAdapter,
    url: &str,
    token: Option<&str>,
    posts: &[Post],
) -> Result<Vec<ItemLabel>, AdapterError> {
    let bad = |message: String| AdapterError::BadResponse {
        adapter: adapter.adapter_id.clone(),
        message,
    };
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(adapter.timeout))
        .http_status_as_error(false)
        .build()
        .into();
    let body = WireRequest {
        kind: adapter.kind,
        items: posts
            .iter()
            .map(|p| WireItem {
                id: &p.id,
                text: &p.text,
            })
            .collect(),
    };
    let mut request = agent.post(url);
    if let Some(token) = token {
        request = request.header("Authorization", &format!("Bearer {token}"));
    }
    let mut response = request.send_json(&body).map_err(|e| AdapterError::Unreachable {
        adapter: adapter.adapter_id.clone(),
        message: e.to_string(),
    })?;
    let status = response.status();
    if !status.is_success() {
        return Err(bad(format!("HTTP status {}", status.as_u16())));
    }
    let parsed: WireResponse = response
        .body_mut()
        .read_json()
        .map_err(|e| bad(format!("undecodable body: {e}")))?;
    if parsed.labels.len() != posts.len() {
        return Err(bad(format!(
            "{} labels for {} items",
            parsed.labels.len(),
            posts.len()
        )));
    }

    let mut by_id: BTreeMap<String, WireLabel> = BTreeMap::new();
    for label in parsed.labels {
        by_id.entry(label.id.clone()).or_insert(label);
    }
    Ok(posts
        .iter()
        .map(|p| match by_id.remove(&p.id) {
            None => ItemLabel::Failed {
                id: p.id.clone(),
                error: "missing from adapter response".into(),
            },
            Some(l) if !adapter.label_set.contains(&l.label) => ItemLabel::Failed {
                id: p.id.clone(),
                error: format!("label `{}` outside the label set", l.label),
            },
            Some(l) if !l.score.is_finite() => ItemLabel::Failed {
                id: p.id.clone(),
                error: "non-finite score".into(),
            },
            Some(l) => ItemLabel::Labeled {
                id: l.id,
                label: l.label,
                score: l.score,
            },
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_dataset, PostSchema, SourceFormat};

    fn posts() -> Vec<Post> {
        let body = "id,text,timestamp\n1,a great day,2024-01-01\n2,awful terrible news,2024-01-01\n3,the weather,2024-01-01\n";
        parse_dataset(body.as_bytes(), SourceFormat::Csv, &PostSchema::default())
            .unwrap()
            .0
    }

    #[test]
    fn baseline_sentiment_keeps_order() {
        let reg = AdapterRegistry::default();
        let labels = invoke_adapter(
            reg.default_for(AnalysisKind::Sentiment).unwrap(),
            &posts(),
            &Baselines::default(),
        )
        .unwrap();
        let ids: Vec<_> = labels.iter().map(ItemLabel::id).collect();
        assert_eq!(ids, ["1", "2", "3"]);
        assert!(matches!(&labels[0], ItemLabel::Labeled { label, .. } if label == "positive"));
        assert!(matches!(&labels[1], ItemLabel::Labeled { label, .. } if label == "negative"));
        assert!(matches!(&labels[2], ItemLabel::Labeled { label, .. } if label == "neutral"));
    }

    #[test]
    fn one_default_per_kind() {
        let mut reg = AdapterRegistry::default();
        reg.register(ClassifierAdapter::http("ext", AnalysisKind::Sentiment, "http://x", None));
        assert_eq!(reg.adapters().count(), 2);
        assert_eq!(reg.default_for(AnalysisKind::Sentiment).unwrap().adapter_id, "ext");
        assert!(reg.default_for(AnalysisKind::Trends).is_err());
    }

    #[test]
    fn dead_port_is_unreachable() {
        let port = std::net::TcpListener::bind("127.0.0.1:0")
            .unwrap()
            .local_addr()
            .unwrap()
            .port();
        let adapter = ClassifierAdapter::http(
            "dead",
            AnalysisKind::Sentiment,
            format!("http://127.0.0.1:{port}/classify"),
            None,
        )
        .with_timeout(Duration::from_secs(2));
        let err = invoke_adapter(&adapter, &posts(), &Baselines::default()).unwrap_err();
        assert_eq!(err.code(), "ADAPTER_UNREACHABLE");
    }

    #[test]
    fn token_is_redacted_in_debug() {
        let adapter = ClassifierAdapter::http(
            "ext",
            AnalysisKind::Sentiment,
            "http://x",
            Some("s3cr3t-token".into()),
        );
        assert!(!format!("{adapter:?}").contains("s3cr3t-token"));
    }
}
