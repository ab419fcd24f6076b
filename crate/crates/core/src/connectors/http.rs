use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::mock::fixture_records;
use super::{ConnectorError, Credentials, MockSource, SearchRequest, Source, SourceDescriptor};
use crate::ingest::{json_object_fields, json_scalar, RawRecord, SourceFormat};

/// Post field name → location in a response object. A location starting
/// with `/` is a JSON pointer, anything else a top-level key.
pub type FieldMap = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpSourceConfig {
    /// URL with `{query}` and `{limit}` placeholders.
    pub url_template: Option<String>,
    pub field_map: FieldMap,
    pub timeout_secs: u64,
}

impl Default for HttpSourceConfig {
    fn default() -> Self {
        HttpSourceConfig {
            url_template: None,
            field_map: FieldMap::new(),
            timeout_secs: 30,
        }
    }
}

/// JSON-over-HTTP source. In credentialed mode the `access_token`
/// credential is sent as a bearer token.
pub struct HttpSource {
    descriptor: SourceDescriptor,
    config: HttpSourceConfig,
    /// Served when no URL is configured.
    offline: Option<MockSource>,
}

impl HttpSource {
    pub fn new(descriptor: SourceDescriptor, config: HttpSourceConfig) -> Self {
        HttpSource {
            descriptor,
            config,
            offline: None,
        }
    }

    pub fn generic(config: HttpSourceConfig) -> Self {
        Self::new(SourceDescriptor::free("generic_http", "Generic JSON endpoint"), config)
    }

    /// Credentialed stand-in; without a configured URL it answers from the
    /// local fixture once the credential check has passed.
    pub fn credentialed_stub(config: Option<HttpSourceConfig>) -> Self {
        let descriptor = SourceDescriptor::credentialed("credentialed_stub", "Credentialed platform (stub)", &["access_token"]);
        let offline = config.is_none().then(|| MockSource::new(descriptor.clone(), fixture_records()));
        HttpSource {
            descriptor,
            config: config.unwrap_or_default(),
            offline,
        }
    }

    fn url(&self, template: &str, request: &SearchRequest) -> String {
        let query: String = url::form_urlencoded::byte_serialize(request.query.as_bytes()).collect();
        template
            .replace("{query}", &query)
            .replace("{limit}", &request.limit.to_string())
    }

    fn map_item(&self, item: &serde_json::Value) -> Option<BTreeMap<String, String>> {
        if !item.is_object() {
            return None;
        }
        let mut fields = json_object_fields(item);
        for (target, location) in &self.config.field_map {
            let value = if location.starts_with('/') {
                item.pointer(location)
            } else {
                item.get(location)
            };
            match value.and_then(json_scalar) {
                Some(v) => fields.insert(target.clone(), v),
                None => fields.remove(target),
            };
        }
        Some(fields)
    }
}

impl Source for HttpSource {
    fn descriptor(&self) -> &SourceDescriptor {
        &self.descriptor
    }

    fn fetch(&self, request: &SearchRequest, credentials: Option<&Credentials>) -> Result<Vec<RawRecord>, ConnectorError> {
        let id = &self.descriptor.source_id;
        let Some(template) = &self.config.url_template else {
            return match &self.offline {
                Some(mock) => Ok(mock.matching(&request.query)),
                None => Err(ConnectorError::Unreachable {
                    source_id: id.clone(),
                    message: "no url_template configured".into(),
                }),
            };
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(self.config.timeout_secs.max(1))))
            .http_status_as_error(false)
            .build()
            .into();
        let mut call = agent.get(&self.url(template, request));
        if let Some(token) = credentials.and_then(|c| c.get("access_token")) {
            call = call.header("Authorization", &format!("Bearer {token}"));
        }
        let mut response = call.call().map_err(|e| ConnectorError::Unreachable {
            source_id: id.clone(),
            message: e.to_string(),
        })?;
        match response.status().as_u16() {
            429 => return Err(ConnectorError::RateLimited(id.clone())),
            s if !(200..300).contains(&s) => {
                return Err(ConnectorError::Unreachable {
                    source_id: id.clone(),
                    message: format!("HTTP status {s}"),
                })
            }
            _ => {}
        }
        let bad = |message: String| ConnectorError::BadResponse {
            source_id: id.clone(),
            message,
        };
        let body: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| bad(format!("undecodable body: {e}")))?;
        let serde_json::Value::Array(items) = body else {
            return Err(bad("expected a JSON array".into()));
        };
        items
            .iter()
            .enumerate()
            .map(|(i, item)| {
                let fields = self
                    .map_item(item)
                    .ok_or_else(|| bad(format!("element {} is not an object", i + 1)))?;
                Ok(RawRecord {
                    row_index: i + 1,
                    fields,
                    source_format: SourceFormat::Json,
                })
            })
            .collect()
    }
}
