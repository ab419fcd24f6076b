//! Dataset ingestion: decoding uploads, schema validation, text
//! normalization, tokenization and dataset metadata.

mod lang;
mod metadata;
mod normalize;
mod parse;
mod schema;
mod stopwords;
mod tokenize;

use std::collections::BTreeMap;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lang::detect_language;
pub use metadata::{infer_metadata, DatasetMetadata, TimeRange};
pub use normalize::normalize_text;
pub use parse::{decode_records, parse_dataset, parse_timestamp, Ingestor};
pub(crate) use parse::{json_object_fields, json_scalar};
pub use schema::{FieldType, PostSchema};
pub use stopwords::Stopwords;
pub use tokenize::tokenize;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input is not valid UTF-8 (invalid byte at offset {offset})")]
    UndecodableInput { offset: usize },
    #[error("unknown format `{0}`; expected one of csv, tsv, json, jsonl")]
    UnknownFormat(String),
    #[error("malformed {format} document: {message}")]
    MalformedDocument { format: SourceFormat, message: String },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("dataset contains no posts")]
    EmptyDataset,
}

impl IngestError {
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::UndecodableInput { .. } => "UNDECODABLE_INPUT",
            IngestError::UnknownFormat(_) => "UNKNOWN_FORMAT",
            IngestError::MalformedDocument { .. } => "MALFORMED_DOCUMENT",
            IngestError::InvalidSchema(_) => "INVALID_SCHEMA",
            IngestError::EmptyDataset => "EMPTY_DATASET",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Csv,
    Tsv,
    Json,
    Jsonl,
}

impl SourceFormat {
    /// Guess the format from a file extension.
    pub fn from_extension(path: &std::path::Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?;
        ext.parse().ok()
    }
}

impl std::str::FromStr for SourceFormat {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(SourceFormat::Csv),
            "tsv" => Ok(SourceFormat::Tsv),
            "json" => Ok(SourceFormat::Json),
            "jsonl" | "ndjson" => Ok(SourceFormat::Jsonl),
            _ => Err(IngestError::UnknownFormat(s.to_string())),
        }
    }
}

impl std::fmt::Display for SourceFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SourceFormat::Csv => "csv",
            SourceFormat::Tsv => "tsv",
            SourceFormat::Json => "json",
            SourceFormat::Jsonl => "jsonl",
        })
    }
}

/// One undecoded row of an upload: field name to string value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    /// 1-based position of the row within its upload.
    pub row_index: usize,
    pub fields: BTreeMap<String, String>,
    pub source_format: SourceFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lang {
    Ar,
    En,
    Unknown,
}

impl Lang {
    pub fn as_str(&self) -> &'static str {
        match self {
            Lang::Ar => "ar",
            Lang::En => "en",
            Lang::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ar" => Some(Lang::Ar),
            "en" => Some(Lang::En),
            "unknown" => Some(Lang::Unknown),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Option<Self> {
        let ok = lat.is_finite()
            && lon.is_finite()
            && (-90.0..=90.0).contains(&lat)
            && (-180.0..=180.0).contains(&lon);
        ok.then_some(GeoPoint { lat, lon })
    }
}

/// A normalized social-media post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub text: String,
    pub norm_text: String,
    pub tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author: Option<String>,
    pub timestamp: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geo: Option<GeoPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mentions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub likes: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shares: Option<u64>,
    pub lang: Lang,
}

impl Post {
    pub fn engagement(&self) -> u64 {
        self.likes.unwrap_or(0) + self.shares.unwrap_or(0)
    }

    /// The post as an upload-format JSON object; feeding it back through
    /// [`parse_dataset`] reproduces the same `Post`.
    pub fn to_record_json(&self) -> serde_json::Value {
        let mut obj = serde_json::Map::new();
        obj.insert("id".into(), self.id.clone().into());
        obj.insert("text".into(), self.text.clone().into());
        obj.insert(
            "timestamp".into(),
            self.timestamp
                .to_rfc3339_opts(SecondsFormat::AutoSi, true)
                .into(),
        );
        if let Some(author) = &self.author {
            obj.insert("author".into(), author.clone().into());
        }
        if let Some(geo) = self.geo {
            obj.insert("lat".into(), geo.lat.into());
            obj.insert("lon".into(), geo.lon.into());
        }
        if let Some(parent) = &self.parent_id {
            obj.insert("parent_id".into(), parent.clone().into());
        }
        if !self.mentions.is_empty() {
            obj.insert("mentions".into(), self.mentions.clone().into());
        }
        if let Some(likes) = self.likes {
            obj.insert("likes".into(), likes.into());
        }
        if let Some(shares) = self.shares {
            obj.insert("shares".into(), shares.into());
        }
        obj.insert("lang".into(), self.lang.as_str().into());
        serde_json::Value::Object(obj)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RejectCode {
    MissingField,
    TypeMismatch,
    BadTimestamp,
    EmptyText,
    DupId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub row_index: usize,
    pub error_code: RejectCode,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub accepted: usize,
    pub rejected: Vec<Rejection>,
}

impl ValidationReport {
    pub fn total(&self) -> usize {
        self.accepted + self.rejected.len()
    }
}
