//! Hybrid persistence.
//!
//! Posts live in a schema-less document log (one JSONL file per dataset);
//! dataset records, post ids, jobs, results, annotations, lexicon versions
//! and the audit log live in an embedded relational database.
//!
//! On-disk layout under the data directory:
//!
//! ```text
//! <data>/marsad.db                 relational tables
//! <data>/<dataset_id>/posts.jsonl  posts of one dataset
//! ```

mod documents;
mod ids;
mod relational;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use documents::{DocumentStore, JsonlDocuments};
pub use ids::{AnnotationId, DatasetId, JobId};
pub use relational::Store;

use crate::engine::AnalysisPayload;
use crate::ingest::DatasetMetadata;
use crate::jobs::JobState;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{entity} `{id}` not found")]
    NotFound { entity: &'static str, id: String },
    #[error("dataset `{0}` does not exist")]
    ForeignKey(String),
    #[error("post `{post_id}` is not part of dataset `{dataset_id}`")]
    UnknownPost { dataset_id: String, post_id: String },
    #[error("label `{label}` is not valid for {kind} annotations")]
    InvalidLabel { kind: AnalysisKind, label: String },
    #[error("payload of kind {payload} stored under kind {kind}")]
    PayloadMismatch {
        kind: AnalysisKind,
        payload: AnalysisKind,
    },
    #[error("a {kind} job for dataset `{dataset_id}` is already queued or running")]
    DuplicateJob {
        dataset_id: String,
        kind: AnalysisKind,
    },
    #[error("job `{job_id}` is {state}")]
    JobState { job_id: String, state: JobState },
    #[error("a result for job `{0}` already exists")]
    DuplicateResult(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("database error: {0}")]
    Sql(#[from] rusqlite::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::NotFound { .. } => "NOT_FOUND",
            StoreError::ForeignKey(_) => "FOREIGN_KEY",
            StoreError::UnknownPost { .. } => "UNKNOWN_POST",
            StoreError::InvalidLabel { .. } => "INVALID_LABEL",
            StoreError::PayloadMismatch { .. } => "PAYLOAD_MISMATCH",
            StoreError::DuplicateJob { .. } => "DUPLICATE_JOB",
            StoreError::JobState { .. } => "ILLEGAL_TRANSITION",
            StoreError::DuplicateResult(_) => "DUPLICATE_RESULT",
            StoreError::Io(_) | StoreError::Sql(_) | StoreError::Serde(_) => "STORAGE_ERROR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisKind {
    Subtopics,
    Wordcloud,
    Sentiment,
    Propaganda,
    Trends,
    Spatial,
    Network,
    PostAnalysis,
}

impl AnalysisKind {
    pub const ALL: [AnalysisKind; 8] = [
        AnalysisKind::Subtopics,
        AnalysisKind::Wordcloud,
        AnalysisKind::Sentiment,
        AnalysisKind::Propaganda,
        AnalysisKind::Trends,
        AnalysisKind::Spatial,
        AnalysisKind::Network,
        AnalysisKind::PostAnalysis,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AnalysisKind::Subtopics => "subtopics",
            AnalysisKind::Wordcloud => "wordcloud",
            AnalysisKind::Sentiment => "sentiment",
            AnalysisKind::Propaganda => "propaganda",
            AnalysisKind::Trends => "trends",
            AnalysisKind::Spatial => "spatial",
            AnalysisKind::Network => "network",
            AnalysisKind::PostAnalysis => "post_analysis",
        }
    }

    /// Labels a human may assign when relabeling output of this kind.
    pub fn label_set(&self) -> &'static [&'static str] {
        match self {
            AnalysisKind::Sentiment => &["positive", "negative", "neutral"],
            AnalysisKind::Propaganda => &["propaganda", "not_propaganda"],
            _ => &[],
        }
    }
}

impl std::fmt::Display for AnalysisKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AnalysisKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AnalysisKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s || (s == "word_cloud" && *k == AnalysisKind::Wordcloud))
            .ok_or_else(|| format!("unknown analysis kind `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetStatus {
    Stored,
    Analyzing,
    Analyzed,
}

impl DatasetStatus {
    fn as_str(&self) -> &'static str {
        match self {
            DatasetStatus::Stored => "stored",
            DatasetStatus::Analyzing => "analyzing",
            DatasetStatus::Analyzed => "analyzed",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "stored" => Some(DatasetStatus::Stored),
            "analyzing" => Some(DatasetStatus::Analyzing),
            "analyzed" => Some(DatasetStatus::Analyzed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub dataset_id: DatasetId,
    pub name: String,
    pub created_at: DateTime<Utc>,
    pub metadata: DatasetMetadata,
    pub status: DatasetStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResult {
    pub job_id: JobId,
    pub dataset_id: DatasetId,
    pub kind: AnalysisKind,
    pub payload: AnalysisPayload,
    pub produced_at: DateTime<Utc>,
}

/// A human relabeling of one post's machine label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub annotation_id: AnnotationId,
    pub dataset_id: DatasetId,
    pub post_id: String,
    pub kind: AnalysisKind,
    pub old_label: String,
    pub new_label: String,
    pub annotator: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewAnnotation {
    pub dataset_id: DatasetId,
    pub post_id: String,
    pub kind: AnalysisKind,
    pub old_label: String,
    pub new_label: String,
    pub annotator: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub at: DateTime<Utc>,
    pub principal: String,
    pub action: String,
    pub target: Option<String>,
}
