//! The analysis engine shared by the HTTP service and the CLI.

mod analyze;
mod export;
mod payload;

use std::sync::{Arc, Mutex};

use chrono::Utc;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{
    apply_feedback, AdapterError, AdapterRegistry, Baselines, Lexicon, LexiconChange, PatternSet,
    DEFAULT_PROPAGANDA_THRESHOLD, DEFAULT_SENTIMENT_THRESHOLD,
};
use crate::ingest::{
    infer_metadata, DatasetMetadata, IngestError, Ingestor, Post, PostSchema, RawRecord,
    SourceFormat, Stopwords, ValidationReport,
};
use crate::jobs::{AnalysisJob, JobError, JobState, DEFAULT_PRIORITY};
use crate::network::NetworkError;
use crate::store::{AnalysisKind, AnalysisResult, DatasetId, DatasetStatus, JobId, Store, StoreError};
use crate::topics::TopicError;
use crate::trends::{Gazetteer, TrendError};

pub use analyze::{analyze, AnalysisContext, AnalysisSettings};
pub use export::{export_payload, ExportFormat};
pub use payload::*;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("no row passed validation ({} rejected)", report.rejected.len())]
    NothingAccepted { report: ValidationReport },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Job(#[from] JobError),
    #[error(transparent)]
    Topic(#[from] TopicError),
    #[error(transparent)]
    Trend(#[from] TrendError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Adapter(#[from] AdapterError),
    #[error("job `{job_id}` has no result (state {state})")]
    NoResult { job_id: String, state: JobState },
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl EngineError {
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::NothingAccepted { .. } => "VALIDATION_FAILED",
            EngineError::Ingest(e) => e.code(),
            EngineError::Store(e) => e.code(),
            EngineError::Job(e) => e.code(),
            EngineError::Topic(e) => e.code(),
            EngineError::Trend(e) => e.code(),
            EngineError::Network(e) => e.code(),
            EngineError::Adapter(e) => e.code(),
            EngineError::NoResult { .. } => "NO_RESULT",
            EngineError::Serde(_) | EngineError::Csv(_) | EngineError::Internal(_) => "INTERNAL",
        }
    }

    /// True when the caller's input, not the system, is at fault.
    pub fn is_user_error(&self) -> bool {
        match self {
            EngineError::Store(e) => !matches!(e, StoreError::Io(_) | StoreError::Sql(_) | StoreError::Serde(_)),
            EngineError::Job(JobError::Store(e)) => {
                !matches!(e, StoreError::Io(_) | StoreError::Sql(_) | StoreError::Serde(_))
            }
            EngineError::Adapter(AdapterError::Unreachable { .. } | AdapterError::BadResponse { .. }) => false,
            EngineError::Serde(_) | EngineError::Csv(_) | EngineError::Internal(_) => false,
            _ => true,
        }
    }

    pub fn is_not_found(&self) -> bool {
        matches!(
            self,
            EngineError::Store(StoreError::NotFound { .. } | StoreError::ForeignKey(_))
                | EngineError::Job(JobError::NotFound(_) | JobError::UnknownDataset(_))
        )
    }
}

/// Engine tunables; defaults match the shipped baselines.
#[derive(Debug, Clone)]
pub struct EngineOptions {
    pub analysis: AnalysisSettings,
    pub adapters: AdapterRegistry,
    pub patterns: PatternSet,
    pub gazetteer: Gazetteer,
    pub stopwords: Stopwords,
    pub sentiment_threshold: f64,
    pub propaganda_threshold: f64,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            analysis: AnalysisSettings::default(),
            adapters: AdapterRegistry::default(),
            patterns: PatternSet::builtin(),
            gazetteer: Gazetteer::builtin(),
            stopwords: Stopwords::builtin(),
            sentiment_threshold: DEFAULT_SENTIMENT_THRESHOLD,
            propaganda_threshold: DEFAULT_PROPAGANDA_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestOutcome {
    pub dataset_id: DatasetId,
    pub validation_report: ValidationReport,
    pub metadata: DatasetMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackReport {
    pub dataset_id: DatasetId,
    pub previous_version: u32,
    pub lexicon_version: u32,
    pub annotations_used: usize,
    pub changes: Vec<LexiconChange>,
}

pub struct Engine {
    store: Arc<Store>,
    options: EngineOptions,
    lexicon_lock: Mutex<()>,
}

impl Engine {
    pub fn new(store: Arc<Store>, options: EngineOptions) -> Self {
        Engine {
            store,
            options,
            lexicon_lock: Mutex::new(()),
        }
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    pub fn options(&self) -> &EngineOptions {
        &self.options
    }

    /// Validate raw bytes and store the accepted posts as a new dataset.
    pub fn ingest(
        &self,
        name: &str,
        bytes: &[u8],
        format: SourceFormat,
        schema: &PostSchema,
    ) -> Result<IngestOutcome, EngineError> {
        let ingestor = Ingestor::new(schema.clone(), self.options.stopwords.clone())?;
        let (posts, report) = ingestor.parse(bytes, format)?;
        self.store_posts(name, posts, report)
    }

    /// Validate already-decoded records, e.g. from a connector search.
    pub fn ingest_records(
        &self,
        name: &str,
        records: Vec<RawRecord>,
        schema: &PostSchema,
    ) -> Result<IngestOutcome, EngineError> {
        let ingestor = Ingestor::new(schema.clone(), self.options.stopwords.clone())?;
        let (posts, report) = ingestor.validate_records(records);
        self.store_posts(name, posts, report)
    }

    fn store_posts(
        &self,
        name: &str,
        posts: Vec<Post>,
        report: ValidationReport,
    ) -> Result<IngestOutcome, EngineError> {
        if posts.is_empty() {
            return Err(EngineError::NothingAccepted { report });
        }
        let metadata = infer_metadata(&posts)?;
        let dataset_id = self.store.put_dataset(name, &posts, &metadata)?;
        Ok(IngestOutcome {
            dataset_id,
            validation_report: report,
            metadata,
        })
    }

    /// The newest lexicon version, seeding the shipped one on first use.
    pub fn current_lexicon(&self) -> Result<Lexicon, EngineError> {
        if let Some(lex) = self.store.latest_lexicon()? {
            return Ok(lex);
        }
        let builtin = Lexicon::builtin();
        self.store.put_lexicon(&builtin)?;
        Ok(self.store.latest_lexicon()?.unwrap_or(builtin))
    }

    pub fn baselines(&self) -> Result<Baselines, EngineError> {
        Ok(Baselines {
            lexicon: self.current_lexicon()?,
            patterns: self.options.patterns.clone(),
            sentiment_threshold: self.options.sentiment_threshold,
            propaganda_threshold: self.options.propaganda_threshold,
        })
    }

    /// Run one analysis over a stored dataset without touching the queue.
    pub fn compute(&self, dataset: &DatasetId, kind: AnalysisKind, seed: u64) -> Result<AnalysisPayload, EngineError> {
        let (posts, _) = self.store.get_dataset(dataset)?;
        self.compute_on(&posts, kind, seed)
    }

    pub fn compute_on(&self, posts: &[Post], kind: AnalysisKind, seed: u64) -> Result<AnalysisPayload, EngineError> {
        let baselines = self.baselines()?;
        let ctx = AnalysisContext {
            settings: &self.options.analysis,
            adapters: &self.options.adapters,
            baselines: &baselines,
            gazetteer: &self.options.gazetteer,
        };
        analyze(posts, kind, seed, &ctx)
    }

    /// Worker entry point: failures become the job's error message.
    pub fn run_job(&self, job: &AnalysisJob) -> Result<AnalysisPayload, String> {
        self.compute(&job.dataset_id, job.kind, job.seed)
            .map_err(|e| format!("{}: {e}", e.code()))
    }

    /// Run an analysis synchronously and record it as a finished job, so it
    /// can be exported like any queued result.
    pub fn analyze_now(
        &self,
        dataset: &DatasetId,
        kind: AnalysisKind,
        seed: u64,
    ) -> Result<AnalysisResult, EngineError> {
        let now = Utc::now();
        let job = AnalysisJob {
            job_id: JobId::generate(),
            dataset_id: dataset.clone(),
            kind,
            priority: DEFAULT_PRIORITY,
            state: JobState::Running,
            submitted_at: now,
            started_at: Some(now),
            finished_at: None,
            error: None,
            webhook: None,
            seed,
            attempts: 1,
        };
        self.store.insert_job(&job).map_err(JobError::from)?;
        self.store.advance_dataset_status(dataset, DatasetStatus::Analyzing)?;
        let outcome = self.compute(dataset, kind, seed);
        let finished = match &outcome {
            Ok(payload) => {
                let result = AnalysisResult {
                    job_id: job.job_id.clone(),
                    dataset_id: dataset.clone(),
                    kind,
                    payload: payload.clone(),
                    produced_at: Utc::now(),
                };
                self.store.finish_job(&job.job_id, Ok(&result), Utc::now())?;
                Ok(result)
            }
            Err(e) => {
                let message = format!("{}: {e}", e.code());
                self.store.finish_job(&job.job_id, Err(&message), Utc::now())?;
                Err(())
            }
        };
        self.store.advance_dataset_status(dataset, DatasetStatus::Analyzed)?;
        match (finished, outcome) {
            (Ok(result), _) => Ok(result),
            (Err(()), Err(e)) => Err(e),
            (Err(()), Ok(_)) => Err(EngineError::Internal("unreachable job outcome".into())),
        }
    }

    /// Export the result of a finished job.
    pub fn export(&self, job_id: &JobId, format: ExportFormat) -> Result<Vec<u8>, EngineError> {
        let job = self.store.get_job(job_id)?;
        let result = self
            .store
            .result_for_job(job_id)?
            .ok_or_else(|| EngineError::NoResult {
                job_id: job_id.to_string(),
                state: job.state,
            })?;
        export_payload(&result.payload, format)
    }

    /// Fold a dataset's sentiment relabels into the next lexicon version.
    pub fn apply_feedback(&self, dataset: &DatasetId) -> Result<FeedbackReport, EngineError> {
        let _guard = self.lexicon_lock.lock().unwrap_or_else(|p| p.into_inner());
        let (posts, _) = self.store.get_dataset(dataset)?;
        let annotations = self.store.list_annotations(dataset)?;
        let current = self.current_lexicon()?;
        let outcome = apply_feedback(&annotations, &posts, &current);
        if outcome.changed() {
            self.store.put_lexicon(&outcome.lexicon)?;
        }
        Ok(FeedbackReport {
            dataset_id: dataset.clone(),
            previous_version: current.version,
            lexicon_version: outcome.lexicon.version,
            annotations_used: outcome.annotations_used,
            changes: outcome.changes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::NewAnnotation;

    const BODY: &str = r#"{"id":"1","text":"A great day in Doha","timestamp":"2024-01-01T10:00:00Z","author":"amal"}
{"id":"2","text":"Terrible awful traffic in Cairo","timestamp":"2024-01-02T10:00:00Z","author":"badr","parent_id":"1"}
{"id":"3","text":"The match tonight","timestamp":"2024-01-02T12:00:00Z","author":"amal","mentions":"@badr"}
"#;

    fn engine() -> (tempfile::TempDir, Engine, DatasetId) {
        let dir = tempfile::tempdir().unwrap();
        let store = Arc::new(Store::open(dir.path()).unwrap());
        let engine = Engine::new(store, EngineOptions::default());
        let out = engine
            .ingest("t", BODY.as_bytes(), SourceFormat::Jsonl, &PostSchema::default())
            .unwrap();
        (dir, engine, out.dataset_id)
    }

    #[test]
    fn nothing_accepted_is_a_validation_error() {
        let (_d, engine, _) = engine();
        let err = engine
            .ingest("bad", b"id,text\n1,\n", SourceFormat::Csv, &PostSchema::default())
            .unwrap_err();
        assert_eq!(err.code(), "VALIDATION_FAILED");
        assert!(err.is_user_error());
    }

    #[test]
    fn sentiment_records_lexicon_version() {
        let (_d, engine, id) = engine();
        let result = engine.analyze_now(&id, AnalysisKind::Sentiment, 42).unwrap();
        let AnalysisPayload::Sentiment(p) = &result.payload else {
            panic!("wrong payload")
        };
        assert_eq!(p.lexicon_version, Some(1));
        let labels: Vec<_> = p.labels.iter().map(|l| l.label.clone().unwrap()).collect();
        assert_eq!(labels, ["positive", "negative", "neutral"]);
        let csv = String::from_utf8(engine.export(&result.job_id, ExportFormat::Csv).unwrap()).unwrap();
        assert!(csv.starts_with("post_id,label,score,degree\n1,positive,1,1\n"));
    }

    #[test]
    fn failed_analysis_records_failed_job() {
        let (_d, engine, id) = engine();
        // three posts give a vocabulary too small to cluster
        let err = engine.analyze_now(&id, AnalysisKind::Subtopics, 42);
        if let Err(e) = err {
            let jobs = engine.store().list_jobs(Some(JobState::Failed)).unwrap();
            assert_eq!(jobs.len(), 1);
            assert!(jobs[0].error.as_deref().unwrap().starts_with(e.code()));
        }
    }

    #[test]
    fn every_kind_runs_on_a_small_dataset() {
        let (_d, engine, id) = engine();
        for kind in [
            AnalysisKind::Wordcloud,
            AnalysisKind::Sentiment,
            AnalysisKind::Propaganda,
            AnalysisKind::Trends,
            AnalysisKind::Spatial,
            AnalysisKind::Network,
            AnalysisKind::PostAnalysis,
        ] {
            let payload = engine.compute(&id, kind, 1).unwrap();
            assert_eq!(payload.kind(), kind);
            for format in [ExportFormat::Csv, ExportFormat::Json] {
                assert!(!export_payload(&payload, format).unwrap().is_empty());
            }
        }
    }

    #[test]
    fn feedback_creates_new_version() {
        let (_d, engine, id) = engine();
        for _ in 0..3 {
            engine
                .store()
                .record_annotation(&NewAnnotation {
                    dataset_id: id.clone(),
                    post_id: "3".into(),
                    kind: AnalysisKind::Sentiment,
                    old_label: "neutral".into(),
                    new_label: "positive".into(),
                    annotator: "a".into(),
                })
                .unwrap();
        }
        let report = engine.apply_feedback(&id).unwrap();
        assert_eq!(report.previous_version, 1);
        assert_eq!(report.lexicon_version, 2);
        assert!(engine.current_lexicon().unwrap().positive.contains("match"));
        assert_eq!(engine.store().lexicon_versions().unwrap(), vec![1, 2]);
        let again = engine.apply_feedback(&id).unwrap();
        assert_eq!(again.lexicon_version, 2);
        assert!(again.changes.is_empty());
    }
}
