//! Priority FIFO job queue over the store's `jobs` table.
//!
//! Jobs move `queued → running → done | failed` or `queued → cancelled`.
//! At most `worker_limit` jobs are running at once; the lowest
//! `(priority, submitted_at)` queued job starts next.

mod webhook;
mod worker;

use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::AnalysisPayload;
use crate::store::{
    AnalysisKind, AnalysisResult, DatasetId, DatasetStatus, JobId, Store, StoreError,
};

pub use webhook::{HttpNotifier, Notifier, WebhookEvent};
pub use worker::{spawn_worker, WorkerHandle};

pub const DEFAULT_PRIORITY: i64 = 100;
pub const DEFAULT_WORKER_LIMIT: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
    Cancelled,
}

impl JobState {
    pub fn as_str(&self) -> &'static str {
        match self {
            JobState::Queued => "queued",
            JobState::Running => "running",
            JobState::Done => "done",
            JobState::Failed => "failed",
            JobState::Cancelled => "cancelled",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            JobState::Queued,
            JobState::Running,
            JobState::Done,
            JobState::Failed,
            JobState::Cancelled,
        ]
        .into_iter()
        .find(|st| st.as_str() == s)
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, JobState::Done | JobState::Failed | JobState::Cancelled)
    }
}

impl std::fmt::Display for JobState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisJob {
    pub job_id: JobId,
    pub dataset_id: DatasetId,
    pub kind: AnalysisKind,
    /// Lower runs sooner.
    pub priority: i64,
    pub state: JobState,
    pub submitted_at: DateTime<Utc>,
    pub started_at: Option<DateTime<Utc>>,
    pub finished_at: Option<DateTime<Utc>>,
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub webhook: Option<String>,
    pub seed: u64,
    /// Times the job has been started; above 1 only after a crash requeue.
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitRequest {
    pub dataset_id: DatasetId,
    pub kind: AnalysisKind,
    #[serde(default = "default_priority")]
    pub priority: i64,
    #[serde(default)]
    pub webhook: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_priority() -> i64 {
    DEFAULT_PRIORITY
}

impl SubmitRequest {
    pub fn new(dataset_id: DatasetId, kind: AnalysisKind) -> Self {
        SubmitRequest {
            dataset_id,
            kind,
            priority: DEFAULT_PRIORITY,
            webhook: None,
            seed: None,
        }
    }
}

pub enum Outcome {
    Done(AnalysisPayload),
    Failed(String),
}

#[derive(Debug, Error)]
pub enum JobError {
    #[error("dataset `{0}` does not exist")]
    UnknownDataset(String),
    #[error("a {kind} job for dataset `{dataset_id}` is already queued or running")]
    DuplicateJob {
        dataset_id: String,
        kind: AnalysisKind,
    },
    #[error("job `{job_id}` is {state}")]
    IllegalTransition { job_id: String, state: JobState },
    #[error("job `{0}` not found")]
    NotFound(String),
    #[error(transparent)]
    Store(StoreError),
}

impl JobError {
    pub fn code(&self) -> &'static str {
        match self {
            JobError::UnknownDataset(_) => "UNKNOWN_DATASET",
            JobError::DuplicateJob { .. } => "DUPLICATE_JOB",
            JobError::IllegalTransition { .. } => "ILLEGAL_TRANSITION",
            JobError::NotFound(_) => "NOT_FOUND",
            JobError::Store(e) => e.code(),
        }
    }
}

impl From<StoreError> for JobError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::ForeignKey(id) => JobError::UnknownDataset(id),
            StoreError::DuplicateJob { dataset_id, kind } => JobError::DuplicateJob { dataset_id, kind },
            StoreError::JobState { job_id, state } => JobError::IllegalTransition { job_id, state },
            StoreError::NotFound { entity: "job", id } => JobError::NotFound(id),
            other => JobError::Store(other),
        }
    }
}

/// Shared, thread-safe queue handle.
pub struct JobQueue {
    store: Arc<Store>,
    worker_limit: usize,
    default_seed: u64,
    notifier: Option<Arc<dyn Notifier>>,
    wake: (Mutex<u64>, Condvar),
}

impl JobQueue {
    pub fn new(store: Arc<Store>, worker_limit: usize) -> Self {
        JobQueue {
            store,
            worker_limit: worker_limit.max(1),
            default_seed: 42,
            notifier: None,
            wake: (Mutex::new(0), Condvar::new()),
        }
    }

    pub fn with_notifier(mut self, notifier: Arc<dyn Notifier>) -> Self {
        self.notifier = Some(notifier);
        self
    }

    pub fn with_default_seed(mut self, seed: u64) -> Self {
        self.default_seed = seed;
        self
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    pub fn worker_limit(&self) -> usize {
        self.worker_limit
    }

    pub fn submit(&self, req: SubmitRequest) -> Result<JobId, JobError> {
        let job = AnalysisJob {
            job_id: JobId::generate(),
            dataset_id: req.dataset_id,
            kind: req.kind,
            priority: req.priority,
            state: JobState::Queued,
            submitted_at: Utc::now(),
            started_at: None,
            finished_at: None,
            error: None,
            webhook: req.webhook,
            seed: req.seed.unwrap_or(self.default_seed),
            attempts: 0,
        };
        self.store.insert_job(&job)?;
        tracing::info!(job_id = %job.job_id, kind = %job.kind, "job queued");
        self.notify_workers();
        Ok(job.job_id)
    }

    /// Start the next job if a worker slot is free.
    pub fn next_runnable(&self) -> Result<Option<AnalysisJob>, JobError> {
        let job = self.store.claim_next_job(self.worker_limit, Utc::now())?;
        if let Some(job) = &job {
            self.store
                .advance_dataset_status(&job.dataset_id, DatasetStatus::Analyzing)?;
            tracing::info!(job_id = %job.job_id, attempt = job.attempts, "job started");
        }
        Ok(job)
    }

    pub fn complete(&self, job_id: &JobId, outcome: Outcome) -> Result<AnalysisJob, JobError> {
        let now = Utc::now();
        let job = match outcome {
            Outcome::Done(payload) => {
                let current = self.store.get_job(job_id)?;
                let result = AnalysisResult {
                    job_id: job_id.clone(),
                    dataset_id: current.dataset_id.clone(),
                    kind: current.kind,
                    payload,
                    produced_at: now,
                };
                self.store.finish_job(job_id, Ok(&result), now)?
            }
            Outcome::Failed(message) => self.store.finish_job(job_id, Err(&message), now)?,
        };
        self.store
            .advance_dataset_status(&job.dataset_id, DatasetStatus::Analyzed)?;
        tracing::info!(job_id = %job.job_id, state = %job.state, "job finished");
        self.emit(&job);
        self.notify_workers();
        Ok(job)
    }

    pub fn cancel(&self, job_id: &JobId) -> Result<AnalysisJob, JobError> {
        let job = self.store.cancel_job(job_id, Utc::now())?;
        self.emit(&job);
        Ok(job)
    }

    pub fn get(&self, job_id: &JobId) -> Result<AnalysisJob, JobError> {
        Ok(self.store.get_job(job_id)?)
    }

    /// 1-based position among queued jobs in scheduling order.
    pub fn queue_position(&self, job_id: &JobId) -> Result<Option<usize>, JobError> {
        let mut queued = self.store.list_jobs(Some(JobState::Queued))?;
        queued.sort_by(|a, b| {
            (a.priority, a.submitted_at).cmp(&(b.priority, b.submitted_at))
        });
        Ok(queued.iter().position(|j| &j.job_id == job_id).map(|p| p + 1))
    }

    /// Reset jobs left running by a previous process back to queued.
    pub fn recover(&self) -> Result<Vec<JobId>, JobError> {
        let ids = self.store.requeue_running()?;
        if !ids.is_empty() {
            tracing::warn!(count = ids.len(), "requeued interrupted jobs");
            self.notify_workers();
        }
        Ok(ids)
    }

    fn emit(&self, job: &AnalysisJob) {
        if let (Some(url), Some(notifier)) = (&job.webhook, &self.notifier) {
            notifier.notify(url, &WebhookEvent::from(job));
        }
    }

    pub(crate) fn notify_workers(&self) {
        let (lock, cv) = &self.wake;
        let mut generation = lock.lock().unwrap_or_else(|p| p.into_inner());
        *generation = generation.wrapping_add(1);
        cv.notify_all();
    }

    /// Block until the queue changes or `timeout` elapses.
    pub(crate) fn wait_for_change(&self, timeout: Duration) {
        let (lock, cv) = &self.wake;
        let generation = lock.lock().unwrap_or_else(|p| p.into_inner());
        let seen = *generation;
        let _ = cv
            .wait_timeout_while(generation, timeout, |g| *g == seen)
            .unwrap_or_else(|p| p.into_inner());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{AnalysisPayload, WordCloudPayload};
    use crate::ingest::{infer_metadata, parse_dataset, PostSchema, SourceFormat};

    fn setup() -> (tempfile::TempDir, JobQueue, DatasetId) {
        let dir = tempfile::tempdir().unwrap();
        let store = Arc::new(Store::open(dir.path()).unwrap());
        let body = b"{\"id\":\"1\",\"text\":\"hello world\",\"timestamp\":\"2024-01-01T00:00:00Z\"}\n";
        let (posts, _) = parse_dataset(body, SourceFormat::Jsonl, &PostSchema::default()).unwrap();
        let id = store
            .put_dataset("d", &posts, &infer_metadata(&posts).unwrap())
            .unwrap();
        (dir, JobQueue::new(store, 1), id)
    }

    fn cloud() -> AnalysisPayload {
        AnalysisPayload::Wordcloud(WordCloudPayload { terms: vec![] })
    }

    #[test]
    fn submit_and_reject_duplicate() {
        let (_d, q, id) = setup();
        let job = q.submit(SubmitRequest::new(id.clone(), AnalysisKind::Sentiment)).unwrap();
        assert_eq!(q.get(&job).unwrap().state, JobState::Queued);
        let err = q
            .submit(SubmitRequest::new(id.clone(), AnalysisKind::Sentiment))
            .unwrap_err();
        assert_eq!(err.code(), "DUPLICATE_JOB");
        q.submit(SubmitRequest::new(id.clone(), AnalysisKind::Trends)).unwrap();
        q.submit(SubmitRequest::new(id, AnalysisKind::Network)).unwrap();
        assert_eq!(q.store().list_jobs(Some(JobState::Queued)).unwrap().len(), 3);
    }

    #[test]
    fn unknown_dataset_rejected() {
        let (_d, q, _) = setup();
        let err = q
            .submit(SubmitRequest::new(DatasetId::generate(), AnalysisKind::Sentiment))
            .unwrap_err();
        assert_eq!(err.code(), "UNKNOWN_DATASET");
    }

    #[test]
    fn fifo_and_worker_limit() {
        let (_d, q, id) = setup();
        assert!(q.next_runnable().unwrap().is_none());
        let a = q.submit(SubmitRequest::new(id.clone(), AnalysisKind::Sentiment)).unwrap();
        let b = q.submit(SubmitRequest::new(id.clone(), AnalysisKind::Trends)).unwrap();
        assert_eq!(q.queue_position(&b).unwrap(), Some(2));
        let first = q.next_runnable().unwrap().unwrap();
        assert_eq!(first.job_id, a);
        assert!(q.next_runnable().unwrap().is_none());
        q.complete(&a, Outcome::Failed("boom".into())).unwrap();
        assert_eq!(q.next_runnable().unwrap().unwrap().job_id, b);
    }

    #[test]
    fn priority_beats_submission_order() {
        let (_d, q, id) = setup();
        q.submit(SubmitRequest::new(id.clone(), AnalysisKind::Sentiment)).unwrap();
        let mut urgent = SubmitRequest::new(id, AnalysisKind::Trends);
        urgent.priority = 1;
        let urgent = q.submit(urgent).unwrap();
        assert_eq!(q.next_runnable().unwrap().unwrap().job_id, urgent);
    }

    #[test]
    fn complete_done_stores_result() {
        let (_d, q, id) = setup();
        let job = q.submit(SubmitRequest::new(id.clone(), AnalysisKind::Wordcloud)).unwrap();
        assert_eq!(
            q.complete(&job, Outcome::Done(cloud())).unwrap_err().code(),
            "ILLEGAL_TRANSITION"
        );
        q.next_runnable().unwrap();
        let done = q.complete(&job, Outcome::Done(cloud())).unwrap();
        assert_eq!(done.state, JobState::Done);
        let started = done.started_at.unwrap();
        assert!(done.submitted_at <= started && started <= done.finished_at.unwrap());
        assert!(q.store().result_for_job(&job).unwrap().is_some());
        assert_eq!(
            q.store().dataset_record(&id).unwrap().status,
            DatasetStatus::Analyzed
        );
    }

    #[test]
    fn failed_job_has_error_and_no_result() {
        let (_d, q, id) = setup();
        let job = q.submit(SubmitRequest::new(id, AnalysisKind::Wordcloud)).unwrap();
        q.next_runnable().unwrap();
        let failed = q.complete(&job, Outcome::Failed("oom".into())).unwrap();
        assert_eq!(failed.state, JobState::Failed);
        assert_eq!(q.get(&job).unwrap().error.as_deref(), Some("oom"));
        assert!(q.store().result_for_job(&job).unwrap().is_none());
    }

    #[test]
    fn cancel_rules() {
        let (_d, q, id) = setup();
        let a = q.submit(SubmitRequest::new(id.clone(), AnalysisKind::Sentiment)).unwrap();
        let b = q.submit(SubmitRequest::new(id, AnalysisKind::Trends)).unwrap();
        assert_eq!(q.cancel(&a).unwrap().state, JobState::Cancelled);
        let next = q.next_runnable().unwrap().unwrap();
        assert_eq!(next.job_id, b);
        assert_eq!(q.cancel(&b).unwrap_err().code(), "ILLEGAL_TRANSITION");
        assert_eq!(q.cancel(&a).unwrap_err().code(), "ILLEGAL_TRANSITION");
    }

    #[test]
    fn recover_requeues_running() {
        let (_d, q, id) = setup();
        let a = q.submit(SubmitRequest::new(id, AnalysisKind::Sentiment)).unwrap();
        q.next_runnable().unwrap();
        assert_eq!(q.recover().unwrap(), vec![a.clone()]);
        let again = q.next_runnable().unwrap().unwrap();
        assert_eq!(again.job_id, a);
        assert_eq!(again.attempts, 2);
    }
}
