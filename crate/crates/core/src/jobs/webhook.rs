use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{AnalysisJob, JobState};
use crate::store::{AnalysisKind, DatasetId, JobId};

/// Body POSTed to a job's webhook on every terminal transition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WebhookEvent {
    pub job_id: JobId,
    pub state: JobState,
    pub dataset_id: DatasetId,
    pub kind: AnalysisKind,
}

impl From<&AnalysisJob> for WebhookEvent {
    fn from(job: &AnalysisJob) -> Self {
        WebhookEvent {
            job_id: job.job_id.clone(),
            state: job.state,
            dataset_id: job.dataset_id.clone(),
            kind: job.kind,
        }
    }
}

pub trait Notifier: Send + Sync {
    fn notify(&self, url: &str, event: &WebhookEvent);
}

/// Delivers webhook events over HTTP; failures are logged, never retried.
#[derive(Debug, Clone)]
pub struct HttpNotifier {
    timeout: Duration,
}

impl HttpNotifier {
    pub fn new(timeout: Duration) -> Self {
        HttpNotifier { timeout }
    }
}

impl Default for HttpNotifier {
    fn default() -> Self {
        HttpNotifier::new(Duration::from_secs(10))
    }
}

impl Notifier for HttpNotifier {
    fn notify(&self, url: &str, event: &WebhookEvent) {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .build()
            .into();
        match agent.post(url).send_json(event) {
            Ok(_) => tracing::debug!(job_id = %event.job_id, "webhook delivered"),
            Err(e) => tracing::warn!(job_id = %event.job_id, error = %e, "webhook delivery failed"),
        }
    }
}
