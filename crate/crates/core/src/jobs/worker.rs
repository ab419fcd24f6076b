use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use super::{AnalysisJob, JobQueue, Outcome};
use crate::engine::AnalysisPayload;

const IDLE_POLL: Duration = Duration::from_millis(250);

/// A background worker loop; stops when dropped or on [`WorkerHandle::stop`].
pub struct WorkerHandle {
    stop: Arc<AtomicBool>,
    queue: Arc<JobQueue>,
    thread: Option<JoinHandle<()>>,
}

impl WorkerHandle {
    pub fn stop(mut self) {
        self.shutdown();
    }

    fn shutdown(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        self.queue.notify_workers();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for WorkerHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

/// Run `runner` for every job the queue hands out until stopped.
pub fn spawn_worker<F>(queue: Arc<JobQueue>, runner: F) -> WorkerHandle
where
    F: Fn(&AnalysisJob) -> Result<AnalysisPayload, String> + Send + 'static,
{
    let stop = Arc::new(AtomicBool::new(false));
    let thread = {
        let stop = Arc::clone(&stop);
        let queue = Arc::clone(&queue);
        std::thread::Builder::new()
            .name("marsad-worker".into())
            .spawn(move || {
                while !stop.load(Ordering::SeqCst) {
                    match queue.next_runnable() {
                        Ok(Some(job)) => {
                            let outcome = match runner(&job) {
                                Ok(payload) => Outcome::Done(payload),
                                Err(message) => Outcome::Failed(message),
                            };
                            if let Err(e) = queue.complete(&job.job_id, outcome) {
                                tracing::error!(job_id = %job.job_id, error = %e, "could not record job outcome");
                            }
                        }
                        Ok(None) => queue.wait_for_change(IDLE_POLL),
                        Err(e) => {
                            tracing::error!(error = %e, "scheduler error");
                            queue.wait_for_change(IDLE_POLL);
                        }
                    }
                }
            })
            .expect("spawn worker thread")
    };
    WorkerHandle {
        stop,
        queue,
        thread: Some(thread),
    }
}
