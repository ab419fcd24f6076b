use std::path::{Path, PathBuf};
use std::sync::{Mutex, MutexGuard};

use chrono::{DateTime, SecondsFormat, Utc};
use rusqlite::{params, Connection, OptionalExtension, Row, Transaction};

use super::{
    AnalysisKind, AnalysisResult, Annotation, AnnotationId, AuditEntry, DatasetId,
    DatasetRecord, DatasetStatus, DocumentStore, JobId, JsonlDocuments, NewAnnotation,
    StoreError,
};
use crate::classify::Lexicon;
use crate::ingest::{DatasetMetadata, Post};
use crate::jobs::{AnalysisJob, JobState};

const SCHEMA: &str = r#"
CREATE TABLE IF NOT EXISTS datasets (
    seq         INTEGER PRIMARY KEY AUTOINCREMENT,
    dataset_id  TEXT NOT NULL UNIQUE,
    name        TEXT NOT NULL,
    created_at  TEXT NOT NULL,
    metadata    TEXT NOT NULL,
    status      TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS posts (
    dataset_id  TEXT NOT NULL REFERENCES datasets(dataset_id),
    post_id     TEXT NOT NULL,
    PRIMARY KEY (dataset_id, post_id)
);
CREATE TABLE IF NOT EXISTS jobs (
    seq          INTEGER PRIMARY KEY AUTOINCREMENT,
    job_id       TEXT NOT NULL UNIQUE,
    dataset_id   TEXT NOT NULL REFERENCES datasets(dataset_id),
    kind         TEXT NOT NULL,
    priority     INTEGER NOT NULL,
    state        TEXT NOT NULL,
    submitted_at TEXT NOT NULL,
    started_at   TEXT,
    finished_at  TEXT,
    error        TEXT,
    webhook      TEXT,
    seed         INTEGER NOT NULL,
    attempts     INTEGER NOT NULL DEFAULT 0
);
CREATE INDEX IF NOT EXISTS jobs_by_state ON jobs(state, priority, submitted_at, seq);
CREATE TABLE IF NOT EXISTS results (
    seq         INTEGER PRIMARY KEY AUTOINCREMENT,
    job_id      TEXT NOT NULL UNIQUE,
    dataset_id  TEXT NOT NULL REFERENCES datasets(dataset_id),
    kind        TEXT NOT NULL,
    payload     TEXT NOT NULL,
    produced_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS annotations (
    seq           INTEGER PRIMARY KEY AUTOINCREMENT,
    annotation_id TEXT NOT NULL UNIQUE,
    dataset_id    TEXT NOT NULL,
    post_id       TEXT NOT NULL,
    kind          TEXT NOT NULL,
    old_label     TEXT NOT NULL,
    new_label     TEXT NOT NULL,
    annotator     TEXT NOT NULL,
    created_at    TEXT NOT NULL,
    FOREIGN KEY (dataset_id, post_id) REFERENCES posts(dataset_id, post_id)
);
CREATE TABLE IF NOT EXISTS lexicons (
    version    INTEGER PRIMARY KEY,
    body       TEXT NOT NULL,
    created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS audit_log (
    seq       INTEGER PRIMARY KEY AUTOINCREMENT,
    at        TEXT NOT NULL,
    principal TEXT NOT NULL,
    action    TEXT NOT NULL,
    target    TEXT
);
"#;

fn ts(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Nanos, true)
}

fn parse_ts(s: &str) -> rusqlite::Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| rusqlite::Error::FromSqlConversionFailure(0, rusqlite::types::Type::Text, e.into()))
}

fn conversion_err(msg: String) -> rusqlite::Error {
    rusqlite::Error::FromSqlConversionFailure(0, rusqlite::types::Type::Text, msg.into())
}

fn parse_kind(s: &str) -> rusqlite::Result<AnalysisKind> {
    s.parse().map_err(conversion_err)
}

fn json_col<T: serde::de::DeserializeOwned>(s: &str) -> rusqlite::Result<T> {
    serde_json::from_str(s).map_err(|e| conversion_err(e.to_string()))
}

const JOB_COLUMNS: &str = "job_id, dataset_id, kind, priority, state, submitted_at, started_at, \
                           finished_at, error, webhook, seed, attempts";

fn job_from_row(row: &Row) -> rusqlite::Result<AnalysisJob> {
    let opt_ts = |i: usize| -> rusqlite::Result<Option<DateTime<Utc>>> {
        row.get::<_, Option<String>>(i)?
            .map(|s| parse_ts(&s))
            .transpose()
    };
    let state: String = row.get(4)?;
    Ok(AnalysisJob {
        job_id: JobId::from(row.get::<_, String>(0)?),
        dataset_id: DatasetId::from(row.get::<_, String>(1)?),
        kind: parse_kind(&row.get::<_, String>(2)?)?,
        priority: row.get(3)?,
        state: JobState::parse(&state).ok_or_else(|| conversion_err(state))?,
        submitted_at: parse_ts(&row.get::<_, String>(5)?)?,
        started_at: opt_ts(6)?,
        finished_at: opt_ts(7)?,
        error: row.get(8)?,
        webhook: row.get(9)?,
        seed: row.get::<_, i64>(10)? as u64,
        attempts: row.get(11)?,
    })
}

fn dataset_from_row(row: &Row) -> rusqlite::Result<DatasetRecord> {
    let status: String = row.get(4)?;
    Ok(DatasetRecord {
        dataset_id: DatasetId::from(row.get::<_, String>(0)?),
        name: row.get(1)?,
        created_at: parse_ts(&row.get::<_, String>(2)?)?,
        metadata: json_col::<DatasetMetadata>(&row.get::<_, String>(3)?)?,
        status: DatasetStatus::parse(&status).ok_or_else(|| conversion_err(status))?,
    })
}

fn result_from_row(row: &Row) -> rusqlite::Result<AnalysisResult> {
    Ok(AnalysisResult {
        job_id: JobId::from(row.get::<_, String>(0)?),
        dataset_id: DatasetId::from(row.get::<_, String>(1)?),
        kind: parse_kind(&row.get::<_, String>(2)?)?,
        payload: json_col(&row.get::<_, String>(3)?)?,
        produced_at: parse_ts(&row.get::<_, String>(4)?)?,
    })
}

fn annotation_from_row(row: &Row) -> rusqlite::Result<Annotation> {
    Ok(Annotation {
        annotation_id: AnnotationId::from(row.get::<_, String>(0)?),
        dataset_id: DatasetId::from(row.get::<_, String>(1)?),
        post_id: row.get(2)?,
        kind: parse_kind(&row.get::<_, String>(3)?)?,
        old_label: row.get(4)?,
        new_label: row.get(5)?,
        annotator: row.get(6)?,
        created_at: parse_ts(&row.get::<_, String>(7)?)?,
    })
}

/// Handle to the hybrid store; cheap to share behind an `Arc`.
pub struct Store {
    root: PathBuf,
    db: Mutex<Connection>,
    documents: Box<dyn DocumentStore>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("root", &self.root).finish()
    }
}

impl Store {
    /// Open (or create) the store rooted at `data_dir`.
    pub fn open(data_dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let root = data_dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&root)?;
        let conn = Connection::open(root.join("marsad.db"))?;
        Self::with_parts(root.clone(), conn, Box::new(JsonlDocuments::new(root)))
    }

    /// Assemble a store from an explicit connection and document backend.
    pub fn with_parts(
        root: PathBuf,
        conn: Connection,
        documents: Box<dyn DocumentStore>,
    ) -> Result<Self, StoreError> {
        conn.busy_timeout(std::time::Duration::from_secs(10))?;
        conn.execute_batch("PRAGMA foreign_keys = ON; PRAGMA journal_mode = WAL;")?;
        conn.execute_batch(SCHEMA)?;
        Ok(Store {
            root,
            db: Mutex::new(conn),
            documents,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn conn(&self) -> MutexGuard<'_, Connection> {
        // a panic while holding the lock leaves SQLite consistent (every
        // multi-statement write runs in a transaction), so poisoning is ignored
        self.db.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn with_tx<T>(
        &self,
        f: impl FnOnce(&Transaction) -> Result<T, StoreError>,
    ) -> Result<T, StoreError> {
        let mut conn = self.conn();
        let tx = conn.transaction()?;
        let out = f(&tx)?;
        tx.commit()?;
        Ok(out)
    }

    // ---- datasets -------------------------------------------------------

    pub fn put_dataset(
        &self,
        name: &str,
        posts: &[Post],
        metadata: &DatasetMetadata,
    ) -> Result<DatasetId, StoreError> {
        let id = DatasetId::generate();
        self.documents.write_posts(&id, posts)?;
        let metadata = serde_json::to_string(metadata)?;
        self.with_tx(|tx| {
            tx.execute(
                "INSERT INTO datasets (dataset_id, name, created_at, metadata, status)
                 VALUES (?1, ?2, ?3, ?4, ?5)",
                params![id.as_str(), name, ts(&Utc::now()), metadata, DatasetStatus::Stored.as_str()],
            )?;
            let mut insert =
                tx.prepare("INSERT OR IGNORE INTO posts (dataset_id, post_id) VALUES (?1, ?2)")?;
            for post in posts {
                insert.execute(params![id.as_str(), post.id])?;
            }
            Ok(())
        })?;
        Ok(id)
    }

    pub fn dataset_record(&self, id: &DatasetId) -> Result<DatasetRecord, StoreError> {
        self.conn()
            .query_row(
                "SELECT dataset_id, name, created_at, metadata, status FROM datasets
                 WHERE dataset_id = ?1",
                [id.as_str()],
                dataset_from_row,
            )
            .optional()?
            .ok_or_else(|| StoreError::NotFound {
                entity: "dataset",
                id: id.to_string(),
            })
    }

    pub fn get_dataset(&self, id: &DatasetId) -> Result<(Vec<Post>, DatasetRecord), StoreError> {
        let record = self.dataset_record(id)?;
        let posts = self.documents.read_posts(id)?;
        Ok((posts, record))
    }

    pub fn dataset_exists(&self, id: &DatasetId) -> Result<bool, StoreError> {
        Ok(self
            .conn()
            .query_row(
                "SELECT 1 FROM datasets WHERE dataset_id = ?1",
                [id.as_str()],
                |_| Ok(()),
            )
            .optional()?
            .is_some())
    }

    /// Datasets in creation order, starting after the `after` cursor.
    pub fn list_datasets(
        &self,
        limit: usize,
        after: Option<&DatasetId>,
    ) -> Result<Vec<DatasetRecord>, StoreError> {
        let conn = self.conn();
        let after_seq: i64 = match after {
            None => 0,
            Some(id) => conn
                .query_row(
                    "SELECT seq FROM datasets WHERE dataset_id = ?1",
                    [id.as_str()],
                    |r| r.get(0),
                )
                .optional()?
                .ok_or_else(|| StoreError::NotFound {
                    entity: "dataset",
                    id: id.to_string(),
                })?,
        };
        let mut stmt = conn.prepare(
            "SELECT dataset_id, name, created_at, metadata, status FROM datasets
             WHERE seq > ?1 ORDER BY seq LIMIT ?2",
        )?;
        let rows = stmt.query_map(params![after_seq, limit as i64], dataset_from_row)?;
        Ok(rows.collect::<Result<_, _>>()?)
    }

    /// Move a dataset's status forward; backward moves are ignored.
    pub fn advance_dataset_status(
        &self,
        id: &DatasetId,
        status: DatasetStatus,
    ) -> Result<DatasetStatus, StoreError> {
        self.with_tx(|tx| {
            let current: String = tx
                .query_row(
                    "SELECT status FROM datasets WHERE dataset_id = ?1",
                    [id.as_str()],
                    |r| r.get(0),
                )
                .optional()?
                .ok_or_else(|| StoreError::NotFound {
                    entity: "dataset",
                    id: id.to_string(),
                })?;
            let current = DatasetStatus::parse(&current).unwrap_or(DatasetStatus::Stored);
            if status > current {
                tx.execute(
                    "UPDATE datasets SET status = ?1 WHERE dataset_id = ?2",
                    params![status.as_str(), id.as_str()],
                )?;
                Ok(status)
            } else {
                Ok(current)
            }
        })
    }

    pub fn post_exists(&self, dataset: &DatasetId, post_id: &str) -> Result<bool, StoreError> {
        Ok(self
            .conn()
            .query_row(
                "SELECT 1 FROM posts WHERE dataset_id = ?1 AND post_id = ?2",
                params![dataset.as_str(), post_id],
                |_| Ok(()),
            )
            .optional()?
            .is_some())
    }

    // ---- results --------------------------------------------------------

    fn insert_result(tx: &Transaction, result: &AnalysisResult) -> Result<(), StoreError> {
        let payload_kind = result.payload.kind();
        if payload_kind != result.kind {
            return Err(StoreError::PayloadMismatch {
                kind: result.kind,
                payload: payload_kind,
            });
        }
        let exists = tx
            .query_row(
                "SELECT 1 FROM datasets WHERE dataset_id = ?1",
                [result.dataset_id.as_str()],
                |_| Ok(()),
            )
            .optional()?;
        if exists.is_none() {
            return Err(StoreError::ForeignKey(result.dataset_id.to_string()));
        }
        let inserted = tx.execute(
            "INSERT OR IGNORE INTO results (job_id, dataset_id, kind, payload, produced_at)
             VALUES (?1, ?2, ?3, ?4, ?5)",
            params![
                result.job_id.as_str(),
                result.dataset_id.as_str(),
                result.kind.as_str(),
                serde_json::to_string(&result.payload)?,
                ts(&result.produced_at)
            ],
        )?;
        if inserted == 0 {
            return Err(StoreError::DuplicateResult(result.job_id.to_string()));
        }
        Ok(())
    }

    pub fn put_result(&self, result: &AnalysisResult) -> Result<(), StoreError> {
        self.with_tx(|tx| Self::insert_result(tx, result))
    }

    /// Results of a dataset in insertion order, optionally of one kind.
    pub fn get_results(
        &self,
        dataset: &DatasetId,
        kind: Option<AnalysisKind>,
    ) -> Result<Vec<AnalysisResult>, StoreError> {
        if !self.dataset_exists(dataset)? {
            return Err(StoreError::ForeignKey(dataset.to_string()));
        }
        let conn = self.conn();
        let mut stmt = conn.prepare(
            "SELECT job_id, dataset_id, kind, payload, produced_at FROM results
             WHERE dataset_id = ?1 AND (?2 IS NULL OR kind = ?2) ORDER BY seq",
        )?;
        let rows = stmt.query_map(
            params![dataset.as_str(), kind.map(|k| k.as_str())],
            result_from_row,
        )?;
        Ok(rows.collect::<Result<_, _>>()?)
    }

    pub fn result_for_job(&self, job: &JobId) -> Result<Option<AnalysisResult>, StoreError> {
        Ok(self
            .conn()
            .query_row(
                "SELECT job_id, dataset_id, kind, payload, produced_at FROM results
                 WHERE job_id = ?1",
                [job.as_str()],
                result_from_row,
            )
            .optional()?)
    }

    // ---- annotations ----------------------------------------------------

    pub fn record_annotation(&self, new: &NewAnnotation) -> Result<Annotation, StoreError> {
        if !new.kind.label_set().contains(&new.new_label.as_str()) {
            return Err(StoreError::InvalidLabel {
                kind: new.kind,
                label: new.new_label.clone(),
            });
        }
        let annotation = Annotation {
            annotation_id: AnnotationId::generate(),
            dataset_id: new.dataset_id.clone(),
            post_id: new.post_id.clone(),
            kind: new.kind,
            old_label: new.old_label.clone(),
            new_label: new.new_label.clone(),
            annotator: new.annotator.clone(),
            created_at: Utc::now(),
        };
        self.with_tx(|tx| {
            let known = tx
                .query_row(
                    "SELECT 1 FROM posts WHERE dataset_id = ?1 AND post_id = ?2",
                    params![new.dataset_id.as_str(), new.post_id],
                    |_| Ok(()),
                )
                .optional()?;
            if known.is_none() {
                return Err(StoreError::UnknownPost {
                    dataset_id: new.dataset_id.to_string(),
                    post_id: new.post_id.clone(),
                });
            }
            tx.execute(
                "INSERT INTO annotations (annotation_id, dataset_id, post_id, kind, old_label,
                                          new_label, annotator, created_at)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)",
                params![
                    annotation.annotation_id.as_str(),
                    annotation.dataset_id.as_str(),
                    annotation.post_id,
                    annotation.kind.as_str(),
                    annotation.old_label,
                    annotation.new_label,
                    annotation.annotator,
                    ts(&annotation.created_at)
                ],
            )?;
            Ok(())
        })?;
        Ok(annotation)
    }

    pub fn list_annotations(&self, dataset: &DatasetId) -> Result<Vec<Annotation>, StoreError> {
        if !self.dataset_exists(dataset)? {
            return Err(StoreError::NotFound {
                entity: "dataset",
                id: dataset.to_string(),
            });
        }
        let conn = self.conn();
        let mut stmt = conn.prepare(
            "SELECT annotation_id, dataset_id, post_id, kind, old_label, new_label, annotator,
                    created_at
             FROM annotations WHERE dataset_id = ?1 ORDER BY seq",
        )?;
        let rows = stmt.query_map([dataset.as_str()], annotation_from_row)?;
        Ok(rows.collect::<Result<_, _>>()?)
    }

    // ---- lexicon versions -------------------------------------------------

    /// Store a lexicon under its version; an existing version is left as is.
    pub fn put_lexicon(&self, lexicon: &Lexicon) -> Result<(), StoreError> {
        self.conn().execute(
            "INSERT OR IGNORE INTO lexicons (version, body, created_at) VALUES (?1, ?2, ?3)",
            params![lexicon.version, serde_json::to_string(lexicon)?, ts(&Utc::now())],
        )?;
        Ok(())
    }

    pub fn latest_lexicon(&self) -> Result<Option<Lexicon>, StoreError> {
        let body: Option<String> = self
            .conn()
            .query_row(
                "SELECT body FROM lexicons ORDER BY version DESC LIMIT 1",
                [],
                |r| r.get(0),
            )
            .optional()?;
        Ok(body.map(|b| serde_json::from_str(&b)).transpose()?)
    }

    pub fn lexicon(&self, version: u32) -> Result<Lexicon, StoreError> {
        let body: String = self
            .conn()
            .query_row(
                "SELECT body FROM lexicons WHERE version = ?1",
                [version],
                |r| r.get(0),
            )
            .optional()?
            .ok_or_else(|| StoreError::NotFound {
                entity: "lexicon",
                id: version.to_string(),
            })?;
        Ok(serde_json::from_str(&body)?)
    }

    pub fn lexicon_versions(&self) -> Result<Vec<u32>, StoreError> {
        let conn = self.conn();
        let mut stmt = conn.prepare("SELECT version FROM lexicons ORDER BY version")?;
        let rows = stmt.query_map([], |r| r.get(0))?;
        Ok(rows.collect::<Result<_, _>>()?)
    }

    // ---- audit ------------------------------------------------------------

    pub fn audit(&self, principal: &str, action: &str, target: Option<&str>) -> Result<(), StoreError> {
        self.conn().execute(
            "INSERT INTO audit_log (at, principal, action, target) VALUES (?1, ?2, ?3, ?4)",
            params![ts(&Utc::now()), principal, action, target],
        )?;
        Ok(())
    }

    pub fn audit_log(&self) -> Result<Vec<AuditEntry>, StoreError> {
        let conn = self.conn();
        let mut stmt =
            conn.prepare("SELECT at, principal, action, target FROM audit_log ORDER BY seq")?;
        let rows = stmt.query_map([], |r| {
            Ok(AuditEntry {
                at: parse_ts(&r.get::<_, String>(0)?)?,
                principal: r.get(1)?,
                action: r.get(2)?,
                target: r.get(3)?,
            })
        })?;
        Ok(rows.collect::<Result<_, _>>()?)
    }

    // ---- jobs -------------------------------------------------------------

    /// Insert a queued job unless the same (dataset, kind) is already queued
    /// or running. The check and the insert are one transaction.
    pub fn insert_job(&self, job: &AnalysisJob) -> Result<(), StoreError> {
        self.with_tx(|tx| {
            let exists = tx
                .query_row(
                    "SELECT 1 FROM datasets WHERE dataset_id = ?1",
                    [job.dataset_id.as_str()],
                    |_| Ok(()),
                )
                .optional()?;
            if exists.is_none() {
                return Err(StoreError::ForeignKey(job.dataset_id.to_string()));
            }
            let active = tx
                .query_row(
                    "SELECT 1 FROM jobs WHERE dataset_id = ?1 AND kind = ?2
                     AND state IN ('queued', 'running')",
                    params![job.dataset_id.as_str(), job.kind.as_str()],
                    |_| Ok(()),
                )
                .optional()?;
            if active.is_some() {
                return Err(StoreError::DuplicateJob {
                    dataset_id: job.dataset_id.to_string(),
                    kind: job.kind,
                });
            }
            tx.execute(
                &format!(
                    "INSERT INTO jobs ({JOB_COLUMNS}) VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10, ?11, ?12)"
                ),
                params![
                    job.job_id.as_str(),
                    job.dataset_id.as_str(),
                    job.kind.as_str(),
                    job.priority,
                    job.state.as_str(),
                    ts(&job.submitted_at),
                    job.started_at.as_ref().map(ts),
                    job.finished_at.as_ref().map(ts),
                    job.error,
                    job.webhook,
                    job.seed as i64,
                    job.attempts
                ],
            )?;
            Ok(())
        })
    }

    fn job_in(tx: &Transaction, id: &JobId) -> Result<AnalysisJob, StoreError> {
        tx.query_row(
            &format!("SELECT {JOB_COLUMNS} FROM jobs WHERE job_id = ?1"),
            [id.as_str()],
            job_from_row,
        )
        .optional()?
        .ok_or_else(|| StoreError::NotFound {
            entity: "job",
            id: id.to_string(),
        })
    }

    pub fn get_job(&self, id: &JobId) -> Result<AnalysisJob, StoreError> {
        self.with_tx(|tx| Self::job_in(tx, id))
    }

    /// Jobs in submission order, optionally restricted to one state.
    pub fn list_jobs(&self, state: Option<JobState>) -> Result<Vec<AnalysisJob>, StoreError> {
        let conn = self.conn();
        let mut stmt = conn.prepare(&format!(
            "SELECT {JOB_COLUMNS} FROM jobs WHERE (?1 IS NULL OR state = ?1) ORDER BY seq"
        ))?;
        let rows = stmt.query_map([state.map(|s| s.as_str())], job_from_row)?;
        Ok(rows.collect::<Result<_, _>>()?)
    }

    /// Atomically move the best queued job to running, if fewer than
    /// `worker_limit` jobs are running.
    pub fn claim_next_job(
        &self,
        worker_limit: usize,
        now: DateTime<Utc>,
    ) -> Result<Option<AnalysisJob>, StoreError> {
        self.with_tx(|tx| {
            let running: i64 =
                tx.query_row("SELECT COUNT(*) FROM jobs WHERE state = 'running'", [], |r| r.get(0))?;
            if running as usize >= worker_limit {
                return Ok(None);
            }
            let next = tx
                .query_row(
                    &format!(
                        "SELECT {JOB_COLUMNS} FROM jobs WHERE state = 'queued'
                         ORDER BY priority, submitted_at, seq LIMIT 1"
                    ),
                    [],
                    job_from_row,
                )
                .optional()?;
            let Some(mut job) = next else {
                return Ok(None);
            };
            let started = now.max(job.submitted_at);
            tx.execute(
                "UPDATE jobs SET state = 'running', started_at = ?1, attempts = attempts + 1
                 WHERE job_id = ?2",
                params![ts(&started), job.job_id.as_str()],
            )?;
            job.state = JobState::Running;
            job.started_at = Some(started);
            job.attempts += 1;
            Ok(Some(job))
        })
    }

    /// Finish a running job. On success the result row is written in the
    /// same transaction, before the state flips to done.
    pub fn finish_job(
        &self,
        id: &JobId,
        outcome: Result<&AnalysisResult, &str>,
        now: DateTime<Utc>,
    ) -> Result<AnalysisJob, StoreError> {
        self.with_tx(|tx| {
            let mut job = Self::job_in(tx, id)?;
            if job.state != JobState::Running {
                return Err(StoreError::JobState {
                    job_id: id.to_string(),
                    state: job.state,
                });
            }
            let finished = job.started_at.map_or(now, |s| now.max(s));
            match outcome {
                Ok(result) => {
                    Self::insert_result(tx, result)?;
                    job.state = JobState::Done;
                }
                Err(message) => {
                    job.state = JobState::Failed;
                    job.error = Some(message.to_string());
                }
            }
            job.finished_at = Some(finished);
            tx.execute(
                "UPDATE jobs SET state = ?1, finished_at = ?2, error = ?3 WHERE job_id = ?4",
                params![job.state.as_str(), ts(&finished), job.error, id.as_str()],
            )?;
            Ok(job)
        })
    }

    pub fn cancel_job(&self, id: &JobId, now: DateTime<Utc>) -> Result<AnalysisJob, StoreError> {
        self.with_tx(|tx| {
            let mut job = Self::job_in(tx, id)?;
            if job.state != JobState::Queued {
                return Err(StoreError::JobState {
                    job_id: id.to_string(),
                    state: job.state,
                });
            }
            let finished = now.max(job.submitted_at);
            tx.execute(
                "UPDATE jobs SET state = 'cancelled', finished_at = ?1 WHERE job_id = ?2",
                params![ts(&finished), id.as_str()],
            )?;
            job.state = JobState::Cancelled;
            job.finished_at = Some(finished);
            Ok(job)
        })
    }

    /// Put every running job back in the queue; returns the requeued ids.
    pub fn requeue_running(&self) -> Result<Vec<JobId>, StoreError> {
        self.with_tx(|tx| {
            let ids: Vec<JobId> = {
                let mut stmt = tx.prepare("SELECT job_id FROM jobs WHERE state = 'running' ORDER BY seq")?;
                let rows = stmt.query_map([], |r| r.get::<_, String>(0))?;
                rows.map(|r| r.map(JobId::from)).collect::<Result<_, _>>()?
            };
            tx.execute(
                "UPDATE jobs SET state = 'queued', started_at = NULL WHERE state = 'running'",
                [],
            )?;
            Ok(ids)
        })
    }
}
