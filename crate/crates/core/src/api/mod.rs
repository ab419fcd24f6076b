//! HTTP service under `/v1`, guarded by static bearer tokens.
//!
//! Handlers hand storage and analysis work to blocking threads; analyses
//! themselves run on background worker loops fed by the job queue, so no
//! request waits on one.

mod auth;
mod error;
mod handlers;

use std::future::Future;
use std::sync::Arc;

use axum::extract::DefaultBodyLimit;
use axum::http::{header, HeaderValue, Method};
use axum::routing::{delete, get, post};
use axum::{middleware, Router};
use thiserror::Error;
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::config::{Config, TokenEntry};
use crate::connectors::SourceRegistry;
use crate::engine::Engine;
use crate::jobs::{spawn_worker, HttpNotifier, JobQueue, WorkerHandle};
use crate::store::{Store, StoreError};

pub use auth::{auth_check, Principal};
pub use error::ApiError;

/// Largest accepted upload body.
pub const MAX_UPLOAD_BYTES: usize = 256 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Job(#[from] crate::jobs::JobError),
    #[error("no API tokens configured; add at least one [[auth.tokens]] entry")]
    NoTokens,
    #[error("invalid CORS origin `{0}`")]
    BadOrigin(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Shared handler state.
pub struct AppState {
    pub engine: Arc<Engine>,
    pub queue: Arc<JobQueue>,
    pub sources: Arc<SourceRegistry>,
    pub tokens: Vec<TokenEntry>,
}

/// A running service: state plus its worker loops. Workers stop on drop.
pub struct Service {
    state: Arc<AppState>,
    cors_origins: Vec<String>,
    workers: Vec<WorkerHandle>,
}

impl Service {
    /// Open the data directory, requeue interrupted jobs and start workers.
    pub fn start(config: &Config) -> Result<Self, ServiceError> {
        let store = Arc::new(Store::open(&config.data_dir)?);
        let engine = Arc::new(Engine::new(store.clone(), config.engine_options()?));
        let queue = Arc::new(
            JobQueue::new(store, config.worker_limit)
                .with_notifier(Arc::new(HttpNotifier::default()))
                .with_default_seed(config.seed),
        );
        let state = AppState {
            engine,
            queue,
            sources: Arc::new(config.source_registry()),
            tokens: config.auth.tokens.clone(),
        };
        Self::with_state(state, config.server.cors_origins.clone())
    }

    pub fn with_state(state: AppState, cors_origins: Vec<String>) -> Result<Self, ServiceError> {
        if state.tokens.is_empty() {
            return Err(ServiceError::NoTokens);
        }
        for o in &cors_origins {
            HeaderValue::from_str(o).map_err(|_| ServiceError::BadOrigin(o.clone()))?;
        }
        state.queue.recover()?;
        let workers = (0..state.queue.worker_limit())
            .map(|_| {
                let engine = state.engine.clone();
                spawn_worker(state.queue.clone(), move |job| engine.run_job(job))
            })
            .collect();
        Ok(Service {
            state: Arc::new(state),
            cors_origins,
            workers,
        })
    }

    pub fn state(&self) -> &Arc<AppState> {
        &self.state
    }

    pub fn router(&self) -> Router {
        router(self.state.clone(), &self.cors_origins)
    }

    /// Serve until `shutdown` resolves, then stop the workers.
    pub async fn run(
        self,
        listener: tokio::net::TcpListener,
        shutdown: impl Future<Output = ()> + Send + 'static,
    ) -> Result<(), ServiceError> {
        tracing::info!(addr = %listener.local_addr()?, workers = self.workers.len(), "listening");
        axum::serve(listener, self.router())
            .with_graceful_shutdown(shutdown)
            .await?;
        tokio::task::spawn_blocking(move || drop(self))
            .await
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(())
    }
}

pub fn router(state: Arc<AppState>, cors_origins: &[String]) -> Router {
    let v1 = Router::new()
        .route("/datasets", post(handlers::upload_dataset).get(handlers::list_datasets))
        .route("/datasets/{id}", get(handlers::get_dataset))
        .route("/datasets/{id}/results", get(handlers::get_results))
        .route("/datasets/{id}/annotations", get(handlers::list_annotations))
        .route("/jobs", post(handlers::submit_job).get(handlers::list_jobs))
        .route("/jobs/{id}", get(handlers::get_job))
        .route("/jobs/{id}", delete(handlers::cancel_job))
        .route("/annotations", post(handlers::create_annotation))
        .route("/feedback/apply", post(handlers::apply_feedback))
        .route("/export/{job_id}", get(handlers::export))
        .route("/sources", get(handlers::list_sources))
        .route("/sources/{id}/search", post(handlers::search_source))
        .fallback(handlers::not_found)
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .route_layer(middleware::from_fn_with_state(state.clone(), auth::require_token));
    let app = Router::new()
        .route("/healthz", get(handlers::health))
        .nest("/v1", v1)
        .fallback(handlers::not_found)
        .with_state(state);
    if cors_origins.is_empty() {
        return app;
    }
    let origins: Vec<HeaderValue> = cors_origins
        .iter()
        .filter_map(|o| HeaderValue::from_str(o).ok())
        .collect();
    app.layer(
        CorsLayer::new()
            .allow_origin(AllowOrigin::list(origins))
            .allow_methods([Method::GET, Method::POST, Method::DELETE])
            .allow_headers([header::AUTHORIZATION, header::CONTENT_TYPE]),
    )
}
