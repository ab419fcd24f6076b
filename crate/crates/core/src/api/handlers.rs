use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Multipart, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::{Extension, Json};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::auth::Principal;
use super::error::ApiError;
use super::AppState;
use crate::connectors::{Credentials, SearchRequest};
use crate::engine::ExportFormat;
use crate::ingest::{PostSchema, RawRecord, SourceFormat};
use crate::jobs::{AnalysisJob, JobState, SubmitRequest};
use crate::store::{AnalysisKind, DatasetId, DatasetRecord, JobId, NewAnnotation};

type Params = Query<BTreeMap<String, String>>;

pub const DEFAULT_PAGE: usize = 50;
pub const MAX_PAGE: usize = 500;

/// Run store/engine work off the async executor.
async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::invalid("INVALID_BODY", e.to_string()))
}

fn parse_kind(s: &str) -> Result<AnalysisKind, ApiError> {
    s.parse()
        .map_err(|_| ApiError::invalid("INVALID_PARAMS", format!("unknown analysis kind `{s}`")))
}

fn audit(state: &AppState, who: &Principal, action: &str, target: &str) {
    if let Err(e) = state.engine.store().audit(&who.0, action, Some(target)) {
        tracing::error!(error = %e, action, "audit write failed");
    }
}

pub async fn not_found() -> ApiError {
    ApiError::not_found("no such endpoint")
}

pub async fn health() -> Json<serde_json::Value> {
    Json(json!({"status": "ok"}))
}

// ---- datasets ----

#[derive(Default)]
struct Upload {
    file: Option<(Option<String>, Bytes)>,
    format: Option<String>,
    schema: Option<String>,
    name: Option<String>,
}

async fn read_upload(mut multipart: Multipart) -> Result<Upload, ApiError> {
    let bad = |e: axum::extract::multipart::MultipartError| ApiError::invalid("INVALID_BODY", e.body_text());
    let mut up = Upload::default();
    while let Some(field) = multipart.next_field().await.map_err(bad)? {
        match field.name().unwrap_or_default() {
            "file" => {
                let filename = field.file_name().map(str::to_string);
                up.file = Some((filename, field.bytes().await.map_err(bad)?));
            }
            "format" => up.format = Some(field.text().await.map_err(bad)?),
            "schema" => up.schema = Some(field.text().await.map_err(bad)?),
            "name" => up.name = Some(field.text().await.map_err(bad)?),
            _ => {}
        }
    }
    Ok(up)
}

pub async fn upload_dataset(
    State(state): State<Arc<AppState>>,
    Extension(who): Extension<Principal>,
    multipart: Multipart,
) -> Result<Response, ApiError> {
    let up = read_upload(multipart).await?;
    let (filename, bytes) = up
        .file
        .ok_or_else(|| ApiError::invalid("MISSING_FIELD", "multipart field `file` is required"))?;
    let format = match (&up.format, &filename) {
        (Some(f), _) if !f.trim().is_empty() => f
            .parse::<SourceFormat>()
            .map_err(|e| ApiError::invalid("INVALID_PARAMS", e.to_string()))?,
        (_, Some(name)) => SourceFormat::from_extension(std::path::Path::new(name))
            .ok_or_else(|| ApiError::invalid("INVALID_PARAMS", "cannot infer format; pass `format`"))?,
        _ => return Err(ApiError::invalid("INVALID_PARAMS", "`format` is required")),
    };
    let schema: PostSchema = match up.schema.as_deref().map(str::trim) {
        Some(s) if !s.is_empty() => parse_body(s.as_bytes())?,
        _ => PostSchema::default(),
    };
    let name = up.name.or(filename).unwrap_or_else(|| "upload".to_string());
    let outcome = blocking({
        let state = state.clone();
        move || Ok(state.engine.ingest(&name, &bytes, format, &schema)?)
    })
    .await?;
    audit(&state, &who, "dataset.upload", outcome.dataset_id.as_str());
    Ok((StatusCode::CREATED, Json(outcome)).into_response())
}

#[derive(Serialize)]
struct DatasetPage {
    items: Vec<DatasetRecord>,
    /// Cursor for the next page, absent on the last one.
    next_after: Option<DatasetId>,
}

pub async fn list_datasets(State(state): State<Arc<AppState>>, Query(q): Params) -> Result<Response, ApiError> {
    let limit = match q.get("limit") {
        Some(l) => l
            .parse::<usize>()
            .ok()
            .filter(|n| (1..=MAX_PAGE).contains(n))
            .ok_or_else(|| ApiError::invalid("INVALID_PARAMS", format!("limit must be 1..={MAX_PAGE}")))?,
        None => DEFAULT_PAGE,
    };
    let after = q.get("after").map(|a| DatasetId::from(a.as_str()));
    let items = blocking(move || Ok(state.engine.store().list_datasets(limit, after.as_ref())?)).await?;
    let next_after = (items.len() == limit).then(|| items.last().map(|d| d.dataset_id.clone())).flatten();
    Ok(Json(DatasetPage { items, next_after }).into_response())
}

pub async fn get_dataset(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let record = blocking(move || Ok(state.engine.store().dataset_record(&DatasetId::from(id))?)).await?;
    Ok(Json(record).into_response())
}

pub async fn get_results(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Params,
) -> Result<Response, ApiError> {
    let kind = q.get("kind").map(|k| parse_kind(k)).transpose()?;
    let dataset_id = DatasetId::from(id);
    let results = blocking({
        let dataset_id = dataset_id.clone();
        move || Ok(state.engine.store().get_results(&dataset_id, kind)?)
    })
    .await?;
    Ok(Json(json!({"dataset_id": dataset_id, "results": results})).into_response())
}

pub async fn list_annotations(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let dataset_id = DatasetId::from(id);
    let annotations = blocking({
        let dataset_id = dataset_id.clone();
        move || {
            let store = state.engine.store();
            store.dataset_record(&dataset_id)?;
            Ok(store.list_annotations(&dataset_id)?)
        }
    })
    .await?;
    Ok(Json(json!({"dataset_id": dataset_id, "annotations": annotations})).into_response())
}

// ---- jobs ----

#[derive(Serialize)]
struct JobView {
    #[serde(flatten)]
    job: AnalysisJob,
    /// 1-based place in line while queued.
    #[serde(skip_serializing_if = "Option::is_none")]
    queue_position: Option<usize>,
}

pub async fn submit_job(
    State(state): State<Arc<AppState>>,
    Extension(who): Extension<Principal>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: SubmitRequest = parse_body(&body)?;
    let job_id = blocking({
        let state = state.clone();
        move || Ok(state.queue.submit(req)?)
    })
    .await?;
    audit(&state, &who, "job.submit", job_id.as_str());
    Ok((StatusCode::ACCEPTED, Json(json!({"job_id": job_id, "state": JobState::Queued}))).into_response())
}

pub async fn list_jobs(State(state): State<Arc<AppState>>, Query(q): Params) -> Result<Response, ApiError> {
    let filter = q
        .get("state")
        .map(|s| JobState::parse(s).ok_or_else(|| ApiError::invalid("INVALID_PARAMS", format!("unknown state `{s}`"))))
        .transpose()?;
    let dataset = q.get("dataset_id").map(|d| DatasetId::from(d.as_str()));
    let jobs = blocking(move || {
        let mut jobs = state.engine.store().list_jobs(filter)?;
        if let Some(d) = dataset {
            jobs.retain(|j| j.dataset_id == d);
        }
        Ok(jobs)
    })
    .await?;
    Ok(Json(json!({"items": jobs})).into_response())
}

pub async fn get_job(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let view = blocking(move || {
        let id = JobId::from(id);
        let job = state.queue.get(&id)?;
        let queue_position = match job.state {
            JobState::Queued => state.queue.queue_position(&id)?,
            _ => None,
        };
        Ok(JobView { job, queue_position })
    })
    .await?;
    Ok(Json(view).into_response())
}

pub async fn cancel_job(
    State(state): State<Arc<AppState>>,
    Extension(who): Extension<Principal>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let job = blocking({
        let state = state.clone();
        move || Ok(state.queue.cancel(&JobId::from(id))?)
    })
    .await?;
    audit(&state, &who, "job.cancel", job.job_id.as_str());
    Ok(Json(job).into_response())
}

// ---- annotations and feedback ----

#[derive(Deserialize)]
struct AnnotationBody {
    dataset_id: DatasetId,
    post_id: String,
    kind: AnalysisKind,
    old_label: String,
    new_label: String,
    #[serde(default)]
    annotator: Option<String>,
}

pub async fn create_annotation(
    State(state): State<Arc<AppState>>,
    Extension(who): Extension<Principal>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let b: AnnotationBody = parse_body(&body)?;
    let new = NewAnnotation {
        dataset_id: b.dataset_id,
        post_id: b.post_id,
        kind: b.kind,
        old_label: b.old_label,
        new_label: b.new_label,
        annotator: b.annotator.unwrap_or_else(|| who.0.clone()),
    };
    let saved = blocking({
        let state = state.clone();
        move || {
            state.engine.store().dataset_record(&new.dataset_id)?;
            Ok(state.engine.store().record_annotation(&new)?)
        }
    })
    .await?;
    audit(&state, &who, "annotation.create", saved.annotation_id.as_str());
    Ok((StatusCode::CREATED, Json(saved)).into_response())
}

#[derive(Deserialize)]
struct FeedbackBody {
    dataset_id: DatasetId,
}

pub async fn apply_feedback(
    State(state): State<Arc<AppState>>,
    Extension(who): Extension<Principal>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let b: FeedbackBody = parse_body(&body)?;
    let report = blocking({
        let state = state.clone();
        move || Ok(state.engine.apply_feedback(&b.dataset_id)?)
    })
    .await?;
    audit(&state, &who, "feedback.apply", report.dataset_id.as_str());
    Ok(Json(report).into_response())
}

// ---- export ----

pub async fn export(
    State(state): State<Arc<AppState>>,
    Extension(who): Extension<Principal>,
    Path(id): Path<String>,
    Query(q): Params,
) -> Result<Response, ApiError> {
    let format: ExportFormat = q
        .get("format")
        .map_or(Ok(ExportFormat::Json), |f| f.parse())
        .map_err(|e: String| ApiError::invalid("INVALID_PARAMS", e))?;
    let job_id = JobId::from(id);
    let bytes = blocking({
        let state = state.clone();
        let job_id = job_id.clone();
        move || Ok(state.engine.export(&job_id, format)?)
    })
    .await?;
    audit(&state, &who, "export.download", job_id.as_str());
    let ext = match format {
        ExportFormat::Csv => "csv",
        ExportFormat::Json => "json",
    };
    Ok((
        [
            (header::CONTENT_TYPE, format.content_type().to_string()),
            (
                header::CONTENT_DISPOSITION,
                format!("attachment; filename=\"{}.{ext}\"", job_id.as_str()),
            ),
        ],
        bytes,
    )
        .into_response())
}

// ---- sources ----

pub async fn list_sources(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({"sources": state.sources.list_sources()}))
}

#[derive(Deserialize)]
struct SearchBody {
    #[serde(flatten)]
    request: SearchRequest,
    #[serde(default)]
    credentials: Option<Credentials>,
    /// Store the results as a new dataset.
    #[serde(default)]
    save: bool,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    schema: Option<PostSchema>,
}

#[derive(Serialize)]
struct SearchResponse {
    source_id: String,
    count: usize,
    records: Vec<RawRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dataset: Option<crate::engine::IngestOutcome>,
}

pub async fn search_source(
    State(state): State<Arc<AppState>>,
    Extension(who): Extension<Principal>,
    Path(source_id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let b: SearchBody = parse_body(&body)?;
    let response = blocking({
        let state = state.clone();
        let source_id = source_id.clone();
        move || {
            let records = state
                .sources
                .search(&source_id, &b.request, b.credentials.as_ref())?;
            let dataset = if b.save {
                let name = b.name.unwrap_or_else(|| format!("{source_id}: {}", b.request.query));
                let schema = b.schema.unwrap_or_default();
                Some(state.engine.ingest_records(&name, records.clone(), &schema)?)
            } else {
                None
            };
            Ok(SearchResponse {
                source_id,
                count: records.len(),
                records,
                dataset,
            })
        }
    })
    .await?;
    let target = match &response.dataset {
        Some(d) => format!("{source_id} -> {}", d.dataset_id.as_str()),
        None => source_id,
    };
    audit(&state, &who, "source.search", &target);
    let status = if response.dataset.is_some() {
        StatusCode::CREATED
    } else {
        StatusCode::OK
    };
    Ok((status, Json(response)).into_response())
}
