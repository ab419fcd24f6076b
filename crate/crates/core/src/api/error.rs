use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use crate::connectors::ConnectorError;
use crate::engine::EngineError;
use crate::ingest::ValidationReport;
use crate::jobs::JobError;
use crate::store::StoreError;

/// JSON error body: `{"error": {"code", "message", "validation_report"?}}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    pub report: Option<ValidationReport>,
}

#[derive(Serialize)]
struct Body<'a> {
    error: Inner<'a>,
}

#[derive(Serialize)]
struct Inner<'a> {
    code: &'a str,
    message: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    validation_report: Option<&'a ValidationReport>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.to_string(),
            message: message.into(),
            report: None,
        }
    }

    pub fn unauthorized() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "UNAUTHORIZED", "missing or invalid bearer token")
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NOT_FOUND", what)
    }

    pub fn invalid(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(code = %self.code, message = %self.message, "request failed");
        }
        let body = Body {
            error: Inner {
                code: &self.code,
                message: &self.message,
                validation_report: self.report.as_ref(),
            },
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let code = e.code();
        let status = match &e {
            EngineError::NothingAccepted { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            _ if e.is_not_found() => StatusCode::NOT_FOUND,
            _ if matches!(code, "DUPLICATE_JOB" | "ILLEGAL_TRANSITION" | "NO_RESULT" | "DUPLICATE_RESULT") => {
                StatusCode::CONFLICT
            }
            EngineError::Adapter(_) if !e.is_user_error() => StatusCode::BAD_GATEWAY,
            _ if e.is_user_error() => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut out = ApiError::new(status, code, e.to_string());
        if let EngineError::NothingAccepted { report } = e {
            out.report = Some(report);
        }
        out
    }
}

impl From<JobError> for ApiError {
    fn from(e: JobError) -> Self {
        EngineError::from(e).into()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        EngineError::from(e).into()
    }
}

impl From<ConnectorError> for ApiError {
    fn from(e: ConnectorError) -> Self {
        let status = match &e {
            ConnectorError::UnknownSource(_) => StatusCode::NOT_FOUND,
            ConnectorError::RateLimited(_) => StatusCode::TOO_MANY_REQUESTS,
            ConnectorError::Unreachable { .. } | ConnectorError::BadResponse { .. } => StatusCode::BAD_GATEWAY,
            ConnectorError::Duplicate(_) => StatusCode::CONFLICT,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}
