use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use sheetkg_core::session::SessionError;

/// Error body of every failed request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub parameter: Option<String>,
    #[serde(skip)]
    status: u16,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>, parameter: Option<&str>) -> Self {
        ApiError {
            code: code.into(),
            message: message.into(),
            parameter: parameter.map(str::to_string),
            status: status.as_u16(),
        }
    }

    pub fn bad_request(code: &str, message: impl Into<String>, parameter: &str) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message, Some(parameter))
    }

    pub fn not_found(code: &str, message: impl Into<String>, parameter: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message, Some(parameter))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message, None)
    }

    pub fn status(&self) -> StatusCode {
        StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR)
    }
}

/// HTTP status of an engine error code.
fn status_of(code: &str) -> StatusCode {
    match code {
        "staging-not-found" | "commit-not-found" | "person-not-found" => StatusCode::NOT_FOUND,
        "staging-closed" | "already-collected" | "already-undone" => StatusCode::CONFLICT,
        "invalid-workbook" => StatusCode::UNPROCESSABLE_ENTITY,
        _ => StatusCode::BAD_REQUEST,
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let code = e.code();
        ApiError::new(status_of(code), code, e.to_string(), e.parameter())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self)).into_response()
    }
}
