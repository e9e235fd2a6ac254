use axum::extract::rejection::{JsonRejection, PathRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::{json, Value};
use storyboard_core::metrics::MetricsError;
use storyboard_core::model::{ModelError, ValidationReport};
use storyboard_core::pipeline::{DescribeError, RegistryError};
use storyboard_core::store::StoreError;

/// Error response: `{"error": {"code", "message", ...details}}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub details: Option<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            details: None,
        }
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }

    pub fn generation_running(job: &impl std::fmt::Display) -> Self {
        Self::new(
            StatusCode::CONFLICT,
            "generation_running",
            format!("job {job} is generating this project"),
        )
        .with_details(json!({ "job_id": job.to_string() }))
    }

    pub fn validation(report: &ValidationReport) -> Self {
        Self::bad_request("validation_failed", report.to_string())
            .with_details(json!({ "report": report }))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "code": self.code, "message": self.message });
        if let Some(Value::Object(extra)) = self.details {
            body.as_object_mut().expect("object").extend(extra);
        }
        if self.status.is_server_error() {
            tracing::error!(code = self.code, message = %body["message"], "request failed");
        }
        (self.status, Json(json!({ "error": body }))).into_response()
    }
}

impl From<ModelError> for ApiError {
    fn from(e: ModelError) -> Self {
        let status = if e.is_not_found() {
            StatusCode::NOT_FOUND
        } else {
            StatusCode::BAD_REQUEST
        };
        Self::new(status, e.code(), e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match &e {
            StoreError::NotFound(_) | StoreError::BlobNotFound(_) => StatusCode::NOT_FOUND,
            StoreError::AlreadyExists(_) => StatusCode::CONFLICT,
            StoreError::ValidationFailed(_) => StatusCode::BAD_REQUEST,
            StoreError::CorruptDocument { .. } | StoreError::StorageFailure(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        let err = Self::new(status, e.code(), e.to_string());
        match e {
            StoreError::CorruptDocument {
                backup: Some(path), ..
            } => err.with_details(json!({ "backup": path.display().to_string() })),
            _ => err,
        }
    }
}

impl From<DescribeError> for ApiError {
    fn from(e: DescribeError) -> Self {
        match e {
            DescribeError::Model(m) => m.into(),
            DescribeError::NoImage => Self::bad_request("no_image", e.to_string()),
            DescribeError::MissingBlob(_) => Self::not_found("blob_not_found", e.to_string()),
            DescribeError::VisionUnsupported(_) => {
                Self::bad_request("vision_unsupported", e.to_string())
            }
            DescribeError::Provider(_) => {
                Self::new(StatusCode::BAD_GATEWAY, "provider_failure", e.to_string())
            }
        }
    }
}

impl From<RegistryError> for ApiError {
    fn from(e: RegistryError) -> Self {
        match &e {
            RegistryError::UnknownJob(_) => Self::not_found("unknown_job", e.to_string()),
            RegistryError::AlreadyRunning { running } => Self::generation_running(running),
        }
    }
}

impl From<MetricsError> for ApiError {
    fn from(e: MetricsError) -> Self {
        let code = match e {
            MetricsError::EmptyText => "empty_text",
            MetricsError::OutOfRange { .. } => "out_of_range",
            MetricsError::WrongLength { .. } => "wrong_length",
            MetricsError::WrongShape(_) => "wrong_shape",
            MetricsError::Empty => "empty",
            MetricsError::SdUndefined => "sd_undefined",
            MetricsError::Csv(_) => "bad_csv",
        };
        Self::bad_request(code, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::bad_request("bad_request", e.body_text())
    }
}

impl From<PathRejection> for ApiError {
    fn from(e: PathRejection) -> Self {
        Self::bad_request("bad_path", e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        Self::bad_request("bad_query", e.body_text())
    }
}
