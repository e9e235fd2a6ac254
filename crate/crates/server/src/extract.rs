use axum::extract::{FromRequest, FromRequestParts};
use storyboard_core::model::ProjectId;

use crate::error::ApiError;

/// `axum::Json` with structured error bodies.
#[derive(FromRequest)]
#[from_request(via(axum::Json), rejection(ApiError))]
pub struct ApiJson<T>(pub T);

/// `axum::extract::Path` with structured error bodies.
#[derive(FromRequestParts)]
#[from_request(via(axum::extract::Path), rejection(ApiError))]
pub struct ApiPath<T>(pub T);

/// `axum::extract::Query` with structured error bodies.
#[derive(FromRequestParts)]
#[from_request(via(axum::extract::Query), rejection(ApiError))]
pub struct ApiQuery<T>(pub T);

pub fn project_id(raw: &str) -> Result<ProjectId, ApiError> {
    ProjectId::new(raw).map_err(|_| ApiError::not_found("not_found", format!("project {raw} not found")))
}
