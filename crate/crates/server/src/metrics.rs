//! Scoring endpoints. SUS and MICSI accept JSON or a CSV export
//! (`Content-Type: text/csv`).

use axum::body::Bytes;
use axum::http::{header, HeaderMap};
use axum::Json;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use storyboard_core::metrics::{
    micsi_from_csv, micsi_report, sus_from_csv, sus_report, ttr_report, MicsiResponse,
    SusResponse, TTR_PLAUSIBLE,
};

use crate::error::ApiError;
use crate::extract::ApiJson;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TtrRequest {
    texts: Vec<String>,
}

pub async fn ttr(ApiJson(body): ApiJson<TtrRequest>) -> Result<Json<Value>, ApiError> {
    let report = ttr_report(&body.texts)?;
    Ok(Json(json!({
        "ttr": report.ttr,
        "aggregate": report.aggregate,
        "within_plausible_band": report.within_plausible_band,
        "plausible_band": [TTR_PLAUSIBLE.0, TTR_PLAUSIBLE.1],
    })))
}

#[derive(Deserialize)]
struct Labelled<T> {
    respondent: Option<String>,
    #[serde(flatten)]
    response: T,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Batch<T> {
    responses: Vec<T>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SusItems {
    items: SusResponse,
}

fn is_csv(headers: &HeaderMap) -> bool {
    headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("text/csv"))
}

fn parse_json<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("bad_request", e.to_string()))
}

fn body_text(body: &Bytes) -> Result<&str, ApiError> {
    std::str::from_utf8(body).map_err(|_| ApiError::bad_request("bad_csv", "body is not UTF-8"))
}

fn label(respondent: Option<String>, index: usize) -> String {
    respondent.unwrap_or_else(|| (index + 1).to_string())
}

pub async fn sus(headers: HeaderMap, body: Bytes) -> Result<Json<Value>, ApiError> {
    let rows: Vec<(String, SusResponse)> = if is_csv(&headers) {
        sus_from_csv(body_text(&body)?)?
            .into_iter()
            .map(|r| r.into_pair())
            .collect()
    } else {
        parse_json::<Batch<Labelled<SusItems>>>(&body)?
            .responses
            .into_iter()
            .enumerate()
            .map(|(i, r)| (label(r.respondent, i), r.response.items))
            .collect()
    };
    Ok(Json(json!(sus_report(&rows)?)))
}

pub async fn micsi(headers: HeaderMap, body: Bytes) -> Result<Json<Value>, ApiError> {
    let rows: Vec<(String, MicsiResponse)> = if is_csv(&headers) {
        micsi_from_csv(body_text(&body)?)?
            .into_iter()
            .map(|r| r.into_pair())
            .collect()
    } else {
        parse_json::<Batch<Labelled<MicsiResponse>>>(&body)?
            .responses
            .into_iter()
            .enumerate()
            .map(|(i, r)| (label(r.respondent, i), r.response))
            .collect()
    };
    Ok(Json(json!(micsi_report(&rows)?)))
}
