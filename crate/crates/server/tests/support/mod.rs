#![allow(dead_code)]

use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use storyboard_core::MockProvider;
use storyboard_server::{router, AppState, ServerConfig};
use tower::ServiceExt;

pub struct TestApp {
    pub state: AppState,
    pub mock: Arc<MockProvider>,
    pub dir: tempfile::TempDir,
}

impl TestApp {
    pub fn new(mock: MockProvider) -> Self {
        Self::with_config(mock, |_| {})
    }

    pub fn with_config(mock: MockProvider, tweak: impl FnOnce(&mut ServerConfig)) -> Self {
        let dir = tempfile::tempdir().expect("temp dir");
        let mut config = ServerConfig::new(dir.path());
        tweak(&mut config);
        let mock = Arc::new(mock);
        let state = AppState::new(config, mock.clone()).expect("state");
        Self { state, mock, dir }
    }

    pub fn router(&self) -> Router {
        router(self.state.clone())
    }

    pub async fn raw(&self, request: Request<Body>) -> (StatusCode, Vec<u8>) {
        let response = self.router().oneshot(request).await.expect("infallible");
        let status = response.status();
        let bytes = response.into_body().collect().await.expect("body").to_bytes();
        (status, bytes.to_vec())
    }

    pub async fn call(&self, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let builder = Request::builder().method(method).uri(uri);
        let request = match body {
            Some(v) => builder
                .header("content-type", "application/json")
                .body(Body::from(v.to_string())),
            None => builder.body(Body::empty()),
        }
        .expect("request");
        let (status, bytes) = self.raw(request).await;
        let value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap_or_else(|_| json!(String::from_utf8_lossy(&bytes)))
        };
        (status, value)
    }

    pub async fn get(&self, uri: &str) -> (StatusCode, Value) {
        self.call(Method::GET, uri, None).await
    }

    pub async fn post(&self, uri: &str, body: Value) -> (StatusCode, Value) {
        self.call(Method::POST, uri, Some(body)).await
    }

    /// POSTs and insists on `expected`, returning the body.
    pub async fn ok(&self, method: Method, uri: &str, body: Option<Value>, expected: StatusCode) -> Result<Value, String> {
        let (status, value) = self.call(method.clone(), uri, body).await;
        if status == expected {
            Ok(value)
        } else {
            Err(format!("{method} {uri}: {status} {value}"))
        }
    }

    /// Polls the job until it reaches a terminal state.
    pub async fn wait_for_job(&self, job: &str, limit: Duration) -> Result<Value, String> {
        let start = Instant::now();
        loop {
            let (status, body) = self.get(&format!("/api/v1/jobs/{job}")).await;
            if status != StatusCode::OK {
                return Err(format!("job status {status}: {body}"));
            }
            if body["terminal"] == json!(true) {
                return Ok(body);
            }
            if start.elapsed() > limit {
                return Err(format!("job {job} still {} after {limit:?}", body["state"]));
            }
            tokio::time::sleep(Duration::from_millis(10)).await;
        }
    }
}

pub fn id_of(v: &Value) -> u64 {
    v["id"].as_u64().unwrap_or_else(|| panic!("no id in {v}"))
}

/// Handles for a project built through the API.
pub struct Built {
    pub project: String,
    pub boards: Vec<u64>,
    /// Action node ids per board, in creation order.
    pub actions: Vec<Vec<u64>>,
}

/// Creates a project with one board per entry of `acts`; each board puts
/// Ahmad, John and Ben on the canvas and adds the listed actions, each from
/// one subject to one object (indices into the three characters).
pub async fn build_project(
    app: &TestApp,
    structure: &str,
    acts: &[&[(&str, usize, usize)]],
) -> Result<Built, String> {
    let p = app
        .ok(
            Method::POST,
            "/api/v1/projects",
            Some(json!({ "title": "Harbour", "genre": "Thriller", "structure": structure })),
            StatusCode::CREATED,
        )
        .await?;
    let pid = p["id"].as_str().ok_or("no project id")?.to_string();
    let base = format!("/api/v1/projects/{pid}");
    let mut characters = Vec::new();
    for name in ["Ahmad", "John", "Ben"] {
        let c = app
            .ok(
                Method::POST,
                &format!("{base}/characters"),
                Some(json!({ "name": name })),
                StatusCode::CREATED,
            )
            .await?;
        characters.push(id_of(&c));
    }
    let mut boards = Vec::new();
    let mut actions = Vec::new();
    for act in acts {
        let b = app
            .ok(Method::POST, &format!("{base}/boards"), None, StatusCode::CREATED)
            .await?;
        let bid = id_of(&b);
        let nodes_uri = format!("{base}/boards/{bid}/nodes");
        let mut char_nodes = Vec::new();
        for (i, c) in characters.iter().enumerate() {
            let n = app
                .ok(
                    Method::POST,
                    &nodes_uri,
                    Some(json!({ "type": "character", "character_id": c,
                                 "position": { "x": 10.0 * i as f64, "y": 0.0 } })),
                    StatusCode::CREATED,
                )
                .await?;
            char_nodes.push(id_of(&n));
        }
        let mut board_actions = Vec::new();
        for (label, from, to) in act.iter() {
            let a = app
                .ok(
                    Method::POST,
                    &nodes_uri,
                    Some(json!({ "type": "action", "label": label })),
                    StatusCode::CREATED,
                )
                .await?;
            let aid = id_of(&a);
            for (source, target) in [(char_nodes[*from], aid), (aid, char_nodes[*to])] {
                app.ok(
                    Method::POST,
                    &format!("{base}/boards/{bid}/edges"),
                    Some(json!({ "source": source, "target": target })),
                    StatusCode::CREATED,
                )
                .await?;
            }
            board_actions.push(aid);
        }
        boards.push(bid);
        actions.push(board_actions);
    }
    Ok(Built {
        project: pid,
        boards,
        actions,
    })
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Three-act project built over HTTP, events reordered, generated with the
/// mock; a second generate while the first runs must conflict.
pub async fn three_act_end_to_end(app: &TestApp) -> Result<String, String> {
    let built = build_project(
        app,
        "three_act",
        &[
            &[("met", 0, 1)],
            &[("humiliated", 0, 1), ("helped", 2, 1)],
            &[("rescued", 1, 2)],
        ],
    )
    .await?;
    let base = format!("/api/v1/projects/{}", built.project);

    let reversed: Vec<u64> = built.actions[1].iter().rev().copied().collect();
    let ev = app
        .ok(
            Method::PUT,
            &format!("{base}/boards/{}/event-order", built.boards[1]),
            Some(json!({ "order": reversed })),
            StatusCode::OK,
        )
        .await?;
    let texts: Vec<&str> = ev["events"]
        .as_array()
        .ok_or("no events")?
        .iter()
        .filter_map(|e| e["text"].as_str())
        .collect();
    ensure(texts == ["Ben helped John", "Ahmad humiliated John"], || {
        format!("event order after reorder: {texts:?}")
    })?;

    let v = app.ok(Method::GET, &format!("{base}/validation"), None, StatusCode::OK).await?;
    ensure(v["valid"] == json!(true), || format!("validation: {v}"))?;

    let started = app
        .ok(Method::POST, &format!("{base}/generate"), None, StatusCode::ACCEPTED)
        .await?;
    let job = started["job_id"].as_str().ok_or("no job id")?.to_string();
    let (status, conflict) = app.call(Method::POST, &format!("{base}/generate"), None).await;
    ensure(status == StatusCode::CONFLICT, || {
        format!("second generate returned {status}: {conflict}")
    })?;
    ensure(conflict["error"]["code"] == "generation_running", || {
        format!("conflict body: {conflict}")
    })?;

    let done = app.wait_for_job(&job, Duration::from_secs(10)).await?;
    ensure(done["state"]["state"] == "done", || format!("job ended as {done}"))?;

    let story = app.ok(Method::GET, &format!("{base}/story"), None, StatusCode::OK).await?;
    let chapters = story["chapters"].as_array().ok_or("no chapters")?;
    ensure(chapters.len() == 3, || format!("{} chapters", chapters.len()))?;
    for (i, c) in chapters.iter().enumerate() {
        let text = c["text"].as_str().unwrap_or("");
        ensure(text.starts_with(&format!("CH{}:", i + 1)), || format!("chapter {} text {text:?}", i + 1))?;
    }

    let chapter_two = app
        .mock
        .received()
        .into_iter()
        .find(|p| p.text.contains("Write chapter 2 with"))
        .ok_or("chapter 2 prompt missing")?;
    ensure(
        chapter_two
            .text
            .contains("1. Ben helped John\n2. Ahmad humiliated John"),
        || "chapter 2 prompt ignores the event order".into(),
    )?;
    Ok(format!("3 chapters via HTTP; concurrent generate -> {}", StatusCode::CONFLICT))
}
