//! HTTP and WebSocket front end for the storyboard engine.
//!
//! Everything lives under `/api/v1`. Generation runs in the background;
//! `POST /projects/{id}/generate` answers with a job id whose progress is
//! streamed at `/jobs/{job}/stream`.

mod error;
mod extract;
mod generation;
mod metrics;
mod progress;
mod projects;
mod state;

use axum::extract::{DefaultBodyLimit, State};
use axum::routing::{get, patch, post, put};
use axum::{Json, Router};
use serde_json::{json, Value};

pub use error::ApiError;
pub use progress::{ProgressFrame, FRAME_VERSION};
pub use state::{AppState, ServerConfig};

const MAX_UPLOAD_BYTES: usize = 16 * 1024 * 1024;

async fn health(State(state): State<AppState>) -> Json<Value> {
    let provider = &state.0.provider;
    Json(json!({
        "status": "ok",
        "provider": provider.name(),
        "capabilities": provider.capabilities(),
    }))
}

async fn not_found() -> ApiError {
    ApiError::not_found("no_route", "no such endpoint")
}

pub fn router(state: AppState) -> Router {
    use generation as g;
    use projects as p;

    let project = Router::new()
        .route("/", get(p::get_project).patch(p::patch_project))
        .route("/validation", get(p::validation))
        .route("/story", get(p::story))
        .route("/generate", post(g::start))
        .route("/characters", get(p::list_characters).post(p::create_character))
        .route(
            "/characters/:cid",
            get(p::get_character)
                .patch(p::patch_character)
                .delete(p::delete_character),
        )
        .route("/characters/:cid/image", put(p::put_character_image))
        .route("/images/:sha", get(p::get_image))
        .route("/boards", get(p::list_boards).post(p::create_board))
        .route("/board-order", put(p::put_board_order))
        .route(
            "/boards/:bid",
            get(p::get_board).patch(p::patch_board).delete(p::delete_board),
        )
        .route("/boards/:bid/scenery-image", put(p::put_scenery_image))
        .route("/boards/:bid/nodes", post(p::create_node))
        .route(
            "/boards/:bid/nodes/:nid",
            patch(p::patch_node).delete(p::delete_node),
        )
        .route("/boards/:bid/edges", post(p::create_edge))
        .route("/boards/:bid/edges/:eid", axum::routing::delete(p::delete_edge))
        .route("/boards/:bid/events", get(p::get_events))
        .route("/boards/:bid/event-order", put(p::put_event_order));

    let api = Router::new()
        .route("/health", get(health))
        .route("/config", get(p::story_config))
        .route("/projects", get(p::list_projects).post(p::create_project))
        .nest("/projects/:pid", project)
        .route("/jobs/:jid", get(g::status))
        .route("/jobs/:jid/cancel", post(g::cancel))
        .route("/jobs/:jid/stream", get(g::stream))
        .route("/metrics/ttr", post(metrics::ttr))
        .route("/metrics/sus", post(metrics::sus))
        .route("/metrics/micsi", post(metrics::micsi));

    Router::new()
        .nest("/api/v1", api)
        .fallback(not_found)
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(state)
}
