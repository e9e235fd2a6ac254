//! Project, character, board and graph endpoints.

use axum::body::Bytes;
use axum::extract::{FromRequest, Multipart, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Deserializer};
use serde_json::{json, Value};
use storyboard_core::events::{self, BoardAnalysis};
use storyboard_core::model::{
    BoardId, CharacterId, EdgeId, ModelError, NodeId, Position, ProjectId, StoryProject,
    StoryStructure,
};
use storyboard_core::pipeline::{self, readiness_report};
use storyboard_core::provider::sniff_media_type;
use storyboard_core::store::blob_ref_for;
use storyboard_core::model::BlobRef;
use storyboard_core::NodeKind;

use crate::error::ApiError;
use crate::extract::{project_id, ApiJson, ApiPath};
use crate::state::AppState;

type ApiResult<T = Json<Value>> = Result<T, ApiError>;

fn created(value: Value) -> (StatusCode, Json<Value>) {
    (StatusCode::CREATED, Json(value))
}

pub fn project_view(project: &StoryProject) -> Value {
    let mut v = serde_json::to_value(project).expect("project serializes");
    v.as_object_mut()
        .expect("object")
        .insert("id".into(), json!(project.id));
    v
}

/// Distinguishes an absent field from an explicit `null`.
fn present<'de, D, T>(d: D) -> Result<Option<Option<T>>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    Option::<T>::deserialize(d).map(Some)
}

// ---- projects ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewProject {
    id: Option<String>,
    title: String,
    genre: String,
    structure: StoryStructure,
}

fn canonical_genre(state: &AppState, genre: &str) -> Result<String, ApiError> {
    state
        .0
        .story
        .genre(genre)
        .map(str::to_string)
        .ok_or_else(|| {
            ApiError::bad_request("unknown_genre", format!("genre {genre:?} is not offered"))
                .with_details(json!({ "genres": state.0.story.genres }))
        })
}

pub async fn create_project(
    State(state): State<AppState>,
    ApiJson(body): ApiJson<NewProject>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let id = match body.id {
        Some(raw) => ProjectId::new(raw).map_err(ApiError::from)?,
        None => ProjectId::new(uuid::Uuid::new_v4().simple().to_string())?,
    };
    let genre = canonical_genre(&state, &body.genre)?;
    let project = StoryProject::new(id, body.title.trim(), genre, body.structure);
    state.store().create(&project)?;
    tracing::info!(project = %project.id, "project created");
    Ok(created(project_view(&project)))
}

pub async fn list_projects(State(state): State<AppState>) -> ApiResult {
    let mut out = Vec::new();
    for id in state.store().list()? {
        match state.store().load(&id) {
            Ok(p) => out.push(json!({
                "id": p.id,
                "title": p.title,
                "genre": p.genre,
                "structure": p.structure,
                "boards": p.boards.len(),
                "chapters": p.chapters.len(),
            })),
            Err(e) => tracing::warn!(project = %id, error = %e, "skipping unreadable project"),
        }
    }
    Ok(Json(json!({ "projects": out })))
}

pub async fn get_project(
    State(state): State<AppState>,
    ApiPath(pid): ApiPath<String>,
) -> ApiResult {
    let project = state.load(&project_id(&pid)?)?;
    Ok(Json(project_view(&project)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectPatch {
    title: Option<String>,
    genre: Option<String>,
    structure: Option<StoryStructure>,
}

pub async fn patch_project(
    State(state): State<AppState>,
    ApiPath(pid): ApiPath<String>,
    ApiJson(patch): ApiJson<ProjectPatch>,
) -> ApiResult {
    let genre = patch
        .genre
        .as_deref()
        .map(|g| canonical_genre(&state, g))
        .transpose()?;
    let (_, project) = state
        .mutate(&project_id(&pid)?, |p| {
            if let Some(title) = patch.title {
                p.set_title(title.trim());
            }
            if let Some(genre) = genre {
                p.set_genre(genre);
            }
            if let Some(structure) = patch.structure {
                p.set_structure(structure);
            }
            Ok(())
        })
        .await?;
    Ok(Json(project_view(&project)))
}

pub async fn validation(
    State(state): State<AppState>,
    ApiPath(pid): ApiPath<String>,
) -> ApiResult {
    let project = state.load(&project_id(&pid)?)?;
    let report = readiness_report(&project);
    Ok(Json(json!({ "valid": report.is_valid(), "violations": report.violations })))
}

pub async fn story(State(state): State<AppState>, ApiPath(pid): ApiPath<String>) -> ApiResult {
    let project = state.load(&project_id(&pid)?)?;
    let chapters: Vec<Value> = project
        .chapters
        .iter()
        .map(|c| {
            let act = project
                .boards
                .get(c.index as usize - 1)
                .map(|b| b.act_label.clone());
            json!({
                "index": c.index,
                "act_label": act,
                "text": c.text,
                "summary": c.summary,
                "word_target": c.word_target,
            })
        })
        .collect();
    Ok(Json(json!({
        "project_id": project.id,
        "title": project.title,
        "complete": !chapters.is_empty() && chapters.len() == project.boards.len(),
        "chapters": chapters,
    })))
}

pub async fn story_config(State(state): State<AppState>) -> Json<Value> {
    Json(json!({
        "genres": state.0.story.genres,
        "default_actions": state.0.story.default_actions,
        "structures": [
            { "structure": StoryStructure::Free, "acts": StoryStructure::Free.act_labels() },
            { "structure": StoryStructure::ThreeAct, "acts": StoryStructure::ThreeAct.act_labels() },
            { "structure": StoryStructure::FiveAct, "acts": StoryStructure::FiveAct.act_labels() },
        ],
    }))
}

// ---- characters ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewCharacter {
    name: String,
    appearance: Option<String>,
}

pub async fn list_characters(
    State(state): State<AppState>,
    ApiPath(pid): ApiPath<String>,
) -> ApiResult {
    let project = state.load(&project_id(&pid)?)?;
    Ok(Json(json!({ "characters": project.characters })))
}

pub async fn create_character(
    State(state): State<AppState>,
    ApiPath(pid): ApiPath<String>,
    ApiJson(body): ApiJson<NewCharacter>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let (id, project) = state
        .mutate(&project_id(&pid)?, |p| {
            let id = p.add_character(&body.name)?;
            if body.appearance.is_some() {
                p.set_character_appearance(id, body.appearance)?;
            }
            Ok(id)
        })
        .await?;
    Ok(created(json!(project.character(id))))
}

pub async fn get_character(
    State(state): State<AppState>,
    ApiPath((pid, cid)): ApiPath<(String, u64)>,
) -> ApiResult {
    let project = state.load(&project_id(&pid)?)?;
    let c = project
        .character(CharacterId(cid))
        .ok_or(ModelError::UnknownCharacter(CharacterId(cid)))?;
    Ok(Json(json!(c)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacterPatch {
    name: Option<String>,
    #[serde(default, deserialize_with = "present")]
    appearance: Option<Option<String>>,
}

pub async fn patch_character(
    State(state): State<AppState>,
    ApiPath((pid, cid)): ApiPath<(String, u64)>,
    ApiJson(patch): ApiJson<CharacterPatch>,
) -> ApiResult {
    let id = CharacterId(cid);
    let (_, project) = state
        .mutate(&project_id(&pid)?, |p| {
            if let Some(name) = &patch.name {
                p.rename_character(id, name)?;
            }
            if let Some(appearance) = patch.appearance {
                p.set_character_appearance(id, appearance)?;
            }
            if p.character(id).is_none() {
                return Err(ModelError::UnknownCharacter(id).into());
            }
            Ok(())
        })
        .await?;
    Ok(Json(json!(project.character(id))))
}

pub async fn delete_character(
    State(state): State<AppState>,
    ApiPath((pid, cid)): ApiPath<(String, u64)>,
) -> ApiResult<StatusCode> {
    state
        .mutate(&project_id(&pid)?, |p| Ok(p.remove_character(CharacterId(cid))?))
        .await?;
    Ok(StatusCode::NO_CONTENT)
}

// ---- images ----

/// Image bytes from a raw body or the first part of a multipart form.
pub struct ImageUpload(Vec<u8>);

#[axum::async_trait]
impl<S: Send + Sync> FromRequest<S> for ImageUpload {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let multipart = req
            .headers()
            .get(header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .is_some_and(|v| v.starts_with("multipart/form-data"));
        let bytes = if multipart {
            let mut form = Multipart::from_request(req, state)
                .await
                .map_err(|e| ApiError::bad_request("bad_upload", e.body_text()))?;
            let field = form
                .next_field()
                .await
                .map_err(|e| ApiError::bad_request("bad_upload", e.body_text()))?
                .ok_or_else(|| ApiError::bad_request("empty_image", "form has no file part"))?;
            field
                .bytes()
                .await
                .map_err(|e| ApiError::bad_request("bad_upload", e.body_text()))?
        } else {
            Bytes::from_request(req, state)
                .await
                .map_err(|e| ApiError::bad_request("bad_upload", e.body_text()))?
        };
        if bytes.is_empty() {
            return Err(ApiError::bad_request("empty_image", "image body is empty"));
        }
        if sniff_media_type(&bytes) == "application/octet-stream" {
            return Err(ApiError::new(
                StatusCode::UNSUPPORTED_MEDIA_TYPE,
                "unsupported_image",
                "expected a PNG, JPEG, GIF or WebP image",
            ));
        }
        Ok(Self(bytes.to_vec()))
    }
}

enum ImageTarget {
    Character(CharacterId),
    Scenery(BoardId),
}

/// Attaches the image, saves, then asks the provider for a description.
/// The attachment is kept even when the description fails.
async fn attach_and_describe(
    state: &AppState,
    id: ProjectId,
    target: ImageTarget,
    bytes: Vec<u8>,
) -> Result<(StoryProject, BlobRef), ApiError> {
    let _guard = state.lock_project(&id).await;
    let mut project = state.load(&id)?;
    if let Some(job) = state.0.jobs.running_job(&id) {
        return Err(ApiError::generation_running(&job));
    }
    let blob = blob_ref_for(&bytes);
    match target {
        ImageTarget::Character(c) => project.set_character_image(c, Some(blob.clone()))?,
        ImageTarget::Scenery(b) => project.set_scenery_image(b, Some(blob.clone()))?,
    }
    state.store().put_blob(&id, &bytes)?;
    state.store().save(&project)?;

    let worker = state.clone();
    let pid = id.clone();
    let (project, described) = tokio::task::spawn_blocking(move || {
        let blobs = worker.store().blobs(&pid);
        let provider = worker.0.provider.as_ref();
        let result = match target {
            ImageTarget::Character(c) => {
                pipeline::describe_character(&mut project, c, provider, &blobs).map(|_| ())
            }
            ImageTarget::Scenery(b) => {
                pipeline::describe_scenery(&mut project, b, provider, &blobs).map(|_| ())
            }
        };
        (project, result)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    match described {
        Ok(()) => {
            state.store().save(&project)?;
            Ok((project, blob))
        }
        Err(e) => Err(ApiError::from(e).with_details(json!({ "image_ref": blob }))),
    }
}

pub async fn put_character_image(
    State(state): State<AppState>,
    ApiPath((pid, cid)): ApiPath<(String, u64)>,
    ImageUpload(bytes): ImageUpload,
) -> ApiResult {
    let id = CharacterId(cid);
    let (project, _) =
        attach_and_describe(&state, project_id(&pid)?, ImageTarget::Character(id), bytes).await?;
    Ok(Json(json!(project.character(id))))
}

pub async fn put_scenery_image(
    State(state): State<AppState>,
    ApiPath((pid, bid)): ApiPath<(String, u64)>,
    ImageUpload(bytes): ImageUpload,
) -> ApiResult {
    let id = BoardId(bid);
    let (project, _) =
        attach_and_describe(&state, project_id(&pid)?, ImageTarget::Scenery(id), bytes).await?;
    Ok(Json(json!(project.board(id))))
}

/// Serves a stored image for preview.
pub async fn get_image(
    State(state): State<AppState>,
    ApiPath((pid, sha)): ApiPath<(String, String)>,
) -> Result<Response, ApiError> {
    let id = project_id(&pid)?;
    let bytes = state.store().get_blob(&id, &BlobRef(sha))?;
    let media = sniff_media_type(&bytes);
    Ok(([(header::CONTENT_TYPE, media)], bytes).into_response())
}

// ---- boards ----

pub async fn list_boards(
    State(state): State<AppState>,
    ApiPath(pid): ApiPath<String>,
) -> ApiResult {
    let project = state.load(&project_id(&pid)?)?;
    Ok(Json(json!({ "boards": project.boards })))
}

pub async fn create_board(
    State(state): State<AppState>,
    ApiPath(pid): ApiPath<String>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let (id, project) = state
        .mutate(&project_id(&pid)?, |p| Ok(p.add_board()))
        .await?;
    Ok(created(json!(project.board(id))))
}

pub async fn get_board(
    State(state): State<AppState>,
    ApiPath((pid, bid)): ApiPath<(String, u64)>,
) -> ApiResult {
    let project = state.load(&project_id(&pid)?)?;
    let b = project
        .board(BoardId(bid))
        .ok_or(ModelError::UnknownBoard(BoardId(bid)))?;
    Ok(Json(json!(b)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoardPatch {
    #[serde(default, deserialize_with = "present")]
    scenery_description: Option<Option<String>>,
}

pub async fn patch_board(
    State(state): State<AppState>,
    ApiPath((pid, bid)): ApiPath<(String, u64)>,
    ApiJson(patch): ApiJson<BoardPatch>,
) -> ApiResult {
    let id = BoardId(bid);
    let (_, project) = state
        .mutate(&project_id(&pid)?, |p| {
            if let Some(text) = patch.scenery_description {
                p.set_scenery_description(id, text)?;
            }
            p.board(id).ok_or(ModelError::UnknownBoard(id))?;
            Ok(())
        })
        .await?;
    Ok(Json(json!(project.board(id))))
}

pub async fn delete_board(
    State(state): State<AppState>,
    ApiPath((pid, bid)): ApiPath<(String, u64)>,
) -> ApiResult<StatusCode> {
    state
        .mutate(&project_id(&pid)?, |p| Ok(p.remove_board(BoardId(bid))?))
        .await?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Order<T> {
    order: Vec<T>,
}

pub async fn put_board_order(
    State(state): State<AppState>,
    ApiPath(pid): ApiPath<String>,
    ApiJson(body): ApiJson<Order<BoardId>>,
) -> ApiResult {
    let (_, project) = state
        .mutate(&project_id(&pid)?, |p| Ok(p.reorder_boards(&body.order)?))
        .await?;
    let order: Vec<BoardId> = project.boards.iter().map(|b| b.id).collect();
    Ok(Json(json!({ "order": order })))
}

// ---- nodes and edges ----

/// Node as sent by clients. Action labels outside the default palette are
/// stored as custom actions.
#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NodeSpec {
    Character { character_id: CharacterId },
    Action { label: String },
    Relationship { label: String },
}

#[derive(Deserialize)]
pub struct NewNode {
    #[serde(flatten)]
    spec: NodeSpec,
    #[serde(default)]
    position: Position,
}

pub async fn create_node(
    State(state): State<AppState>,
    ApiPath((pid, bid)): ApiPath<(String, u64)>,
    ApiJson(body): ApiJson<NewNode>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let kind = match body.spec {
        NodeSpec::Character { character_id } => NodeKind::character(character_id),
        NodeSpec::Action { label } if state.0.story.is_default_action(&label) => {
            NodeKind::action(label.trim())
        }
        NodeSpec::Action { label } => NodeKind::custom_action(label),
        NodeSpec::Relationship { label } => NodeKind::relationship(label),
    };
    let board = BoardId(bid);
    let (id, project) = state
        .mutate(&project_id(&pid)?, |p| {
            Ok(p.add_node(board, kind, body.position)?)
        })
        .await?;
    Ok(created(json!(project.find_node(id))))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodePatch {
    position: Option<Position>,
    label: Option<String>,
}

pub async fn patch_node(
    State(state): State<AppState>,
    ApiPath((pid, bid, nid)): ApiPath<(String, u64, u64)>,
    ApiJson(patch): ApiJson<NodePatch>,
) -> ApiResult {
    let (board, node) = (BoardId(bid), NodeId(nid));
    let (_, project) = state
        .mutate(&project_id(&pid)?, |p| {
            if let Some(position) = patch.position {
                p.move_node(board, node, position)?;
            }
            if let Some(label) = &patch.label {
                p.relabel_node(board, node, label)?;
            }
            p.board(board)
                .ok_or(ModelError::UnknownBoard(board))?
                .node(node)
                .ok_or(ModelError::UnknownNode(node))?;
            Ok(())
        })
        .await?;
    Ok(Json(json!(project.find_node(node))))
}

pub async fn delete_node(
    State(state): State<AppState>,
    ApiPath((pid, bid, nid)): ApiPath<(String, u64, u64)>,
) -> ApiResult<StatusCode> {
    state
        .mutate(&project_id(&pid)?, |p| {
            Ok(p.remove_node(BoardId(bid), NodeId(nid))?)
        })
        .await?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewEdge {
    source: NodeId,
    target: NodeId,
}

pub async fn create_edge(
    State(state): State<AppState>,
    ApiPath((pid, bid)): ApiPath<(String, u64)>,
    ApiJson(body): ApiJson<NewEdge>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let board = BoardId(bid);
    let (id, project) = state
        .mutate(&project_id(&pid)?, |p| {
            Ok(p.add_edge(board, body.source, body.target)?)
        })
        .await?;
    let edge = project.board(board).and_then(|b| b.edge(id));
    Ok(created(json!(edge)))
}

pub async fn delete_edge(
    State(state): State<AppState>,
    ApiPath((pid, bid, eid)): ApiPath<(String, u64, u64)>,
) -> ApiResult<StatusCode> {
    state
        .mutate(&project_id(&pid)?, |p| {
            Ok(p.remove_edge(BoardId(bid), EdgeId(eid))?)
        })
        .await?;
    Ok(StatusCode::NO_CONTENT)
}

// ---- events ----

fn events_view(project: &StoryProject, board: BoardId) -> Result<Value, ApiError> {
    let b = project.board(board).ok_or(ModelError::UnknownBoard(board))?;
    let BoardAnalysis {
        events: evs,
        relations,
        incomplete,
    } = events::analyze_board(b, project)
        .map_err(|e| ApiError::bad_request("dangling_character", e.to_string()))?;
    let events: Vec<Value> = evs
        .iter()
        .map(|e| {
            let mut v = json!(e);
            v["text"] = json!(events::render_event_text(e, project));
            v
        })
        .collect();
    let relations: Vec<Value> = relations
        .iter()
        .map(|r| {
            let mut v = json!(r);
            v["text"] = json!(events::render_relation_text(r, project));
            v
        })
        .collect();
    let incomplete: Vec<Value> = incomplete
        .iter()
        .map(|c| {
            json!({
                "connector_id": c.connector_id,
                "kind": c.kind,
                "missing": c.missing,
                "message": c.missing.to_string(),
            })
        })
        .collect();
    Ok(json!({
        "board_id": board,
        "events": events,
        "relations": relations,
        "incomplete": incomplete,
    }))
}

pub async fn get_events(
    State(state): State<AppState>,
    ApiPath((pid, bid)): ApiPath<(String, u64)>,
) -> ApiResult {
    let project = state.load(&project_id(&pid)?)?;
    Ok(Json(events_view(&project, BoardId(bid))?))
}

pub async fn put_event_order(
    State(state): State<AppState>,
    ApiPath((pid, bid)): ApiPath<(String, u64)>,
    ApiJson(body): ApiJson<Order<NodeId>>,
) -> ApiResult {
    let board = BoardId(bid);
    let (_, project) = state
        .mutate(&project_id(&pid)?, |p| {
            Ok(p.set_event_order(board, body.order)?)
        })
        .await?;
    Ok(Json(events_view(&project, board)?))
}
