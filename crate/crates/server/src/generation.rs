//! Generation jobs: start, inspect, cancel, stream.

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::Response;
use axum::Json;
use serde::Deserialize;
use serde_json::{json, Value};
use storyboard_core::model::ProjectId;
use storyboard_core::pipeline::{
    readiness_report, FnSink, GenerationJob, JobId, JobState, ProgressEvent, TranscriptEntry,
};
use tokio::sync::broadcast::error::RecvError;

use crate::error::ApiError;
use crate::extract::{project_id, ApiPath, ApiQuery};
use crate::progress::ProgressFrame;
use crate::state::AppState;

pub async fn start(
    State(state): State<AppState>,
    ApiPath(pid): ApiPath<String>,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    let id = project_id(&pid)?;
    let job_id = {
        let _guard = state.lock_project(&id).await;
        let project = state.load(&id)?;
        let report = readiness_report(&project);
        if !report.is_valid() {
            return Err(ApiError::validation(&report));
        }
        let job_id = JobId(uuid::Uuid::new_v4().simple().to_string());
        let cancel = state.0.jobs.start(job_id.clone(), id.clone())?;
        state.0.hub.open(&job_id);
        let runner = state.clone();
        let job = job_id.clone();
        tokio::spawn(async move { run_job(runner, job, project, cancel).await });
        job_id
    };
    tracing::info!(project = %id, job = %job_id, "generation started");
    Ok((
        StatusCode::ACCEPTED,
        Json(json!({ "job_id": job_id, "project_id": id })),
    ))
}

async fn run_job(
    state: AppState,
    job_id: JobId,
    project: storyboard_core::StoryProject,
    cancel: storyboard_core::pipeline::CancelToken,
) {
    let worker = state.clone();
    let wid = job_id.clone();
    let pid = project.id.clone();
    let joined = tokio::task::spawn_blocking(move || {
        let mut job = GenerationJob::new(wid.clone(), project.id.clone());
        let mut terminal = None;
        let mut sink = FnSink(|event: ProgressEvent| {
            match &event {
                ProgressEvent::ChapterStarted { chapter } => worker
                    .0
                    .jobs
                    .update(&wid, JobState::RunningChapter { chapter: *chapter }),
                ProgressEvent::ChapterDone { chapter, .. } => worker
                    .0
                    .jobs
                    .update(&wid, JobState::Summarizing { chapter: *chapter }),
                _ => {}
            }
            // Terminal messages wait until the chapters are on disk.
            if event.is_terminal() {
                terminal = Some(event);
            } else {
                worker.0.hub.publish(&wid, &event);
            }
        });
        let _ = job.run(&project, worker.0.provider.as_ref(), &mut sink, &cancel);
        (job, terminal)
    })
    .await;

    let (job, terminal) = match joined {
        Ok(parts) => parts,
        Err(e) => {
            tracing::error!(job = %job_id, error = %e, "generation worker panicked");
            let failure = storyboard_core::pipeline::FailureReason::Provider {
                chapter: 0,
                message: "internal error".into(),
            };
            state.0.jobs.update(&job_id, JobState::Failed { failure });
            state.0.hub.publish(
                &job_id,
                &ProgressEvent::Error {
                    chapter: None,
                    message: "internal error".into(),
                },
            );
            return;
        }
    };
    let (final_state, transcript, chapters) = job.into_parts();
    let saved = persist(&state, &pid, &job_id, &final_state, transcript, chapters).await;
    let terminal = match saved {
        Ok(()) => terminal,
        Err(e) => {
            tracing::error!(job = %job_id, error = %e.message, "could not store chapters");
            Some(ProgressEvent::Error {
                chapter: None,
                message: format!("could not store chapters: {}", e.message),
            })
        }
    };
    state.0.jobs.update(&job_id, final_state.clone());
    if let Some(event) = terminal {
        state.0.hub.publish(&job_id, &event);
    }
    tracing::info!(project = %pid, job = %job_id, state = ?final_state, "generation finished");
}

/// Stores the finished chapters (all of them, or the ones completed before
/// a failure) and appends the job to the transcript log.
async fn persist(
    state: &AppState,
    id: &ProjectId,
    job_id: &JobId,
    final_state: &JobState,
    transcript: Vec<TranscriptEntry>,
    chapters: Vec<storyboard_core::Chapter>,
) -> Result<(), ApiError> {
    let _guard = state.lock_project(id).await;
    let mut project = state.load(id)?;
    let count = chapters.len();
    project.replace_chapters(chapters)?;
    state.store().save(&project)?;

    let store = state.store();
    for entry in &transcript {
        let mut record = json!({
            "job_id": job_id,
            "template_id": entry.prompt.template_id,
            "response": entry.response,
        });
        if state.0.debug_prompts {
            record["prompt"] = json!(entry.prompt.text);
        }
        store.append_transcript(id, &record)?;
    }
    store.append_transcript(
        id,
        &json!({ "job_id": job_id, "final_state": final_state, "chapters": count }),
    )?;
    Ok(())
}

pub async fn status(
    State(state): State<AppState>,
    ApiPath(jid): ApiPath<String>,
) -> Result<Json<Value>, ApiError> {
    let job = JobId(jid);
    let (Some(job_state), Some(project)) = (state.0.jobs.state(&job), state.0.jobs.project_of(&job))
    else {
        return Err(ApiError::not_found("unknown_job", format!("unknown job {job}")));
    };
    Ok(Json(json!({
        "job_id": job,
        "project_id": project,
        "state": job_state,
        "terminal": job_state.is_terminal(),
    })))
}

pub async fn cancel(
    State(state): State<AppState>,
    ApiPath(jid): ApiPath<String>,
) -> Result<Json<Value>, ApiError> {
    let job = JobId(jid);
    let ack = state.0.jobs.cancel(&job)?;
    Ok(Json(json!({ "job_id": job, "ack": ack })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamQuery {
    from: Option<u64>,
}

pub async fn stream(
    State(state): State<AppState>,
    ApiPath(jid): ApiPath<String>,
    ApiQuery(query): ApiQuery<StreamQuery>,
    ws: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    let job = JobId(jid);
    let subscription = state
        .0
        .hub
        .subscribe(&job, query.from)
        .ok_or_else(|| ApiError::not_found("unknown_job", format!("unknown job {job}")))?;
    Ok(ws.on_upgrade(move |socket| forward(socket, state, job, subscription)))
}

async fn send(socket: &mut WebSocket, frame: &ProgressFrame) -> bool {
    let text = serde_json::to_string(frame).expect("frame serializes");
    socket.send(Message::Text(text)).await.is_ok()
}

async fn forward(
    mut socket: WebSocket,
    state: AppState,
    job: JobId,
    subscription: crate::progress::Subscription,
) {
    let mut next = 0u64;
    let mut done = false;
    for frame in &subscription.backlog {
        if !send(&mut socket, frame).await {
            return;
        }
        next = frame.seq + 1;
        done = frame.is_terminal();
    }
    if let (Some(mut rx), false) = (subscription.live, done) {
        loop {
            let frames = match rx.recv().await {
                Ok(frame) => vec![frame],
                Err(RecvError::Lagged(_)) => state.0.hub.history_from(&job, next),
                Err(RecvError::Closed) => break,
            };
            for frame in frames {
                if frame.seq < next {
                    continue;
                }
                if !send(&mut socket, &frame).await {
                    return;
                }
                next = frame.seq + 1;
                if frame.is_terminal() {
                    done = true;
                }
            }
            if done {
                break;
            }
        }
    }
    let _ = socket.send(Message::Close(None)).await;
}
