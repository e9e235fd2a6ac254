//! Chapter-by-chapter story generation.
//!
//! For board `k` (in board order) the pipeline compiles the chapter prompt
//! with the summaries of chapters `1..k`, asks the provider for the chapter,
//! then asks for a summary of that chapter. A chapter is only kept once its
//! summary exists, so a failure at chapter `k` leaves exactly `k - 1`
//! complete chapters behind.

mod describe;
mod registry;

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::events::{self, ConnectorKind};
use crate::model::{Chapter, ProjectId, StoryProject, ValidationReport, Violation, CHAPTER_WORD_TARGET};
use crate::prompt::{self, ChapterPromptInput, CompiledPrompt, PromptError};
use crate::provider::{ModelProvider, ModelRequest, ProviderError};

pub use describe::{describe_character, describe_scenery, DescribeError};
pub use registry::{CancelAck, JobRegistry, RegistryError};

/// Extra attempts after a transient provider failure.
pub const TRANSIENT_RETRIES: usize = 1;

/// Largest `text_chunk` payload, in characters.
pub const CHUNK_CHARS: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JobId(pub String);

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum FailureReason {
    Cancelled,
    Validation { message: String },
    Provider { chapter: u32, message: String },
    Prompt { chapter: u32, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum JobState {
    Pending,
    RunningChapter { chapter: u32 },
    Summarizing { chapter: u32 },
    Done,
    Failed { failure: FailureReason },
}

impl JobState {
    pub fn is_terminal(&self) -> bool {
        matches!(self, JobState::Done | JobState::Failed { .. })
    }

    /// Position in the forward-only state sequence.
    fn rank(&self) -> (u32, u8) {
        match self {
            JobState::Pending => (0, 0),
            JobState::RunningChapter { chapter } => (*chapter, 1),
            JobState::Summarizing { chapter } => (*chapter, 2),
            JobState::Done | JobState::Failed { .. } => (u32::MAX, 3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub prompt: CompiledPrompt,
    pub response: String,
}

/// Progress notifications, emitted in pipeline order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProgressEvent {
    ChapterStarted { chapter: u32 },
    TextChunk { chapter: u32, text: String },
    ChapterDone { chapter: u32, text: String },
    SummaryDone { chapter: u32, summary: String },
    JobDone { chapters: u32 },
    Error { chapter: Option<u32>, message: String },
}

impl ProgressEvent {
    pub fn is_terminal(&self) -> bool {
        matches!(self, ProgressEvent::JobDone { .. } | ProgressEvent::Error { .. })
    }
}

pub trait ProgressSink {
    fn emit(&mut self, event: ProgressEvent);
}

impl ProgressSink for Vec<ProgressEvent> {
    fn emit(&mut self, event: ProgressEvent) {
        self.push(event);
    }
}

/// Discards everything.
pub struct NullSink;

impl ProgressSink for NullSink {
    fn emit(&mut self, _event: ProgressEvent) {}
}

/// Adapts a closure into a [`ProgressSink`].
pub struct FnSink<F>(pub F);

impl<F: FnMut(ProgressEvent)> ProgressSink for FnSink<F> {
    fn emit(&mut self, event: ProgressEvent) {
        (self.0)(event)
    }
}

#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerationError {
    #[error("project is not ready for generation: {0}")]
    ValidationFailed(ValidationReport),
    #[error("provider failed at chapter {chapter}: {cause}")]
    Provider { chapter: u32, cause: ProviderError },
    #[error("prompt for chapter {chapter} could not be built: {cause}")]
    Prompt { chapter: u32, cause: PromptError },
    #[error("generation cancelled")]
    Cancelled,
}

impl GenerationError {
    fn failure(&self) -> FailureReason {
        match self {
            GenerationError::ValidationFailed(report) => FailureReason::Validation {
                message: report.to_string(),
            },
            GenerationError::Provider { chapter, cause } => FailureReason::Provider {
                chapter: *chapter,
                message: cause.to_string(),
            },
            GenerationError::Prompt { chapter, cause } => FailureReason::Prompt {
                chapter: *chapter,
                message: cause.to_string(),
            },
            GenerationError::Cancelled => FailureReason::Cancelled,
        }
    }

    fn chapter(&self) -> Option<u32> {
        match self {
            GenerationError::Provider { chapter, .. } | GenerationError::Prompt { chapter, .. } => {
                Some(*chapter)
            }
            _ => None,
        }
    }
}

/// Everything that blocks generation: the act-count rule, incomplete
/// connectors, dangling references and boards without events.
pub fn readiness_report(project: &StoryProject) -> ValidationReport {
    let mut report = project.validate_structure();
    for board in &project.boards {
        let analysis = match events::analyze_board(board, project) {
            Ok(a) => a,
            Err(e) => {
                report.push(Violation::new("dangling_character", e.to_string()).on_board(board.id));
                continue;
            }
        };
        for c in &analysis.incomplete {
            let (code, what) = match c.kind {
                ConnectorKind::Action => ("incomplete_event", "action"),
                ConnectorKind::Relationship => ("incomplete_relation", "relationship"),
            };
            report.push(
                Violation::new(
                    code,
                    format!("{} on \"{}\": {what} {} is incomplete, {}", board.id, board.act_label, c.connector_id, c.missing),
                )
                .on_board(board.id)
                .at_node(c.connector_id),
            );
        }
        if analysis.events.is_empty() {
            report.push(
                Violation::new(
                    "no_events",
                    format!("{} (\"{}\") has no complete events", board.id, board.act_label),
                )
                .on_board(board.id),
            );
        }
    }
    report
}

enum CallFailure {
    Cancelled,
    Provider(ProviderError),
}

fn call_with_retry(
    provider: &dyn ModelProvider,
    request: &ModelRequest<'_>,
    cancel: &CancelToken,
) -> Result<String, CallFailure> {
    let mut attempt = 0;
    loop {
        if cancel.is_cancelled() {
            return Err(CallFailure::Cancelled);
        }
        match provider.complete(request) {
            Ok(text) => return Ok(text),
            Err(e) if e.is_transient() && attempt < TRANSIENT_RETRIES => {
                tracing::warn!(provider = provider.name(), error = %e, "retrying provider call");
                attempt += 1;
            }
            Err(e) => return Err(CallFailure::Provider(e)),
        }
    }
}

fn chunks(text: &str, max_chars: usize) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut count = 0;
    for (i, _) in text.char_indices() {
        if count == max_chars {
            out.push(&text[start..i]);
            start = i;
            count = 0;
        }
        count += 1;
    }
    if start < text.len() {
        out.push(&text[start..]);
    }
    out
}

/// One generation run over a project snapshot.
#[derive(Debug, Clone)]
pub struct GenerationJob {
    pub job_id: JobId,
    pub project_id: ProjectId,
    state: JobState,
    transcript: Vec<TranscriptEntry>,
    chapters: Vec<Chapter>,
}

impl GenerationJob {
    pub fn new(job_id: JobId, project_id: ProjectId) -> Self {
        Self {
            job_id,
            project_id,
            state: JobState::Pending,
            transcript: Vec::new(),
            chapters: Vec::new(),
        }
    }

    pub fn state(&self) -> &JobState {
        &self.state
    }

    /// Every successful provider exchange, in call order.
    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }

    /// Completed chapters, each with its summary.
    pub fn chapters(&self) -> &[Chapter] {
        &self.chapters
    }

    pub fn into_parts(self) -> (JobState, Vec<TranscriptEntry>, Vec<Chapter>) {
        (self.state, self.transcript, self.chapters)
    }

    fn advance(&mut self, next: JobState) {
        debug_assert!(!self.state.is_terminal(), "job already finished");
        debug_assert!(next.rank() >= self.state.rank(), "job state went backwards");
        self.state = next;
    }

    fn exchange(
        &mut self,
        provider: &dyn ModelProvider,
        prompt: CompiledPrompt,
        cancel: &CancelToken,
        chapter: u32,
    ) -> Result<String, GenerationError> {
        let request = ModelRequest {
            prompt: &prompt,
            image: None,
        };
        match call_with_retry(provider, &request, cancel) {
            Ok(response) => {
                self.transcript.push(TranscriptEntry {
                    prompt,
                    response: response.clone(),
                });
                Ok(response)
            }
            Err(CallFailure::Cancelled) => Err(GenerationError::Cancelled),
            Err(CallFailure::Provider(cause)) => Err(GenerationError::Provider { chapter, cause }),
        }
    }

    /// Runs the job to completion, failure or cancellation. The job's state,
    /// transcript and chapters reflect how far it got either way.
    pub fn run(
        &mut self,
        project: &StoryProject,
        provider: &dyn ModelProvider,
        sink: &mut dyn ProgressSink,
        cancel: &CancelToken,
    ) -> Result<(), GenerationError> {
        let result = self.run_inner(project, provider, sink, cancel);
        match &result {
            Ok(()) => {
                self.advance(JobState::Done);
                sink.emit(ProgressEvent::JobDone {
                    chapters: self.chapters.len() as u32,
                });
            }
            Err(e) => {
                self.advance(JobState::Failed {
                    failure: e.failure(),
                });
                sink.emit(ProgressEvent::Error {
                    chapter: e.chapter(),
                    message: e.to_string(),
                });
            }
        }
        result
    }

    fn run_inner(
        &mut self,
        project: &StoryProject,
        provider: &dyn ModelProvider,
        sink: &mut dyn ProgressSink,
        cancel: &CancelToken,
    ) -> Result<(), GenerationError> {
        let report = readiness_report(project);
        if !report.is_valid() {
            return Err(GenerationError::ValidationFailed(report));
        }

        for (i, board) in project.boards.iter().enumerate() {
            let k = i as u32 + 1;
            if cancel.is_cancelled() {
                return Err(GenerationError::Cancelled);
            }
            self.advance(JobState::RunningChapter { chapter: k });
            sink.emit(ProgressEvent::ChapterStarted { chapter: k });

            let summaries = self
                .chapters
                .iter()
                .map(|c| c.summary.clone().unwrap_or_default())
                .collect();
            let chapter_prompt = ChapterPromptInput::from_board(project, board, k, summaries)
                .and_then(|input| prompt::compile_chapter_prompt(&input))
                .map_err(|cause| GenerationError::Prompt { chapter: k, cause })?;
            let text = self.exchange(provider, chapter_prompt, cancel, k)?;
            for piece in chunks(&text, CHUNK_CHARS) {
                sink.emit(ProgressEvent::TextChunk {
                    chapter: k,
                    text: piece.to_string(),
                });
            }
            sink.emit(ProgressEvent::ChapterDone {
                chapter: k,
                text: text.clone(),
            });

            self.advance(JobState::Summarizing { chapter: k });
            let summary_prompt = prompt::compile_summary_prompt(&text).map_err(|_| {
                GenerationError::Provider {
                    chapter: k,
                    cause: ProviderError::permanent("provider returned an empty chapter"),
                }
            })?;
            let summary = self.exchange(provider, summary_prompt, cancel, k)?;
            self.chapters.push(Chapter {
                index: k,
                text,
                summary: Some(summary.clone()),
                word_target: CHAPTER_WORD_TARGET,
            });
            sink.emit(ProgressEvent::SummaryDone {
                chapter: k,
                summary,
            });
        }
        Ok(())
    }
}

/// Generates every chapter of `project` in one go.
pub fn generate_story(
    project: &StoryProject,
    provider: &dyn ModelProvider,
    sink: &mut dyn ProgressSink,
) -> Result<Vec<Chapter>, GenerationError> {
    let mut job = GenerationJob::new(JobId("inline".into()), project.id.clone());
    job.run(project, provider, sink, &CancelToken::new())?;
    Ok(job.chapters)
}
