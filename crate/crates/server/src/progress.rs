//! Per-job progress fan-out for WebSocket subscribers.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use storyboard_core::pipeline::{JobId, ProgressEvent};
use tokio::sync::broadcast;

/// Frame schema version.
pub const FRAME_VERSION: u32 = 1;

const CHANNEL_CAPACITY: usize = 1024;

/// One progress message on the wire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressFrame {
    pub v: u32,
    pub job_id: String,
    /// 0-based position in the job's message sequence.
    pub seq: u64,
    pub kind: String,
    pub chapter_index: Option<u32>,
    pub payload: String,
}

impl ProgressFrame {
    pub fn from_event(job: &JobId, seq: u64, event: &ProgressEvent) -> Self {
        let (kind, chapter_index, payload) = match event {
            ProgressEvent::ChapterStarted { chapter } => ("chapter_started", Some(*chapter), String::new()),
            ProgressEvent::TextChunk { chapter, text } => ("text_chunk", Some(*chapter), text.clone()),
            ProgressEvent::ChapterDone { chapter, text } => ("chapter_done", Some(*chapter), text.clone()),
            ProgressEvent::SummaryDone { chapter, summary } => {
                ("summary_done", Some(*chapter), summary.clone())
            }
            ProgressEvent::JobDone { chapters } => ("job_done", Some(*chapters), String::new()),
            ProgressEvent::Error { chapter, message } => ("error", *chapter, message.clone()),
        };
        Self {
            v: FRAME_VERSION,
            job_id: job.to_string(),
            seq,
            kind: kind.to_string(),
            chapter_index,
            payload,
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.kind == "job_done" || self.kind == "error"
    }
}

struct Channel {
    history: Vec<ProgressFrame>,
    tx: broadcast::Sender<ProgressFrame>,
}

impl Channel {
    fn finished(&self) -> bool {
        self.history.last().is_some_and(ProgressFrame::is_terminal)
    }
}

/// What a new subscriber gets: frames to send right away, then a live
/// receiver unless the job is already over.
pub struct Subscription {
    pub backlog: Vec<ProgressFrame>,
    pub live: Option<broadcast::Receiver<ProgressFrame>>,
}

#[derive(Default)]
pub struct ProgressHub {
    channels: Mutex<HashMap<JobId, Channel>>,
}

impl ProgressHub {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn open(&self, job: &JobId) {
        let (tx, _) = broadcast::channel(CHANNEL_CAPACITY);
        self.channels.lock().expect("hub poisoned").insert(
            job.clone(),
            Channel {
                history: Vec::new(),
                tx,
            },
        );
    }

    pub fn publish(&self, job: &JobId, event: &ProgressEvent) {
        let mut channels = self.channels.lock().expect("hub poisoned");
        let Some(channel) = channels.get_mut(job) else {
            return;
        };
        if channel.finished() {
            return;
        }
        let frame = ProgressFrame::from_event(job, channel.history.len() as u64, event);
        channel.history.push(frame.clone());
        // No receivers is fine; the history keeps the frame.
        let _ = channel.tx.send(frame);
    }

    /// Subscribes to `job`.
    ///
    /// With `from`, every recorded frame with `seq >= from` is replayed
    /// first. Without it the subscriber sees frames from now on, except for
    /// a finished job, which replays just its terminal frame.
    pub fn subscribe(&self, job: &JobId, from: Option<u64>) -> Option<Subscription> {
        let channels = self.channels.lock().expect("hub poisoned");
        let channel = channels.get(job)?;
        let finished = channel.finished();
        let backlog = match from {
            Some(from) => channel
                .history
                .iter()
                .filter(|f| f.seq >= from)
                .cloned()
                .collect(),
            None if finished => channel.history.last().cloned().into_iter().collect(),
            None => Vec::new(),
        };
        let live = (!finished).then(|| channel.tx.subscribe());
        Some(Subscription { backlog, live })
    }

    /// Frames recorded for `job` with `seq >= from`.
    pub fn history_from(&self, job: &JobId, from: u64) -> Vec<ProgressFrame> {
        let channels = self.channels.lock().expect("hub poisoned");
        channels
            .get(job)
            .map(|c| c.history.iter().filter(|f| f.seq >= from).cloned().collect())
            .unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job() -> JobId {
        JobId("j".into())
    }

    #[test]
    fn replay_and_terminal_only() {
        let hub = ProgressHub::new();
        hub.open(&job());
        hub.publish(&job(), &ProgressEvent::ChapterStarted { chapter: 1 });
        let live = hub.subscribe(&job(), None).unwrap();
        assert!(live.backlog.is_empty());
        hub.publish(&job(), &ProgressEvent::JobDone { chapters: 1 });
        hub.publish(&job(), &ProgressEvent::ChapterStarted { chapter: 9 });

        let mut rx = live.live.unwrap();
        assert_eq!(rx.try_recv().unwrap().kind, "job_done");

        let late = hub.subscribe(&job(), None).unwrap();
        assert_eq!(late.backlog.len(), 1);
        assert_eq!(late.backlog[0].kind, "job_done");
        assert!(late.live.is_none());

        let full = hub.subscribe(&job(), Some(0)).unwrap();
        let kinds: Vec<_> = full.backlog.iter().map(|f| f.kind.as_str()).collect();
        assert_eq!(kinds, ["chapter_started", "job_done"]);
        assert!(hub.subscribe(&JobId("other".into()), None).is_none());
    }

    #[test]
    fn error_frame_keeps_chapter() {
        let f = ProgressFrame::from_event(
            &job(),
            4,
            &ProgressEvent::Error {
                chapter: Some(2),
                message: "boom".into(),
            },
        );
        assert_eq!(f.chapter_index, Some(2));
        assert!(f.is_terminal());
        let json = serde_json::to_value(&f).unwrap();
        assert_eq!(json["v"], 1);
        assert_eq!(json["kind"], "error");
    }
}
