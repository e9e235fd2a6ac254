use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{CancelToken, JobId, JobState};
use crate::model::ProjectId;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("unknown job {0}")]
    UnknownJob(JobId),
    #[error("job {running} is already generating this project")]
    AlreadyRunning { running: JobId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CancelAck {
    /// The job will stop before its next provider call.
    Requested,
    /// The job had already finished; nothing to do.
    AlreadyFinished,
}

#[derive(Debug)]
struct Entry {
    project: ProjectId,
    state: JobState,
    cancel: CancelToken,
}

#[derive(Debug, Default)]
struct Inner {
    jobs: HashMap<JobId, Entry>,
    running: HashMap<ProjectId, JobId>,
}

/// Tracks jobs and allows at most one running job per project.
#[derive(Debug, Default)]
pub struct JobRegistry {
    inner: Mutex<Inner>,
}

impl JobRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().expect("job registry poisoned")
    }

    /// Registers a pending job, or refuses if the project already has one
    /// running.
    pub fn start(&self, job: JobId, project: ProjectId) -> Result<CancelToken, RegistryError> {
        let mut inner = self.lock();
        if let Some(running) = inner.running.get(&project) {
            return Err(RegistryError::AlreadyRunning {
                running: running.clone(),
            });
        }
        let cancel = CancelToken::new();
        inner.running.insert(project.clone(), job.clone());
        inner.jobs.insert(
            job,
            Entry {
                project,
                state: JobState::Pending,
                cancel: cancel.clone(),
            },
        );
        Ok(cancel)
    }

    /// Records progress. Terminal states release the project.
    pub fn update(&self, job: &JobId, state: JobState) {
        let mut inner = self.lock();
        let Some(entry) = inner.jobs.get_mut(job) else {
            return;
        };
        if entry.state.is_terminal() {
            return;
        }
        let terminal = state.is_terminal();
        entry.state = state;
        if terminal {
            let project = entry.project.clone();
            if inner.running.get(&project) == Some(job) {
                inner.running.remove(&project);
            }
        }
    }

    pub fn cancel(&self, job: &JobId) -> Result<CancelAck, RegistryError> {
        let inner = self.lock();
        let entry = inner
            .jobs
            .get(job)
            .ok_or_else(|| RegistryError::UnknownJob(job.clone()))?;
        if entry.state.is_terminal() {
            return Ok(CancelAck::AlreadyFinished);
        }
        entry.cancel.cancel();
        Ok(CancelAck::Requested)
    }

    pub fn state(&self, job: &JobId) -> Option<JobState> {
        self.lock().jobs.get(job).map(|e| e.state.clone())
    }

    pub fn project_of(&self, job: &JobId) -> Option<ProjectId> {
        self.lock().jobs.get(job).map(|e| e.project.clone())
    }

    pub fn running_job(&self, project: &ProjectId) -> Option<JobId> {
        self.lock().running.get(project).cloned()
    }
}
