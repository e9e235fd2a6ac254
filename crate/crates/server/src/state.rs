use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use storyboard_core::model::{ProjectId, StoryConfig, StoryProject};
use storyboard_core::pipeline::JobRegistry;
use storyboard_core::store::ProjectStore;
use storyboard_core::ModelProvider;
use tokio::sync::OwnedMutexGuard;

use crate::error::ApiError;
use crate::progress::ProgressHub;

pub struct ServerConfig {
    pub data_dir: PathBuf,
    /// Log full prompts to each project's transcript.
    pub debug_prompts: bool,
    pub story: StoryConfig,
}

impl ServerConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: data_dir.into(),
            debug_prompts: false,
            story: StoryConfig::default(),
        }
    }
}

pub(crate) struct Inner {
    pub store: ProjectStore,
    pub provider: Arc<dyn ModelProvider>,
    pub jobs: JobRegistry,
    pub hub: ProgressHub,
    pub story: StoryConfig,
    pub debug_prompts: bool,
    locks: Mutex<HashMap<ProjectId, Arc<tokio::sync::Mutex<()>>>>,
}

/// Shared service state. Cheap to clone.
#[derive(Clone)]
pub struct AppState(pub(crate) Arc<Inner>);

impl AppState {
    pub fn new(
        config: ServerConfig,
        provider: Arc<dyn ModelProvider>,
    ) -> Result<Self, storyboard_core::store::StoreError> {
        let store = ProjectStore::open(&config.data_dir)?;
        Ok(Self(Arc::new(Inner {
            store,
            provider,
            jobs: JobRegistry::new(),
            hub: ProgressHub::new(),
            story: config.story,
            debug_prompts: config.debug_prompts,
            locks: Mutex::new(HashMap::new()),
        })))
    }

    pub fn store(&self) -> &ProjectStore {
        &self.0.store
    }

    pub(crate) async fn lock_project(&self, id: &ProjectId) -> OwnedMutexGuard<()> {
        let lock = self
            .0
            .locks
            .lock()
            .expect("lock table poisoned")
            .entry(id.clone())
            .or_default()
            .clone();
        lock.lock_owned().await
    }

    pub(crate) fn load(&self, id: &ProjectId) -> Result<StoryProject, ApiError> {
        Ok(self.0.store.load(id)?)
    }

    /// Applies `edit` to a copy of the stored project and saves it. Refused
    /// while a generation job is running for the project.
    pub(crate) async fn mutate<T>(
        &self,
        id: &ProjectId,
        edit: impl FnOnce(&mut StoryProject) -> Result<T, ApiError>,
    ) -> Result<(T, StoryProject), ApiError> {
        let _guard = self.lock_project(id).await;
        let mut project = self.load(id)?;
        if let Some(job) = self.0.jobs.running_job(id) {
            return Err(ApiError::generation_running(&job));
        }
        let out = edit(&mut project)?;
        self.0.store.save(&project)?;
        Ok((out, project))
    }
}
