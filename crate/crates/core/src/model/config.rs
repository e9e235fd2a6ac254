use std::path::Path;

use serde::{Deserialize, Serialize};

const DEFAULTS: &str = include_str!("../../config/story_defaults.json");

/// Genre list and default action palette offered to authors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoryConfig {
    pub genres: Vec<String>,
    pub default_actions: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config must list at least one genre")]
    NoGenres,
}

impl Default for StoryConfig {
    fn default() -> Self {
        serde_json::from_str(DEFAULTS).expect("bundled story defaults are valid")
    }
}

impl StoryConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: StoryConfig = serde_json::from_str(text)?;
        if config.genres.is_empty() {
            return Err(ConfigError::NoGenres);
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Case-insensitive lookup; returns the canonical spelling from the list.
    pub fn genre(&self, label: &str) -> Option<&str> {
        let label = label.trim();
        self.genres
            .iter()
            .find(|g| g.eq_ignore_ascii_case(label))
            .map(String::as_str)
    }

    pub fn is_default_action(&self, label: &str) -> bool {
        self.default_actions.iter().any(|a| a == label.trim())
    }
}
