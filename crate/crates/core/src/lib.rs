//! Core engine for node-based story authoring.
//!
//! A [`StoryProject`] holds a project-wide character registry and an ordered
//! list of [`Storyboard`]s, one per act. Each board is a small directed graph
//! where character nodes connect to action or relationship connector nodes.
//! The engine extracts events and relations from those graphs, compiles them
//! into a fixed set of prompts, and drives a [`ModelProvider`] chapter by
//! chapter, feeding summaries of earlier chapters forward into later ones.
//!
//! The [`metrics`] module carries the evaluation instruments (type-token
//! ratio, SUS, MICSI) and [`store`] persists projects on disk.

pub mod events;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod prompt;
pub mod provider;
pub mod store;

pub use events::{Event, Relation};
pub use model::{
    BoardId, Chapter, Character, CharacterId, Edge, EdgeId, Node, NodeId, NodeKind, StoryProject,
    StoryStructure, Storyboard,
};
pub use pipeline::{generate_story, GenerationError, GenerationJob, JobState};
pub use prompt::{CompiledPrompt, TemplateId};
pub use provider::{MockProvider, ModelProvider, ProviderError};
