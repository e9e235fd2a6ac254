use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{BoardId, ModelError, NodeId, NodeKind, StoryProject, StoryStructure, SCHEMA_VERSION};
use crate::events;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub board_id: Option<BoardId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_id: Option<NodeId>,
}

impl Violation {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.to_string(),
            message: message.into(),
            board_id: None,
            node_id: None,
        }
    }

    pub fn on_board(mut self, board: BoardId) -> Self {
        self.board_id = Some(board);
        self
    }

    pub fn at_node(mut self, node: NodeId) -> Self {
        self.node_id = Some(node);
        self
    }
}

/// Zero or more problems that block generation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, violation: Violation) {
        self.violations.push(violation);
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        let messages: Vec<&str> = self.violations.iter().map(|v| v.message.as_str()).collect();
        f.write_str(&messages.join("; "))
    }
}

pub(super) fn validate_structure(structure: StoryStructure, boards: usize) -> ValidationReport {
    let mut report = ValidationReport::default();
    match structure.required_boards() {
        Some(expected) if boards != expected => report.push(Violation::new(
            "board_count",
            format!("expected {expected} boards, found {boards}"),
        )),
        None if boards == 0 => report.push(Violation::new(
            "board_count",
            "expected at least 1 board, found 0",
        )),
        _ => {}
    }
    report
}

fn broken(msg: impl Into<String>) -> ModelError {
    ModelError::Invariant(msg.into())
}

pub(super) fn check_invariants(project: &StoryProject) -> Result<(), ModelError> {
    if project.schema_version != SCHEMA_VERSION {
        return Err(ModelError::UnsupportedSchema(project.schema_version));
    }

    let mut names = HashSet::new();
    let mut character_ids = HashSet::new();
    for c in &project.characters {
        if c.name.trim().is_empty() {
            return Err(broken(format!("{} has an empty name", c.id)));
        }
        if !names.insert(c.name.as_str()) {
            return Err(broken(format!("character name {:?} is not unique", c.name)));
        }
        if !character_ids.insert(c.id) {
            return Err(broken(format!("duplicate character id {}", c.id)));
        }
    }

    let mut board_ids = HashSet::new();
    let mut node_ids = HashSet::new();
    let mut edge_ids = HashSet::new();
    for board in &project.boards {
        if !board_ids.insert(board.id) {
            return Err(broken(format!("duplicate board id {}", board.id)));
        }
        let mut placed = HashSet::new();
        for node in &board.nodes {
            if !node_ids.insert(node.id) {
                return Err(broken(format!("duplicate node id {}", node.id)));
            }
            if node.board_id != board.id {
                return Err(broken(format!("{} claims the wrong board", node.id)));
            }
            match &node.kind {
                NodeKind::CharacterRef { character_id } => {
                    if !character_ids.contains(character_id) {
                        return Err(broken(format!(
                            "{} references unknown {}",
                            node.id, character_id
                        )));
                    }
                    if !placed.insert(*character_id) {
                        return Err(broken(format!(
                            "{} placed twice on {}",
                            character_id, board.id
                        )));
                    }
                }
                NodeKind::Action { label, .. } | NodeKind::Relationship { label } => {
                    if label.trim().is_empty() {
                        return Err(broken(format!("{} has an empty label", node.id)));
                    }
                }
            }
        }
        let mut pairs = HashSet::new();
        for edge in &board.edges {
            if !edge_ids.insert(edge.id) {
                return Err(broken(format!("duplicate edge id {}", edge.id)));
            }
            if edge.board_id != board.id {
                return Err(broken(format!("{} claims the wrong board", edge.id)));
            }
            let (Some(src), Some(dst)) = (board.node(edge.source), board.node(edge.target)) else {
                return Err(broken(format!("{} has an endpoint off {}", edge.id, board.id)));
            };
            if src.kind.is_character() == dst.kind.is_character() {
                return Err(broken(format!("{} joins two nodes of the same kind", edge.id)));
            }
            if !pairs.insert((edge.source, edge.target)) {
                return Err(broken(format!("{} duplicates another edge", edge.id)));
            }
        }
        if !board.event_order.is_empty() {
            events::check_permutation(board, &board.event_order).map_err(|e| {
                broken(format!("event order of {} is stale: {e}", board.id))
            })?;
        }
    }

    if project.chapters.len() > project.boards.len() {
        return Err(ModelError::TooManyChapters {
            chapters: project.chapters.len(),
            boards: project.boards.len(),
        });
    }
    for (i, chapter) in project.chapters.iter().enumerate() {
        if chapter.index as usize != i + 1 {
            return Err(broken(format!(
                "chapter at position {} has index {}",
                i + 1,
                chapter.index
            )));
        }
    }
    Ok(())
}
