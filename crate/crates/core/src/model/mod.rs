//! Projects, storyboards, nodes and edges.
//!
//! A project owns a character registry shared by all of its boards. Each
//! board is a directed graph whose edges always join one character node to
//! one connector node (an action or a relationship). Edge direction carries
//! meaning: `character -> connector` makes the character a subject,
//! `connector -> character` makes it an object.
//!
//! Identifiers are small integers allocated as `max + 1` over the existing
//! ids of the same kind, so replaying the same mutations from an empty
//! project always produces the same ids.

mod config;
mod ops;
mod validation;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::events::{self, PermutationError};

pub use config::{ConfigError, StoryConfig};
pub use ops::{replay, OpOutcome, ProjectOp};
pub use validation::{ValidationReport, Violation};

/// The only document schema this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Length instruction given to the model for every chapter.
pub const CHAPTER_WORD_TARGET: u32 = 3000;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(CharacterId, "character#");
id_type!(BoardId, "board#");
id_type!(NodeId, "node#");
id_type!(EdgeId, "edge#");

/// Directory-safe project identifier. Not part of the project document; it
/// names the directory the document lives in.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProjectId(String);

impl ProjectId {
    pub fn new(id: impl Into<String>) -> Result<Self, ModelError> {
        let id = id.into();
        let ok = !id.is_empty()
            && id.len() <= 64
            && id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if ok {
            Ok(Self(id))
        } else {
            Err(ModelError::InvalidProjectId(id))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ProjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Content-addressed reference to an image blob (lowercase hex SHA-256).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlobRef(pub String);

impl BlobRef {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BlobRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoryStructure {
    Free,
    ThreeAct,
    FiveAct,
}

const THREE_ACT_LABELS: [&str; 3] = ["Introduction", "Climax", "Resolution"];
const FIVE_ACT_LABELS: [&str; 5] = [
    "Exposition",
    "Rising Action",
    "Climax",
    "Falling Action",
    "Resolution",
];

impl StoryStructure {
    pub fn act_labels(self) -> &'static [&'static str] {
        match self {
            StoryStructure::Free => &[],
            StoryStructure::ThreeAct => &THREE_ACT_LABELS,
            StoryStructure::FiveAct => &FIVE_ACT_LABELS,
        }
    }

    /// Exact board count required, or `None` for free mode (at least one).
    pub fn required_boards(self) -> Option<usize> {
        match self {
            StoryStructure::Free => None,
            StoryStructure::ThreeAct => Some(3),
            StoryStructure::FiveAct => Some(5),
        }
    }

    /// Label of the board at `index` (0-based).
    pub fn act_label(self, index: usize) -> String {
        self.act_labels()
            .get(index)
            .map(|s| (*s).to_string())
            .unwrap_or_else(|| format!("Part {}", index + 1))
    }

    /// Name used inside prompts.
    pub fn prompt_name(self) -> &'static str {
        match self {
            StoryStructure::Free => "free",
            StoryStructure::ThreeAct => "three-act",
            StoryStructure::FiveAct => "five-act",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Character {
    pub id: CharacterId,
    pub name: String,
    pub appearance: Option<String>,
    pub image_ref: Option<BlobRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NodeKind {
    CharacterRef { character_id: CharacterId },
    Action { label: String, is_custom: bool },
    Relationship { label: String },
}

impl NodeKind {
    pub fn action(label: impl Into<String>) -> Self {
        NodeKind::Action {
            label: label.into(),
            is_custom: false,
        }
    }

    pub fn custom_action(label: impl Into<String>) -> Self {
        NodeKind::Action {
            label: label.into(),
            is_custom: true,
        }
    }

    pub fn relationship(label: impl Into<String>) -> Self {
        NodeKind::Relationship {
            label: label.into(),
        }
    }

    pub fn character(id: CharacterId) -> Self {
        NodeKind::CharacterRef { character_id: id }
    }

    pub fn is_character(&self) -> bool {
        matches!(self, NodeKind::CharacterRef { .. })
    }

    pub fn is_connector(&self) -> bool {
        !self.is_character()
    }

    pub fn label(&self) -> Option<&str> {
        match self {
            NodeKind::CharacterRef { .. } => None,
            NodeKind::Action { label, .. } | NodeKind::Relationship { label } => Some(label),
        }
    }
}

/// Canvas coordinates. Stored for the editor, never read by the engine.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: NodeId,
    pub board_id: BoardId,
    pub kind: NodeKind,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub id: EdgeId,
    pub board_id: BoardId,
    pub source: NodeId,
    pub target: NodeId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Storyboard {
    pub id: BoardId,
    pub act_label: String,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub event_order: Vec<NodeId>,
    pub scenery_description: Option<String>,
    pub scenery_image_ref: Option<BlobRef>,
}

impl Storyboard {
    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.iter().find(|e| e.id == id)
    }

    /// The node standing for `character` on this board, if placed.
    pub fn character_node(&self, character: CharacterId) -> Option<&Node> {
        self.nodes
            .iter()
            .find(|n| n.kind == NodeKind::character(character))
    }

    /// Characters placed on this board, in node insertion order.
    pub fn characters(&self) -> impl Iterator<Item = CharacterId> + '_ {
        self.nodes.iter().filter_map(|n| match n.kind {
            NodeKind::CharacterRef { character_id } => Some(character_id),
            _ => None,
        })
    }

    fn reconcile_event_order(&mut self) {
        if self.event_order.is_empty() {
            return;
        }
        let valid = events::valid_action_connectors(self);
        self.event_order.retain(|id| valid.contains(id));
        for id in valid {
            if !self.event_order.contains(&id) {
                self.event_order.push(id);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Chapter {
    /// 1-based.
    pub index: u32,
    pub text: String,
    pub summary: Option<String>,
    pub word_target: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoryProject {
    #[serde(skip)]
    pub id: ProjectId,
    pub schema_version: u32,
    pub title: String,
    pub genre: String,
    pub structure: StoryStructure,
    pub characters: Vec<Character>,
    pub boards: Vec<Storyboard>,
    pub chapters: Vec<Chapter>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("unknown board {0}")]
    UnknownBoard(BoardId),
    #[error("unknown character {0}")]
    UnknownCharacter(CharacterId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("label must not be empty")]
    EmptyLabel,
    #[error("character name must not be empty")]
    EmptyName,
    #[error("a character named {0:?} already exists")]
    DuplicateName(String),
    #[error("{character} is already placed on {board}")]
    CharacterAlreadyOnBoard {
        character: CharacterId,
        board: BoardId,
    },
    #[error("an edge must join one character to one action or relationship ({from} -> {to})")]
    IllegalEndpoints { from: NodeId, to: NodeId },
    #[error("{node} is not on {board}")]
    CrossBoard { node: NodeId, board: BoardId },
    #[error("edge {from} -> {to} already exists")]
    Duplicate { from: NodeId, to: NodeId },
    #[error("{0} is a character node and has no label")]
    NotAConnector(NodeId),
    #[error(transparent)]
    NotAPermutation(#[from] PermutationError),
    #[error("{chapters} chapters exceed {boards} boards")]
    TooManyChapters { chapters: usize, boards: usize },
    #[error("board order must list every board exactly once")]
    BadBoardOrder,
    #[error("invalid project id {0:?}")]
    InvalidProjectId(String),
    #[error("unsupported schema version {0}")]
    UnsupportedSchema(u32),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl ModelError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::UnknownBoard(_) => "unknown_board",
            ModelError::UnknownCharacter(_) => "unknown_character",
            ModelError::UnknownNode(_) => "unknown_node",
            ModelError::UnknownEdge(_) => "unknown_edge",
            ModelError::EmptyLabel => "empty_label",
            ModelError::EmptyName => "empty_name",
            ModelError::DuplicateName(_) => "duplicate_name",
            ModelError::CharacterAlreadyOnBoard { .. } => "character_already_on_board",
            ModelError::IllegalEndpoints { .. } => "illegal_endpoints",
            ModelError::CrossBoard { .. } => "cross_board",
            ModelError::Duplicate { .. } => "duplicate_edge",
            ModelError::NotAConnector(_) => "not_a_connector",
            ModelError::NotAPermutation(_) => "not_a_permutation",
            ModelError::TooManyChapters { .. } => "too_many_chapters",
            ModelError::BadBoardOrder => "bad_board_order",
            ModelError::InvalidProjectId(_) => "invalid_project_id",
            ModelError::UnsupportedSchema(_) => "unsupported_schema",
            ModelError::Invariant(_) => "invariant_violation",
        }
    }

    /// True when the error names an id that does not exist.
    pub fn is_not_found(&self) -> bool {
        matches!(
            self,
            ModelError::UnknownBoard(_)
                | ModelError::UnknownCharacter(_)
                | ModelError::UnknownNode(_)
                | ModelError::UnknownEdge(_)
        )
    }
}

fn clean_label(label: &str) -> Result<String, ModelError> {
    let label = label.trim();
    if label.is_empty() {
        Err(ModelError::EmptyLabel)
    } else {
        Ok(label.to_string())
    }
}

fn clean_kind(kind: NodeKind) -> Result<NodeKind, ModelError> {
    Ok(match kind {
        NodeKind::CharacterRef { .. } => kind,
        NodeKind::Action { label, is_custom } => NodeKind::Action {
            label: clean_label(&label)?,
            is_custom,
        },
        NodeKind::Relationship { label } => NodeKind::Relationship {
            label: clean_label(&label)?,
        },
    })
}

impl StoryProject {
    pub fn new(
        id: ProjectId,
        title: impl Into<String>,
        genre: impl Into<String>,
        structure: StoryStructure,
    ) -> Self {
        Self {
            id,
            schema_version: SCHEMA_VERSION,
            title: title.into(),
            genre: genre.into(),
            structure,
            characters: Vec::new(),
            boards: Vec::new(),
            chapters: Vec::new(),
        }
    }

    pub fn character(&self, id: CharacterId) -> Option<&Character> {
        self.characters.iter().find(|c| c.id == id)
    }

    pub fn character_by_name(&self, name: &str) -> Option<&Character> {
        self.characters.iter().find(|c| c.name == name)
    }

    pub fn board(&self, id: BoardId) -> Option<&Storyboard> {
        self.boards.iter().find(|b| b.id == id)
    }

    pub fn board_index(&self, id: BoardId) -> Option<usize> {
        self.boards.iter().position(|b| b.id == id)
    }

    fn board_mut(&mut self, id: BoardId) -> Result<&mut Storyboard, ModelError> {
        self.boards
            .iter_mut()
            .find(|b| b.id == id)
            .ok_or(ModelError::UnknownBoard(id))
    }

    fn character_mut(&mut self, id: CharacterId) -> Result<&mut Character, ModelError> {
        self.characters
            .iter_mut()
            .find(|c| c.id == id)
            .ok_or(ModelError::UnknownCharacter(id))
    }

    fn next_node_id(&self) -> NodeId {
        let max = self
            .boards
            .iter()
            .flat_map(|b| b.nodes.iter().map(|n| n.id.0))
            .max()
            .unwrap_or(0);
        NodeId(max + 1)
    }

    fn next_edge_id(&self) -> EdgeId {
        let max = self
            .boards
            .iter()
            .flat_map(|b| b.edges.iter().map(|e| e.id.0))
            .max()
            .unwrap_or(0);
        EdgeId(max + 1)
    }

    /// Finds a node on any board.
    pub fn find_node(&self, id: NodeId) -> Option<&Node> {
        self.boards.iter().find_map(|b| b.node(id))
    }

    // ---- project settings ----

    pub fn set_title(&mut self, title: impl Into<String>) {
        self.title = title.into();
    }

    pub fn set_genre(&mut self, genre: impl Into<String>) {
        self.genre = genre.into();
    }

    /// Changes the structure and relabels boards. Boards are never dropped;
    /// a count mismatch shows up in [`StoryProject::validate_structure`].
    pub fn set_structure(&mut self, structure: StoryStructure) {
        self.structure = structure;
        self.relabel_boards();
    }

    fn relabel_boards(&mut self) {
        let structure = self.structure;
        for (i, board) in self.boards.iter_mut().enumerate() {
            board.act_label = structure.act_label(i);
        }
    }

    // ---- characters ----

    pub fn add_character(&mut self, name: &str) -> Result<CharacterId, ModelError> {
        let name = self.check_name(name, None)?;
        let id = CharacterId(self.characters.iter().map(|c| c.id.0).max().unwrap_or(0) + 1);
        self.characters.push(Character {
            id,
            name,
            appearance: None,
            image_ref: None,
        });
        Ok(id)
    }

    fn check_name(&self, name: &str, except: Option<CharacterId>) -> Result<String, ModelError> {
        let name = name.trim();
        if name.is_empty() {
            return Err(ModelError::EmptyName);
        }
        if self
            .characters
            .iter()
            .any(|c| c.name == name && Some(c.id) != except)
        {
            return Err(ModelError::DuplicateName(name.to_string()));
        }
        Ok(name.to_string())
    }

    pub fn rename_character(&mut self, id: CharacterId, name: &str) -> Result<(), ModelError> {
        let name = self.check_name(name, Some(id))?;
        self.character_mut(id)?.name = name;
        Ok(())
    }

    /// Sets or clears the appearance text (manual entry or model output).
    pub fn set_character_appearance(
        &mut self,
        id: CharacterId,
        appearance: Option<String>,
    ) -> Result<(), ModelError> {
        let appearance = appearance
            .map(|a| a.trim().to_string())
            .filter(|a| !a.is_empty());
        self.character_mut(id)?.appearance = appearance;
        Ok(())
    }

    pub fn set_character_image(
        &mut self,
        id: CharacterId,
        image: Option<BlobRef>,
    ) -> Result<(), ModelError> {
        self.character_mut(id)?.image_ref = image;
        Ok(())
    }

    /// Removes the character and every node on every board that refers to it.
    pub fn remove_character(&mut self, id: CharacterId) -> Result<(), ModelError> {
        let pos = self
            .characters
            .iter()
            .position(|c| c.id == id)
            .ok_or(ModelError::UnknownCharacter(id))?;
        self.characters.remove(pos);
        let doomed: Vec<(BoardId, NodeId)> = self
            .boards
            .iter()
            .filter_map(|b| b.character_node(id).map(|n| (b.id, n.id)))
            .collect();
        for (board, node) in doomed {
            self.remove_node(board, node)?;
        }
        Ok(())
    }

    // ---- boards ----

    pub fn add_board(&mut self) -> BoardId {
        let id = BoardId(self.boards.iter().map(|b| b.id.0).max().unwrap_or(0) + 1);
        let act_label = self.structure.act_label(self.boards.len());
        self.boards.push(Storyboard {
            id,
            act_label,
            nodes: Vec::new(),
            edges: Vec::new(),
            event_order: Vec::new(),
            scenery_description: None,
            scenery_image_ref: None,
        });
        id
    }

    /// Removes a board. Chapters beyond the new board count are dropped.
    pub fn remove_board(&mut self, id: BoardId) -> Result<(), ModelError> {
        let index = self.board_index(id).ok_or(ModelError::UnknownBoard(id))?;
        self.boards.remove(index);
        self.chapters.truncate(self.boards.len());
        self.relabel_boards();
        Ok(())
    }

    /// Reorders boards; `order` must name every board exactly once.
    pub fn reorder_boards(&mut self, order: &[BoardId]) -> Result<(), ModelError> {
        if order.len() != self.boards.len() {
            return Err(ModelError::BadBoardOrder);
        }
        let mut reordered = Vec::with_capacity(order.len());
        for id in order {
            if reordered.iter().any(|b: &Storyboard| b.id == *id) {
                return Err(ModelError::BadBoardOrder);
            }
            let board = self.board(*id).ok_or(ModelError::BadBoardOrder)?;
            reordered.push(board.clone());
        }
        self.boards = reordered;
        self.relabel_boards();
        Ok(())
    }

    pub fn set_scenery_description(
        &mut self,
        board: BoardId,
        description: Option<String>,
    ) -> Result<(), ModelError> {
        let description = description
            .map(|d| d.trim().to_string())
            .filter(|d| !d.is_empty());
        self.board_mut(board)?.scenery_description = description;
        Ok(())
    }

    pub fn set_scenery_image(
        &mut self,
        board: BoardId,
        image: Option<BlobRef>,
    ) -> Result<(), ModelError> {
        self.board_mut(board)?.scenery_image_ref = image;
        Ok(())
    }

    // ---- nodes ----

    pub fn add_node(
        &mut self,
        board_id: BoardId,
        kind: NodeKind,
        position: Position,
    ) -> Result<NodeId, ModelError> {
        if self.board(board_id).is_none() {
            return Err(ModelError::UnknownBoard(board_id));
        }
        let kind = clean_kind(kind)?;
        if let NodeKind::CharacterRef { character_id } = kind {
            if self.character(character_id).is_none() {
                return Err(ModelError::UnknownCharacter(character_id));
            }
            if self
                .board(board_id)
                .and_then(|b| b.character_node(character_id))
                .is_some()
            {
                return Err(ModelError::CharacterAlreadyOnBoard {
                    character: character_id,
                    board: board_id,
                });
            }
        }
        let id = self.next_node_id();
        let board = self.board_mut(board_id)?;
        board.nodes.push(Node {
            id,
            board_id,
            kind,
            position,
        });
        board.reconcile_event_order();
        Ok(id)
    }

    pub fn move_node(
        &mut self,
        board_id: BoardId,
        node: NodeId,
        position: Position,
    ) -> Result<(), ModelError> {
        let board = self.board_mut(board_id)?;
        let node = board
            .nodes
            .iter_mut()
            .find(|n| n.id == node)
            .ok_or(ModelError::UnknownNode(node))?;
        node.position = position;
        Ok(())
    }

    /// Changes the label of an action or relationship node.
    pub fn relabel_node(
        &mut self,
        board_id: BoardId,
        node: NodeId,
        label: &str,
    ) -> Result<(), ModelError> {
        let label = clean_label(label)?;
        let board = self.board_mut(board_id)?;
        let node = board
            .nodes
            .iter_mut()
            .find(|n| n.id == node)
            .ok_or(ModelError::UnknownNode(node))?;
        match &mut node.kind {
            NodeKind::CharacterRef { .. } => return Err(ModelError::NotAConnector(node.id)),
            NodeKind::Action { label: l, .. } | NodeKind::Relationship { label: l } => *l = label,
        }
        Ok(())
    }

    /// Removes a node and its incident edges.
    pub fn remove_node(&mut self, board_id: BoardId, node: NodeId) -> Result<(), ModelError> {
        let board = self.board_mut(board_id)?;
        let pos = board
            .nodes
            .iter()
            .position(|n| n.id == node)
            .ok_or(ModelError::UnknownNode(node))?;
        board.nodes.remove(pos);
        board.edges.retain(|e| e.source != node && e.target != node);
        board.event_order.retain(|id| *id != node);
        board.reconcile_event_order();
        Ok(())
    }

    // ---- edges ----

    pub fn add_edge(
        &mut self,
        board_id: BoardId,
        source: NodeId,
        target: NodeId,
    ) -> Result<EdgeId, ModelError> {
        let board = self
            .board(board_id)
            .ok_or(ModelError::UnknownBoard(board_id))?;
        let endpoint = |id: NodeId| -> Result<&Node, ModelError> {
            match board.node(id) {
                Some(n) => Ok(n),
                None if self.find_node(id).is_some() => Err(ModelError::CrossBoard {
                    node: id,
                    board: board_id,
                }),
                None => Err(ModelError::UnknownNode(id)),
            }
        };
        let (src, dst) = (endpoint(source)?, endpoint(target)?);
        if src.kind.is_character() == dst.kind.is_character() {
            return Err(ModelError::IllegalEndpoints {
                from: source,
                to: target,
            });
        }
        if board
            .edges
            .iter()
            .any(|e| e.source == source && e.target == target)
        {
            return Err(ModelError::Duplicate {
                from: source,
                to: target,
            });
        }
        let id = self.next_edge_id();
        let board = self.board_mut(board_id)?;
        board.edges.push(Edge {
            id,
            board_id,
            source,
            target,
        });
        board.reconcile_event_order();
        Ok(id)
    }

    pub fn remove_edge(&mut self, board_id: BoardId, edge: EdgeId) -> Result<(), ModelError> {
        let board = self.board_mut(board_id)?;
        let pos = board
            .edges
            .iter()
            .position(|e| e.id == edge)
            .ok_or(ModelError::UnknownEdge(edge))?;
        board.edges.remove(pos);
        board.reconcile_event_order();
        Ok(())
    }

    // ---- event order ----

    /// Replaces the board's event order. The list must be a permutation of
    /// the board's complete action connectors.
    pub fn set_event_order(
        &mut self,
        board_id: BoardId,
        order: Vec<NodeId>,
    ) -> Result<(), ModelError> {
        let board = self.board_mut(board_id)?;
        let updated = events::set_event_order(board, &order)?;
        *board = updated;
        Ok(())
    }

    // ---- chapters ----

    pub fn replace_chapters(&mut self, chapters: Vec<Chapter>) -> Result<(), ModelError> {
        if chapters.len() > self.boards.len() {
            return Err(ModelError::TooManyChapters {
                chapters: chapters.len(),
                boards: self.boards.len(),
            });
        }
        self.chapters = chapters;
        Ok(())
    }

    // ---- checks ----

    /// Act-count rule for the selected structure.
    pub fn validate_structure(&self) -> ValidationReport {
        validation::validate_structure(self.structure, self.boards.len())
    }

    /// Verifies every model invariant. Used after loading a document, where
    /// data did not pass through the mutation methods.
    pub fn check_invariants(&self) -> Result<(), ModelError> {
        validation::check_invariants(self)
    }
}
