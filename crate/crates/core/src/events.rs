//! Events and relations read off a storyboard graph.
//!
//! Every action node with at least one incoming and one outgoing character
//! edge yields an [`Event`]; relationship nodes yield [`Relation`]s the same
//! way. Characters on each side keep the order their edges were added in.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{CharacterId, NodeId, NodeKind, StoryProject, Storyboard};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub connector_id: NodeId,
    pub subjects: Vec<CharacterId>,
    pub verb: String,
    pub objects: Vec<CharacterId>,
    /// Position in the board's event sequence, starting at 0.
    pub order_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub connector_id: NodeId,
    pub subjects: Vec<CharacterId>,
    pub label: String,
    pub objects: Vec<CharacterId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectorKind {
    Action,
    Relationship,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingSide {
    Subjects,
    Objects,
    Both,
}

impl fmt::Display for MissingSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MissingSide::Subjects => "no character points into it",
            MissingSide::Objects => "it points to no character",
            MissingSide::Both => "it has no characters on either side",
        })
    }
}

/// A connector that cannot become an event or relation yet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncompleteConnector {
    pub connector_id: NodeId,
    pub kind: ConnectorKind,
    pub missing: MissingSide,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoardAnalysis {
    pub events: Vec<Event>,
    pub relations: Vec<Relation>,
    pub incomplete: Vec<IncompleteConnector>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("action {connector_id} is incomplete: {missing}")]
    IncompleteEvent {
        connector_id: NodeId,
        missing: MissingSide,
    },
    #[error("relationship {connector_id} is incomplete: {missing}")]
    IncompleteRelation {
        connector_id: NodeId,
        missing: MissingSide,
    },
    #[error("{node} refers to unregistered {character}")]
    DanglingCharacter { node: NodeId, character: CharacterId },
}

impl From<&IncompleteConnector> for ExtractError {
    fn from(c: &IncompleteConnector) -> Self {
        match c.kind {
            ConnectorKind::Action => ExtractError::IncompleteEvent {
                connector_id: c.connector_id,
                missing: c.missing,
            },
            ConnectorKind::Relationship => ExtractError::IncompleteRelation {
                connector_id: c.connector_id,
                missing: c.missing,
            },
        }
    }
}

/// Event order is not a permutation of the board's complete actions.
#[derive(Debug, Clone, Default, PartialEq, Eq, thiserror::Error)]
#[error("not a permutation of the board's events (missing {missing:?}, unexpected {extra:?}, repeated {duplicates:?})")]
pub struct PermutationError {
    pub missing: Vec<NodeId>,
    pub extra: Vec<NodeId>,
    pub duplicates: Vec<NodeId>,
}

struct Sides {
    subjects: Vec<CharacterId>,
    objects: Vec<CharacterId>,
}

impl Sides {
    fn missing(&self) -> Option<MissingSide> {
        match (self.subjects.is_empty(), self.objects.is_empty()) {
            (false, false) => None,
            (true, false) => Some(MissingSide::Subjects),
            (false, true) => Some(MissingSide::Objects),
            (true, true) => Some(MissingSide::Both),
        }
    }
}

fn sides(board: &Storyboard, connector: NodeId) -> Sides {
    let character_of = |id: NodeId| match board.node(id).map(|n| &n.kind) {
        Some(NodeKind::CharacterRef { character_id }) => Some(*character_id),
        _ => None,
    };
    let mut subjects = Vec::new();
    let mut objects = Vec::new();
    for edge in &board.edges {
        if edge.target == connector {
            subjects.extend(character_of(edge.source));
        } else if edge.source == connector {
            objects.extend(character_of(edge.target));
        }
    }
    Sides { subjects, objects }
}

/// Action connectors that currently form events, in node insertion order.
pub fn valid_action_connectors(board: &Storyboard) -> Vec<NodeId> {
    board
        .nodes
        .iter()
        .filter(|n| matches!(n.kind, NodeKind::Action { .. }))
        .filter(|n| sides(board, n.id).missing().is_none())
        .map(|n| n.id)
        .collect()
}

/// Classifies every connector on the board. Incomplete connectors are
/// listed rather than dropped; only dangling character references fail.
pub fn analyze_board(
    board: &Storyboard,
    project: &StoryProject,
) -> Result<BoardAnalysis, ExtractError> {
    for node in &board.nodes {
        if let NodeKind::CharacterRef { character_id } = node.kind {
            if project.character(character_id).is_none() {
                return Err(ExtractError::DanglingCharacter {
                    node: node.id,
                    character: character_id,
                });
            }
        }
    }

    let mut analysis = BoardAnalysis::default();
    let mut events = Vec::new();
    for node in &board.nodes {
        let (kind, label) = match &node.kind {
            NodeKind::CharacterRef { .. } => continue,
            NodeKind::Action { label, .. } => (ConnectorKind::Action, label),
            NodeKind::Relationship { label } => (ConnectorKind::Relationship, label),
        };
        let sides = sides(board, node.id);
        if let Some(missing) = sides.missing() {
            analysis.incomplete.push(IncompleteConnector {
                connector_id: node.id,
                kind,
                missing,
            });
            continue;
        }
        match kind {
            ConnectorKind::Action => events.push(Event {
                connector_id: node.id,
                subjects: sides.subjects,
                verb: label.clone(),
                objects: sides.objects,
                order_index: 0,
            }),
            ConnectorKind::Relationship => analysis.relations.push(Relation {
                connector_id: node.id,
                subjects: sides.subjects,
                label: label.clone(),
                objects: sides.objects,
            }),
        }
    }

    // Explicit order first, then anything it does not mention in insertion order.
    let mut ordered = Vec::with_capacity(events.len());
    for id in &board.event_order {
        if let Some(pos) = events.iter().position(|e: &Event| e.connector_id == *id) {
            ordered.push(events.remove(pos));
        }
    }
    ordered.append(&mut events);
    for (i, event) in ordered.iter_mut().enumerate() {
        event.order_index = i;
    }
    analysis.events = ordered;
    Ok(analysis)
}

/// Events of the board in narrative order. Any incomplete action is an error.
pub fn extract_events(
    board: &Storyboard,
    project: &StoryProject,
) -> Result<Vec<Event>, ExtractError> {
    let analysis = analyze_board(board, project)?;
    if let Some(bad) = analysis
        .incomplete
        .iter()
        .find(|c| c.kind == ConnectorKind::Action)
    {
        return Err(bad.into());
    }
    Ok(analysis.events)
}

/// Relations of the board in insertion order. Any incomplete relationship is
/// an error.
pub fn extract_relations(
    board: &Storyboard,
    project: &StoryProject,
) -> Result<Vec<Relation>, ExtractError> {
    let analysis = analyze_board(board, project)?;
    if let Some(bad) = analysis
        .incomplete
        .iter()
        .find(|c| c.kind == ConnectorKind::Relationship)
    {
        return Err(bad.into());
    }
    Ok(analysis.relations)
}

pub fn check_permutation(board: &Storyboard, order: &[NodeId]) -> Result<(), PermutationError> {
    let valid: BTreeSet<NodeId> = valid_action_connectors(board).into_iter().collect();
    let mut seen = HashSet::new();
    let mut err = PermutationError::default();
    for id in order {
        if !seen.insert(*id) {
            if !err.duplicates.contains(id) {
                err.duplicates.push(*id);
            }
        } else if !valid.contains(id) {
            err.extra.push(*id);
        }
    }
    err.missing = valid.into_iter().filter(|id| !seen.contains(id)).collect();
    if err == PermutationError::default() {
        Ok(())
    } else {
        Err(err)
    }
}

/// Returns a copy of `board` with its event order replaced.
pub fn set_event_order(
    board: &Storyboard,
    permutation: &[NodeId],
) -> Result<Storyboard, PermutationError> {
    check_permutation(board, permutation)?;
    let mut board = board.clone();
    board.event_order = permutation.to_vec();
    Ok(board)
}

fn join_names(ids: &[CharacterId], project: &StoryProject) -> String {
    ids.iter()
        .map(|id| {
            project
                .character(*id)
                .map(|c| c.name.clone())
                .unwrap_or_else(|| id.to_string())
        })
        .collect::<Vec<_>>()
        .join(" and ")
}

/// `"<subjects> <verb> <objects>"` with each side joined by `" and "`.
pub fn render_event_text(event: &Event, project: &StoryProject) -> String {
    format!(
        "{} {} {}",
        join_names(&event.subjects, project),
        event.verb,
        join_names(&event.objects, project)
    )
}

pub fn render_relation_text(relation: &Relation, project: &StoryProject) -> String {
    format!(
        "{} {} {}",
        join_names(&relation.subjects, project),
        relation.label,
        join_names(&relation.objects, project)
    )
}
