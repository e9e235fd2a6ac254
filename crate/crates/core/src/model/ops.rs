use serde::{Deserialize, Serialize};

use super::{
    BlobRef, BoardId, CharacterId, EdgeId, ModelError, NodeId, NodeKind, Position, StoryProject,
    StoryStructure,
};

/// A single recorded mutation. Replaying a log of these against the same
/// starting project always yields the same project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ProjectOp {
    SetTitle { title: String },
    SetGenre { genre: String },
    SetStructure { structure: StoryStructure },
    AddCharacter { name: String },
    RenameCharacter { character: CharacterId, name: String },
    SetAppearance { character: CharacterId, appearance: Option<String> },
    SetCharacterImage { character: CharacterId, image: Option<BlobRef> },
    RemoveCharacter { character: CharacterId },
    AddBoard,
    RemoveBoard { board: BoardId },
    ReorderBoards { order: Vec<BoardId> },
    SetScenery { board: BoardId, description: Option<String> },
    SetSceneryImage { board: BoardId, image: Option<BlobRef> },
    AddNode { board: BoardId, kind: NodeKind, position: Position },
    MoveNode { board: BoardId, node: NodeId, position: Position },
    RelabelNode { board: BoardId, node: NodeId, label: String },
    RemoveNode { board: BoardId, node: NodeId },
    AddEdge { board: BoardId, source: NodeId, target: NodeId },
    RemoveEdge { board: BoardId, edge: EdgeId },
    SetEventOrder { board: BoardId, order: Vec<NodeId> },
}

/// Id created by an op, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpOutcome {
    None,
    Character(CharacterId),
    Board(BoardId),
    Node(NodeId),
    Edge(EdgeId),
}

impl ProjectOp {
    /// Applies the op. A failed op leaves the project untouched.
    pub fn apply(&self, project: &mut StoryProject) -> Result<OpOutcome, ModelError> {
        use OpOutcome as O;
        let p = project;
        Ok(match self {
            ProjectOp::SetTitle { title } => {
                p.set_title(title.clone());
                O::None
            }
            ProjectOp::SetGenre { genre } => {
                p.set_genre(genre.clone());
                O::None
            }
            ProjectOp::SetStructure { structure } => {
                p.set_structure(*structure);
                O::None
            }
            ProjectOp::AddCharacter { name } => O::Character(p.add_character(name)?),
            ProjectOp::RenameCharacter { character, name } => {
                p.rename_character(*character, name)?;
                O::None
            }
            ProjectOp::SetAppearance {
                character,
                appearance,
            } => {
                p.set_character_appearance(*character, appearance.clone())?;
                O::None
            }
            ProjectOp::SetCharacterImage { character, image } => {
                p.set_character_image(*character, image.clone())?;
                O::None
            }
            ProjectOp::RemoveCharacter { character } => {
                p.remove_character(*character)?;
                O::None
            }
            ProjectOp::AddBoard => O::Board(p.add_board()),
            ProjectOp::RemoveBoard { board } => {
                p.remove_board(*board)?;
                O::None
            }
            ProjectOp::ReorderBoards { order } => {
                p.reorder_boards(order)?;
                O::None
            }
            ProjectOp::SetScenery { board, description } => {
                p.set_scenery_description(*board, description.clone())?;
                O::None
            }
            ProjectOp::SetSceneryImage { board, image } => {
                p.set_scenery_image(*board, image.clone())?;
                O::None
            }
            ProjectOp::AddNode {
                board,
                kind,
                position,
            } => O::Node(p.add_node(*board, kind.clone(), *position)?),
            ProjectOp::MoveNode {
                board,
                node,
                position,
            } => {
                p.move_node(*board, *node, *position)?;
                O::None
            }
            ProjectOp::RelabelNode { board, node, label } => {
                p.relabel_node(*board, *node, label)?;
                O::None
            }
            ProjectOp::RemoveNode { board, node } => {
                p.remove_node(*board, *node)?;
                O::None
            }
            ProjectOp::AddEdge {
                board,
                source,
                target,
            } => O::Edge(p.add_edge(*board, *source, *target)?),
            ProjectOp::RemoveEdge { board, edge } => {
                p.remove_edge(*board, *edge)?;
                O::None
            }
            ProjectOp::SetEventOrder { board, order } => {
                p.set_event_order(*board, order.clone())?;
                O::None
            }
        })
    }
}

/// Replays `ops` in order, collecting each outcome.
pub fn replay(
    project: &mut StoryProject,
    ops: &[ProjectOp],
) -> Vec<Result<OpOutcome, ModelError>> {
    ops.iter().map(|op| op.apply(project)).collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::model::ProjectId;

    fn empty() -> StoryProject {
        StoryProject::new(
            ProjectId::new("replay").unwrap(),
            "Replay",
            "fantasy",
            StoryStructure::Free,
        )
    }

    // Small id ranges so that random ops frequently hit existing entities.
    fn op() -> impl Strategy<Value = ProjectOp> {
        let board = (1u64..4).prop_map(BoardId);
        let node = (1u64..10).prop_map(NodeId);
        let name = prop::sample::select(vec!["Ahmad", "John", "Ben", "Sara", ""]);
        let label = prop::sample::select(vec!["met", "fought", "brother of", " "]);
        let kind = prop_oneof![
            (1u64..6).prop_map(|c| NodeKind::character(CharacterId(c))),
            label.clone().prop_map(NodeKind::action),
            label.clone().prop_map(NodeKind::relationship),
        ];
        prop_oneof![
            Just(ProjectOp::AddBoard),
            name.prop_map(|n| ProjectOp::AddCharacter { name: n.into() }),
            (board.clone(), kind, -50.0..50.0f64).prop_map(|(board, kind, x)| ProjectOp::AddNode {
                board,
                kind,
                position: Position::new(x, -x),
            }),
            (board.clone(), node.clone(), node.clone()).prop_map(|(board, source, target)| {
                ProjectOp::AddEdge {
                    board,
                    source,
                    target,
                }
            }),
            (board.clone(), node.clone()).prop_map(|(board, node)| ProjectOp::RemoveNode { board, node }),
            (board.clone(), prop::collection::vec(node, 0..4))
                .prop_map(|(board, order)| ProjectOp::SetEventOrder { board, order }),
            (1u64..6).prop_map(|c| ProjectOp::RemoveCharacter {
                character: CharacterId(c)
            }),
            board.prop_map(|board| ProjectOp::RemoveBoard { board }),
        ]
    }

    proptest! {
        #[test]
        fn replay_is_deterministic(ops in prop::collection::vec(op(), 0..60)) {
            let mut first = empty();
            let mut second = empty();
            let a = replay(&mut first, &ops);
            let b = replay(&mut second, &ops);
            prop_assert_eq!(a, b);
            prop_assert_eq!(&first, &second);
        }

        #[test]
        fn invariants_survive_any_op_log(ops in prop::collection::vec(op(), 0..60)) {
            let mut project = empty();
            for op in &ops {
                let before = project.clone();
                if op.apply(&mut project).is_err() {
                    prop_assert_eq!(&project, &before);
                }
                prop_assert!(project.check_invariants().is_ok());
                for board in &project.boards {
                    for edge in &board.edges {
                        let ends = [edge.source, edge.target]
                            .map(|n| board.node(n).unwrap().kind.is_character());
                        prop_assert!(ends[0] != ends[1]);
                    }
                }
            }
        }
    }

    #[test]
    fn ops_serialize_with_tag() {
        let op = ProjectOp::AddEdge {
            board: BoardId(1),
            source: NodeId(2),
            target: NodeId(3),
        };
        let json = serde_json::to_string(&op).unwrap();
        assert_eq!(json, r#"{"op":"add_edge","board":1,"source":2,"target":3}"#);
        let back: ProjectOp = serde_json::from_str(&json).unwrap();
        assert_eq!(back, op);
    }
}
