//! Scene graphs: rooms, objects, agents, and the relations between them.

pub mod document;
pub mod graph;
pub mod invariants;
pub mod observe;
pub mod types;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::NodeId;

pub use document::{from_json, from_json_validated, from_value, to_document, to_json, SceneDocument};
pub use graph::SceneGraph;
pub use invariants::{check_invariants, Violation};
pub use observe::{
    observe, observe_room, perceive, visibility_violations, DoorView, LockView, Observation, ObservedClue, Perception,
    VisibleObject,
};
pub use types::*;

/// A document failed to parse. `path` is a JSON pointer to the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl SchemaError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        SchemaError { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for SchemaError {}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("duplicate id {0}")]
    DuplicateId(NodeId),
    #[error("dangling reference: {0}")]
    DanglingReference(String),
    #[error("invariant violation: {}", list(.0))]
    InvariantViolation(Vec<Violation>),
    #[error("unknown id {0}")]
    UnknownId(NodeId),
    #[error("room {0} still contains agents")]
    RoomOccupied(NodeId),
    #[error("unknown agent {0}")]
    UnknownAgent(NodeId),
    #[error("invalid placement: {0}")]
    InvalidPlacement(String),
    #[error("schema error at {0}")]
    Schema(SchemaError),
}

fn list(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
