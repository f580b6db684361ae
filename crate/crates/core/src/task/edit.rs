//! The edit protocol: JSON-encoded scene changes, their skip-and-continue
//! application, and graph diffing.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::NodeId;
use crate::scene::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Edit {
    Add { object: ObjectNode, relation: RelationKind, target: NodeId },
    Remove { object_id: NodeId },
    /// Swaps the node's payload in place; it keeps its location. A different
    /// `object.id` renames the node and every reference to it.
    Replace { object_id: NodeId, object: ObjectNode },
    /// Relocates an object, or an agent (`in_room` only).
    Move { object_id: NodeId, relation: RelationKind, target: NodeId },
    /// `value: null` clears the key.
    SetState { object_id: NodeId, key: StateKey, value: Option<StateValue> },
}

pub type EditList = Vec<Edit>;

impl Edit {
    pub fn subject(&self) -> &NodeId {
        match self {
            Edit::Add { object, .. } => &object.id,
            Edit::Remove { object_id }
            | Edit::Replace { object_id, .. }
            | Edit::Move { object_id, .. }
            | Edit::SetState { object_id, .. } => object_id,
        }
    }

    pub fn op(&self) -> &'static str {
        match self {
            Edit::Add { .. } => "add",
            Edit::Remove { .. } => "remove",
            Edit::Replace { .. } => "replace",
            Edit::Move { .. } => "move",
            Edit::SetState { .. } => "set_state",
        }
    }
}

impl fmt::Display for Edit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Edit::Add { object, relation, target } => write!(f, "add {}({}, {target})", relation.as_str(), object.id),
            Edit::Remove { object_id } => write!(f, "remove {object_id}"),
            Edit::Replace { object_id, object } => write!(f, "replace {object_id} with {}", object.id),
            Edit::Move { object_id, relation, target } => write!(f, "move {}({object_id}, {target})", relation.as_str()),
            Edit::SetState { object_id, key, value: Some(v) } => write!(f, "set {} {v}({object_id})", key.as_str()),
            Edit::SetState { object_id, key, value: None } => write!(f, "clear {}({object_id})", key.as_str()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCode {
    DuplicateId,
    DanglingReference,
    UnknownId,
    InvariantViolation,
    RoomOccupied,
    InvalidEdit,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{code:?}: {detail}")]
pub struct EditFailure {
    pub code: FailureCode,
    pub detail: String,
}

impl EditFailure {
    fn new(code: FailureCode, detail: impl Into<String>) -> Self {
        EditFailure { code, detail: detail.into() }
    }
}

impl From<SceneError> for EditFailure {
    fn from(e: SceneError) -> Self {
        let code = match &e {
            SceneError::DuplicateId(_) => FailureCode::DuplicateId,
            SceneError::DanglingReference(_) => FailureCode::DanglingReference,
            SceneError::InvariantViolation(_) => FailureCode::InvariantViolation,
            SceneError::UnknownId(_) | SceneError::UnknownAgent(_) => FailureCode::UnknownId,
            SceneError::RoomOccupied(_) => FailureCode::RoomOccupied,
            SceneError::InvalidPlacement(_) | SceneError::Schema(_) => FailureCode::InvalidEdit,
        };
        EditFailure::new(code, e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditStatus {
    Applied,
    Failed,
}

/// Why part of an edit's effect could only be checked against the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewNote {
    /// Inside a closed container, or hidden.
    Occluded,
    /// In another room than the viewpoint.
    OutOfView,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditVerdict {
    pub index: usize,
    pub status: EditStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<EditFailure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view: Option<ViewNote>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Graph,
    View,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    /// Index of the edit whose postcondition failed.
    pub edit: usize,
    pub expected: String,
    pub observed: String,
    pub source: Source,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub verdicts: Vec<EditVerdict>,
    pub mismatches: Vec<Mismatch>,
    pub passed: bool,
}

impl CheckReport {
    pub(crate) fn settle(&mut self) {
        self.passed = self.mismatches.is_empty() && self.verdicts.iter().all(|v| v.status == EditStatus::Applied);
    }

    pub fn failures(&self) -> impl Iterator<Item = &EditVerdict> {
        self.verdicts.iter().filter(|v| v.status == EditStatus::Failed)
    }
}

fn commit(g: &mut SceneGraph, mut next: SceneGraph) -> Result<(), EditFailure> {
    let v = check_invariants(&next);
    if !v.is_empty() {
        return Err(SceneError::InvariantViolation(v).into());
    }
    next.set_revision(g.revision() + 1);
    *g = next;
    Ok(())
}

fn require_object(g: &SceneGraph, id: &NodeId) -> Result<(), EditFailure> {
    if g.object(id).is_some() {
        Ok(())
    } else if g.contains(id) {
        Err(EditFailure::new(FailureCode::InvalidEdit, format!("{id} is not an object")))
    } else {
        Err(EditFailure::new(FailureCode::UnknownId, format!("unknown object {id}")))
    }
}

/// Applies one edit atomically: on failure `g` is untouched.
pub fn apply_edit(g: &mut SceneGraph, edit: &Edit) -> Result<(), EditFailure> {
    match edit {
        Edit::Add { object, relation, target } => {
            if !relation.is_parent() {
                return Err(EditFailure::new(FailureCode::InvalidEdit, "objects are placed with in_room, inside, on_top, or held_by"));
            }
            if g.contains(&object.id) {
                return Err(SceneError::DuplicateId(object.id.clone()).into());
            }
            if !g.contains(target) {
                return Err(SceneError::DanglingReference(format!("unknown target {target}")).into());
            }
            let at = Relation { kind: *relation, src: object.id.clone(), dst: target.clone() };
            g.add_node(Node::Object(object.clone()), Some(at)).map_err(Into::into)
        }
        Edit::Remove { object_id } => {
            require_object(g, object_id)?;
            g.remove_node(object_id).map_err(Into::into)
        }
        Edit::Replace { object_id, object } => {
            require_object(g, object_id)?;
            if &object.id != object_id && g.contains(&object.id) {
                return Err(SceneError::DuplicateId(object.id.clone()).into());
            }
            let mut next = g.clone();
            next.replace_object(object_id, object.clone());
            commit(g, next)
        }
        Edit::Move { object_id, relation, target } => {
            if !g.contains(target) {
                return Err(SceneError::DanglingReference(format!("unknown target {target}")).into());
            }
            if g.agent(object_id).is_some() {
                if *relation != RelationKind::InRoom || g.room(target).is_none() {
                    return Err(EditFailure::new(FailureCode::InvalidEdit, "agents move with in_room to a room"));
                }
            } else {
                require_object(g, object_id)?;
                if !relation.is_parent() {
                    return Err(EditFailure::new(FailureCode::InvalidEdit, "objects are placed with in_room, inside, on_top, or held_by"));
                }
            }
            let mut next = g.clone();
            next.set_parent(object_id, *relation, target.clone());
            commit(g, next)
        }
        Edit::SetState { object_id, key, value } => {
            require_object(g, object_id)?;
            if let Some(v) = value {
                if v.key() != *key {
                    return Err(EditFailure::new(FailureCode::InvalidEdit, format!("{v} is not a {} value", key.as_str())));
                }
            }
            let mut next = g.clone();
            let o = next.object_mut(object_id).expect("checked");
            match value {
                Some(v) => o.states.set(*v),
                None => o.states.clear(*key),
            }
            commit(g, next)
        }
    }
}

/// Applies `edits` in order. A failing edit is recorded and skipped; later
/// edits are still attempted. The report carries verdicts only.
pub fn apply_edits(graph: &SceneGraph, edits: &[Edit]) -> (SceneGraph, CheckReport) {
    let mut g = graph.clone();
    let mut report = CheckReport::default();
    for (index, e) in edits.iter().enumerate() {
        let verdict = match apply_edit(&mut g, e) {
            Ok(()) => EditVerdict { index, status: EditStatus::Applied, reason: None, view: None },
            Err(reason) => {
                tracing::debug!(index, edit = %e, "edit failed: {reason}");
                EditVerdict { index, status: EditStatus::Failed, reason: Some(reason), view: None }
            }
        };
        report.verdicts.push(verdict);
    }
    report.settle();
    (g, report)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiffError {
    /// The graphs differ in a way edits cannot express (rooms, doors,
    /// agent set, clue memory) or in an order the normal form cannot replay.
    #[error("difference not expressible as edits: {0}")]
    Unrepresentable(String),
}

fn depth(g: &SceneGraph, id: &NodeId) -> usize {
    let mut d = 0;
    let mut cur = id.clone();
    while let Some(p) = g.parent(&cur) {
        d += 1;
        cur = p.dst.clone();
        if d > 64 {
            break;
        }
    }
    d
}

/// Edits turning `before` into `after`, in normal form: adds, replaces,
/// moves, state-sets, removes. Adds and moves are ordered so that every
/// host exists and sits in its final place before anything is put on it.
/// The result is replayed before being returned.
pub fn diff(before: &SceneGraph, after: &SceneGraph) -> Result<EditList, DiffError> {
    let mut adds: Vec<(usize, NodeId, Edit)> = Vec::new();
    let mut replaces: Vec<Edit> = Vec::new();
    let mut moves: Vec<(bool, usize, NodeId, Edit)> = Vec::new();
    let mut sets: Vec<Edit> = Vec::new();
    let mut removes: Vec<Edit> = Vec::new();

    let parent_of = |g: &SceneGraph, id: &NodeId| g.parent(id).cloned();

    for a in after.agents() {
        let Some(b) = before.agent(&a.id) else {
            return Err(DiffError::Unrepresentable(format!("agent {} added", a.id)));
        };
        let (pa, pb) = (parent_of(after, &a.id), parent_of(before, &b.id));
        if pa != pb {
            if let Some(p) = pa {
                moves.push((false, 0, a.id.clone(), Edit::Move { object_id: a.id.clone(), relation: p.kind, target: p.dst }));
            }
        }
    }

    let mut receiving: Vec<NodeId> = Vec::new();
    for o in after.objects() {
        let Some(p) = parent_of(after, &o.id) else {
            return Err(DiffError::Unrepresentable(format!("object {} has no location", o.id)));
        };
        match before.object(&o.id) {
            None => {
                let d = depth(after, &o.id);
                if p.kind == RelationKind::HeldBy {
                    let room = after.agent_room(&p.dst).cloned().ok_or_else(|| DiffError::Unrepresentable(format!("holder {} has no room", p.dst)))?;
                    adds.push((1, o.id.clone(), Edit::Add { object: o.clone(), relation: RelationKind::InRoom, target: room }));
                    moves.push((true, d, o.id.clone(), Edit::Move { object_id: o.id.clone(), relation: p.kind, target: p.dst.clone() }));
                    receiving.push(p.dst);
                } else {
                    adds.push((d, o.id.clone(), Edit::Add { object: o.clone(), relation: p.kind, target: p.dst }));
                }
            }
            Some(b) => {
                let mut stripped_b = b.clone();
                stripped_b.states = o.states;
                if &stripped_b != o {
                    replaces.push(Edit::Replace { object_id: o.id.clone(), object: o.clone() });
                } else if b.states != o.states {
                    for key in StateKey::ALL {
                        if b.states.get(key) != o.states.get(key) {
                            sets.push(Edit::SetState { object_id: o.id.clone(), key, value: o.states.get(key) });
                        }
                    }
                }
                if parent_of(before, &o.id).as_ref() != Some(&p) {
                    let held = p.kind == RelationKind::HeldBy;
                    if held {
                        receiving.push(p.dst.clone());
                    }
                    moves.push((held, depth(after, &o.id), o.id.clone(), Edit::Move { object_id: o.id.clone(), relation: p.kind, target: p.dst }));
                }
            }
        }
    }
    for o in before.objects() {
        if after.object(&o.id).is_none() {
            if let Some(p) = parent_of(before, &o.id) {
                // Free the hands that must take something else first.
                if p.kind == RelationKind::HeldBy && receiving.contains(&p.dst) {
                    if let Some(room) = before.agent_room(&p.dst) {
                        moves.push((false, 0, o.id.clone(), Edit::Move { object_id: o.id.clone(), relation: RelationKind::InRoom, target: room.clone() }));
                    }
                }
            }
            removes.push(Edit::Remove { object_id: o.id.clone() });
        }
    }

    adds.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    moves.sort_by(|a, b| (a.0, a.1, &a.2).cmp(&(b.0, b.1, &b.2)));
    let mut out: EditList = adds.into_iter().map(|(_, _, e)| e).collect();
    out.extend(replaces);
    out.extend(moves.into_iter().map(|(_, _, _, e)| e));
    out.extend(sets);
    out.extend(removes);

    let (replayed, report) = apply_edits(before, &out);
    if let Some(f) = report.failures().next() {
        return Err(DiffError::Unrepresentable(format!("edit {} ({}) does not replay: {}", f.index, out[f.index], f.reason.as_ref().map(|r| r.to_string()).unwrap_or_default())));
    }
    if !replayed.content_eq(after) {
        return Err(DiffError::Unrepresentable(first_difference(&replayed, after)));
    }
    Ok(out)
}

fn first_difference(a: &SceneGraph, b: &SceneGraph) -> String {
    let ra: Vec<&RoomNode> = a.rooms().collect();
    let rb: Vec<&RoomNode> = b.rooms().collect();
    if ra != rb {
        return "rooms differ".into();
    }
    for (x, y) in a.agents().zip(b.agents()) {
        if x != y {
            return format!("agent {} differs", x.id);
        }
    }
    if a.agents().count() != b.agents().count() {
        return "agent sets differ".into();
    }
    let rels_a: Vec<&Relation> = a.relations().collect();
    let rels_b: Vec<&Relation> = b.relations().collect();
    if let Some(r) = rels_a.iter().find(|r| !rels_b.contains(r)).or_else(|| rels_b.iter().find(|r| !rels_a.contains(r))) {
        return format!("relation {r} differs");
    }
    let objs: BTreeMap<&NodeId, &ObjectNode> = b.objects().map(|o| (&o.id, o)).collect();
    for o in a.objects() {
        if objs.get(&o.id) != Some(&o) {
            return format!("object {} differs", o.id);
        }
    }
    "object sets differ".into()
}
