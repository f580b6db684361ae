use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ids::NodeId;
use crate::scene::graph::SceneGraph;
use crate::scene::types::*;

/// One broken invariant, naming the offending ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    DuplicateId { id: NodeId },
    EmptyName { id: NodeId },
    DanglingReference { relation: String },
    BadEndpoint { relation: String, reason: String },
    ObjectParentCount { object: NodeId, count: usize },
    CycleViolation { ids: Vec<NodeId> },
    AgentLocationViolation { agent: NodeId, count: usize },
    DoorViolation { door: NodeId, reason: String },
    StateWithoutAffordance { object: NodeId, key: StateKey },
    LockWithoutLockable { object: NodeId },
    MalformedLock { object: NodeId, reason: String },
    DanglingKey { object: NodeId, key: NodeId },
    ClueWithoutReadable { object: NodeId },
    DanglingClueReferent { object: NodeId, referent: NodeId },
    ContainerAndSurface { object: NodeId },
    HoldingMismatch { agent: NodeId, object: NodeId },
    CapacityExceeded { agent: NodeId, holding: usize, capacity: usize },
    BadArrangement { room: NodeId, reason: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match serde_json::to_string(self) {
            Ok(s) => f.write_str(&s),
            Err(_) => write!(f, "{self:?}"),
        }
    }
}

/// Checks every scene-graph invariant. Returns an empty list iff the graph is valid.
pub fn check_invariants(g: &SceneGraph) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut seen = BTreeSet::new();
    let ids = g.rooms().map(|r| &r.id).chain(g.objects().map(|o| &o.id)).chain(g.agents().map(|a| &a.id));
    for id in ids {
        if !seen.insert(id) {
            out.push(Violation::DuplicateId { id: id.clone() });
        }
    }

    for r in g.rooms() {
        if r.name.trim().is_empty() {
            out.push(Violation::EmptyName { id: r.id.clone() });
        }
        if let Some(a) = &r.arrangement {
            check_arrangement(g, r, a, &mut out);
        }
    }

    let mut parents: BTreeMap<&NodeId, usize> = BTreeMap::new();
    let mut agent_rooms: BTreeMap<&NodeId, usize> = BTreeMap::new();
    let mut connects: BTreeMap<&NodeId, Vec<&NodeId>> = BTreeMap::new();
    for rel in g.relations() {
        if !g.contains(&rel.src) || !g.contains(&rel.dst) {
            out.push(Violation::DanglingReference { relation: rel.to_string() });
            continue;
        }
        if let Some(reason) = endpoint_problem(g, rel) {
            out.push(Violation::BadEndpoint { relation: rel.to_string(), reason });
            continue;
        }
        match rel.kind {
            RelationKind::Connects => connects.entry(&rel.src).or_default().push(&rel.dst),
            RelationKind::InRoom if g.agent(&rel.src).is_some() => *agent_rooms.entry(&rel.src).or_default() += 1,
            _ => *parents.entry(&rel.src).or_default() += 1,
        }
    }

    for o in g.objects() {
        let count = parents.get(&o.id).copied().unwrap_or(0);
        if count != 1 {
            out.push(Violation::ObjectParentCount { object: o.id.clone(), count });
        }
        check_object(g, o, &mut out);
    }
    for (door, rooms) in &connects {
        let distinct: BTreeSet<_> = rooms.iter().collect();
        if rooms.len() != 2 || distinct.len() != 2 {
            out.push(Violation::DoorViolation {
                door: (*door).clone(),
                reason: format!("connects {} room(s), expected two distinct", rooms.len()),
            });
        }
        if let Some(obj) = g.object(door) {
            if !obj.has(Affordance::Openable) {
                out.push(Violation::DoorViolation { door: (*door).clone(), reason: "door is not openable".into() });
            }
        }
    }

    for a in g.agents() {
        let count = agent_rooms.get(&a.id).copied().unwrap_or(0);
        if count != 1 {
            out.push(Violation::AgentLocationViolation { agent: a.id.clone(), count });
        }
        if a.holding.len() > a.capacity {
            out.push(Violation::CapacityExceeded { agent: a.id.clone(), holding: a.holding.len(), capacity: a.capacity });
        }
        for h in &a.holding {
            if !g.has_relation(&Relation::held_by(h.clone(), a.id.clone())) {
                out.push(Violation::HoldingMismatch { agent: a.id.clone(), object: h.clone() });
            }
        }
    }
    for rel in g.relations().filter(|r| r.kind == RelationKind::HeldBy) {
        if let Some(a) = g.agent(&rel.dst) {
            if !a.holding.contains(&rel.src) {
                out.push(Violation::HoldingMismatch { agent: a.id.clone(), object: rel.src.clone() });
            }
        }
    }

    out.extend(find_cycles(g));
    out
}

fn endpoint_problem(g: &SceneGraph, rel: &Relation) -> Option<String> {
    let src_obj = g.object(&rel.src);
    let src_agent = g.agent(&rel.src).is_some();
    match rel.kind {
        RelationKind::InRoom => {
            if src_obj.is_none() && !src_agent {
                return Some("in_room source must be an object or agent".into());
            }
            if g.room(&rel.dst).is_none() {
                return Some("in_room target must be a room".into());
            }
        }
        RelationKind::Inside | RelationKind::OnTop => {
            if src_obj.is_none() {
                return Some(format!("{} source must be an object", rel.kind.as_str()));
            }
            let Some(dst) = g.object(&rel.dst) else {
                return Some(format!("{} target must be an object", rel.kind.as_str()));
            };
            let need = if rel.kind == RelationKind::Inside { Affordance::Container } else { Affordance::Surface };
            if !dst.has(need) {
                return Some(format!("{} requires target with {:?} affordance", rel.kind.as_str(), need));
            }
        }
        RelationKind::HeldBy => {
            let Some(src) = src_obj else {
                return Some("held_by source must be an object".into());
            };
            if !src.has(Affordance::Graspable) {
                return Some("held object must be graspable".into());
            }
            if g.agent(&rel.dst).is_none() {
                return Some("held_by target must be an agent".into());
            }
        }
        RelationKind::Connects => {
            if src_obj.is_none() || g.room(&rel.dst).is_none() {
                return Some("connects runs from a door object to a room".into());
            }
        }
    }
    None
}

fn check_object(g: &SceneGraph, o: &ObjectNode, out: &mut Vec<Violation>) {
    for (key, _) in o.states.iter() {
        if let Some(need) = key.enabling_affordance() {
            if !o.has(need) {
                out.push(Violation::StateWithoutAffordance { object: o.id.clone(), key });
            }
        }
    }
    if o.has(Affordance::Container) && o.has(Affordance::Surface) {
        out.push(Violation::ContainerAndSurface { object: o.id.clone() });
    }
    if let Some(lock) = &o.lock {
        if !o.has(Affordance::Lockable) {
            out.push(Violation::LockWithoutLockable { object: o.id.clone() });
        }
        if let Err(reason) = lock.well_formed() {
            out.push(Violation::MalformedLock { object: o.id.clone(), reason: reason.into() });
        }
        if let Some(key) = &lock.key_id {
            if g.object(key).is_none() {
                out.push(Violation::DanglingKey { object: o.id.clone(), key: key.clone() });
            }
        }
    }
    if let Some(clue) = &o.clue {
        if !o.has(Affordance::Readable) {
            out.push(Violation::ClueWithoutReadable { object: o.id.clone() });
        }
        if let Some(r) = &clue.referent {
            if !g.contains(r) {
                out.push(Violation::DanglingClueReferent { object: o.id.clone(), referent: r.clone() });
            }
        }
    }
}

fn check_arrangement(g: &SceneGraph, room: &RoomNode, a: &ArrangementSpec, out: &mut Vec<Violation>) {
    let bad = |reason: &str| Violation::BadArrangement { room: room.id.clone(), reason: reason.into() };
    match g.object(&a.target) {
        Some(t) if t.has(Affordance::Surface) => {}
        Some(_) => out.push(bad("arrangement target must be a surface")),
        None => out.push(bad("arrangement target does not exist")),
    }
    if g.object(&a.reveals).is_none() {
        out.push(bad("revealed object does not exist"));
    }
    if a.order.is_empty() {
        out.push(bad("empty arrangement order"));
    }
}

fn find_cycles(g: &SceneGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut reported: BTreeSet<NodeId> = BTreeSet::new();
    for o in g.objects() {
        if reported.contains(&o.id) {
            continue;
        }
        let mut path: Vec<NodeId> = vec![o.id.clone()];
        let mut cur = o.id.clone();
        while let Some(p) = g.parent(&cur) {
            if !matches!(p.kind, RelationKind::Inside | RelationKind::OnTop) {
                break;
            }
            if let Some(pos) = path.iter().position(|x| x == &p.dst) {
                let mut ids: Vec<NodeId> = path[pos..].to_vec();
                ids.sort();
                if ids.iter().all(|i| !reported.contains(i)) {
                    reported.extend(ids.iter().cloned());
                    out.push(Violation::CycleViolation { ids });
                }
                break;
            }
            path.push(p.dst.clone());
            cur = p.dst.clone();
        }
    }
    out
}
