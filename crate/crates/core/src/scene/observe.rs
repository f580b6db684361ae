//! Partial observation of a scene graph from an agent or a fixed room viewpoint.
//!
//! An object is perceivable from a room when it is located there (directly,
//! through containers and surfaces, or in someone's hands), is not hidden,
//! and no enclosing container is closed. Surfaces never hide what is on them.

use serde::{Deserialize, Serialize};

use crate::ids::NodeId;
use crate::scene::graph::SceneGraph;
use crate::scene::types::*;
use crate::scene::SceneError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Perception {
    Visible,
    /// Located in a different room (or nowhere).
    Elsewhere,
    /// The object or one of its enclosures is hidden.
    Hidden,
    /// Inside this closed container.
    Enclosed(NodeId),
}

/// How `object` appears to an observer standing in `room`.
pub fn perceive(g: &SceneGraph, room: &NodeId, object: &NodeId) -> Perception {
    let Some(obj) = g.object(object) else {
        return Perception::Elsewhere;
    };
    if g.hoisted_room(object).as_ref() != Some(room) {
        return Perception::Elsewhere;
    }
    if obj.is_hidden() {
        return Perception::Hidden;
    }
    // Outermost closed container wins: it is the one an agent must open first.
    let mut verdict = Perception::Visible;
    for (kind, anc) in g.ancestors(object) {
        let Some(a) = g.object(&anc) else { break };
        if a.is_hidden() {
            return Perception::Hidden;
        }
        if kind == RelationKind::Inside && !a.is_open() {
            verdict = Perception::Enclosed(anc.clone());
        }
    }
    verdict
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LockView {
    pub mechanism: LockMechanism,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_id: Option<NodeId>,
}

impl LockView {
    fn of(lock: &LockSpec) -> Self {
        LockView { mechanism: lock.mechanism, key_id: lock.key_id.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisibleObject {
    pub id: NodeId,
    pub category: String,
    pub name: String,
    pub affordances: Affordances,
    pub states: States,
    pub location: Relation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lock: Option<LockView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<Color>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoorView {
    pub door: NodeId,
    pub name: String,
    pub destination: NodeId,
    pub affordances: Affordances,
    pub states: States,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lock: Option<LockView>,
}

/// A clue as the reader remembers it. Veracity is never observable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservedClue {
    pub object: NodeId,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub referent: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    /// Absent for a fixed room viewpoint.
    pub agent_id: Option<NodeId>,
    pub room_id: NodeId,
    pub room_name: String,
    pub visible_objects: Vec<VisibleObject>,
    pub held: Vec<NodeId>,
    pub doors: Vec<DoorView>,
    pub read_clues: Vec<ObservedClue>,
    pub co_located_agents: Vec<NodeId>,
}

impl Observation {
    pub fn sees(&self, id: &NodeId) -> bool {
        self.visible_objects.iter().any(|o| &o.id == id)
    }

    pub fn object(&self, id: &NodeId) -> Option<&VisibleObject> {
        self.visible_objects.iter().find(|o| &o.id == id)
    }
}

/// What `agent` can currently perceive.
pub fn observe(g: &SceneGraph, agent: &NodeId) -> Result<Observation, SceneError> {
    let a = g.agent(agent).ok_or_else(|| SceneError::UnknownAgent(agent.clone()))?;
    let room = g.agent_room(agent).ok_or_else(|| SceneError::UnknownAgent(agent.clone()))?.clone();
    let mut obs = view_from(g, &room, Some(agent))?;
    obs.held = a.holding.clone();
    obs.read_clues = a
        .read_clues
        .iter()
        .map(|rc| ObservedClue {
            object: rc.object.clone(),
            text: rc.clue.text.clone(),
            referent: rc.clue.referent.clone(),
            payload: rc.clue.payload.clone(),
        })
        .collect();
    Ok(obs)
}

/// What a fixed observer standing in `room` can perceive (no hands, no clue memory).
pub fn observe_room(g: &SceneGraph, room: &NodeId) -> Result<Observation, SceneError> {
    if g.room(room).is_none() {
        return Err(SceneError::UnknownId(room.clone()));
    }
    view_from(g, room, None)
}

fn view_from(g: &SceneGraph, room: &NodeId, agent: Option<&NodeId>) -> Result<Observation, SceneError> {
    let room_name = g.room(room).map(|r| r.name.clone()).unwrap_or_default();
    let mut visible_objects = Vec::new();
    for o in g.objects() {
        if g.is_door(&o.id) {
            continue;
        }
        if perceive(g, room, &o.id) != Perception::Visible {
            continue;
        }
        let Some(location) = g.parent(&o.id).cloned() else { continue };
        let mut states = o.states;
        states.clear(StateKey::Visibility);
        visible_objects.push(VisibleObject {
            id: o.id.clone(),
            category: o.category.clone(),
            name: o.display_name.clone(),
            affordances: o.affordances,
            states,
            location,
            lock: o.lock.as_ref().map(LockView::of),
            color: o.color,
        });
    }
    let doors = g
        .doors_of(room)
        .into_iter()
        .filter_map(|(door, destination)| {
            let d = g.object(&door)?;
            let mut states = d.states;
            states.clear(StateKey::Visibility);
            Some(DoorView {
                door: door.clone(),
                name: d.display_name.clone(),
                destination,
                affordances: d.affordances,
                states,
                lock: d.lock.as_ref().map(LockView::of),
            })
        })
        .collect();
    let co_located_agents = g
        .agents()
        .filter(|a| Some(&a.id) != agent && g.agent_room(&a.id) == Some(room))
        .map(|a| a.id.clone())
        .collect();
    Ok(Observation {
        agent_id: agent.cloned(),
        room_id: room.clone(),
        room_name,
        visible_objects,
        held: Vec::new(),
        doors,
        read_clues: Vec::new(),
        co_located_agents,
    })
}

/// Independent audit of the closed-container rule: lists every object in
/// `obs` that, in `g`, sits transitively inside a closed container, lies
/// outside the observer's room, or is hidden.
pub fn visibility_violations(g: &SceneGraph, obs: &Observation) -> Vec<NodeId> {
    let mut bad = Vec::new();
    for vo in &obs.visible_objects {
        let mut ok = g.object(&vo.id).is_some_and(|o| !o.is_hidden());
        // Walk the parent chain from the raw relations.
        let mut cur = vo.id.clone();
        let mut steps = 0;
        while ok && steps < 64 {
            steps += 1;
            let Some(p) = g.relations().find(|r| r.src == cur && r.kind.is_parent()) else {
                ok = false;
                break;
            };
            match p.kind {
                RelationKind::InRoom => {
                    ok = p.dst == obs.room_id;
                    break;
                }
                RelationKind::HeldBy => {
                    ok = g.relations().any(|r| r.src == p.dst && r.kind == RelationKind::InRoom && r.dst == obs.room_id);
                    break;
                }
                RelationKind::Inside => {
                    let c = g.object(&p.dst);
                    ok = c.is_some_and(|c| !c.states.is(StateValue::Closed) && !c.is_hidden());
                }
                RelationKind::OnTop => {
                    ok = g.object(&p.dst).is_some_and(|c| !c.is_hidden());
                }
                RelationKind::Connects => ok = false,
            }
            cur = p.dst.clone();
        }
        if !ok {
            bad.push(vo.id.clone());
        }
    }
    let read: Vec<&NodeId> = match obs.agent_id.as_ref().and_then(|a| g.agent(a)) {
        Some(a) => a.read_clues.iter().map(|r| &r.object).collect(),
        None => Vec::new(),
    };
    for rc in &obs.read_clues {
        if !read.contains(&&rc.object) {
            bad.push(rc.object.clone());
        }
    }
    bad
}
