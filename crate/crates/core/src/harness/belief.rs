//! What an agent has seen, folded into a scene graph it can plan over.

use std::collections::{BTreeMap, BTreeSet};

use sha2::{Digest, Sha256};

use crate::action::code_candidates;
use crate::harness::{DoorBelief, PolicyMemory};
use crate::ids::NodeId;
use crate::scene::{
    to_json, Affordance, AgentNode, ClueText, LockMechanism, LockSpec, LockView, ObjectNode, Observation, ReadClue,
    Relation, RelationKind, RoomNode, SceneGraph, StateValue, Veracity,
};

const MAX_CHAIN: usize = 32;

/// Stand-in code for a lock whose code the agent cannot yet guess.
const UNKNOWN_CODE: &str = "?";

impl PolicyMemory {
    /// Folds an observation into memory: visit counts, object and door
    /// beliefs, first looks inside containers, and clue discrediting.
    pub fn note(&mut self, obs: &Observation) {
        let here = &obs.room_id;
        if self.room.as_ref() != Some(here) {
            *self.visits.entry(here.clone()).or_default() += 1;
            self.room = Some(here.clone());
        }
        self.rooms.insert(here.clone(), obs.room_name.clone());

        // Anything that should be in plain sight here but is not has moved.
        let stale: Vec<NodeId> = self
            .beliefs
            .keys()
            .filter(|id| !obs.sees(id) && self.visible_from(id, here, obs.agent_id.as_ref()))
            .cloned()
            .collect();
        for id in stale {
            self.beliefs.remove(&id);
        }
        for vo in &obs.visible_objects {
            self.beliefs.insert(vo.id.clone(), vo.clone());
        }
        for dv in &obs.doors {
            self.rooms.entry(dv.destination.clone()).or_default();
            let seen_from = self.doors.get(&dv.door).map_or_else(|| here.clone(), |d| d.seen_from.clone());
            let mut rooms = [here.clone(), dv.destination.clone()];
            rooms.sort();
            self.doors.insert(dv.door.clone(), DoorBelief { seen_from, rooms, view: dv.clone() });
        }
        for vo in &obs.visible_objects {
            if vo.affordances.has(Affordance::Container)
                && !vo.states.is(StateValue::Closed)
                && !self.inspected.contains_key(&vo.id)
            {
                let inside = obs
                    .visible_objects
                    .iter()
                    .filter(|c| c.location.kind == RelationKind::Inside && c.location.dst == vo.id)
                    .map(|c| c.id.clone())
                    .collect();
                self.inspected.insert(vo.id.clone(), inside);
            }
        }
        self.discredit(obs);
    }

    /// A pointer clue is discredited once its container has been looked into
    /// and held nothing useful: no note and no key for a known lock.
    fn discredit(&mut self, obs: &Observation) {
        let locks: Vec<&LockView> = self
            .beliefs
            .values()
            .filter_map(|o| o.lock.as_ref())
            .chain(self.doors.values().filter_map(|d| d.view.lock.as_ref()))
            .collect();
        let keys: BTreeSet<&NodeId> = locks.iter().filter_map(|l| l.key_id.as_ref()).collect();
        let key_lock_known = locks.iter().any(|l| l.mechanism == LockMechanism::Key);
        let mut liars = Vec::new();
        for rc in &obs.read_clues {
            let (Some(c), None) = (&rc.referent, &rc.payload) else { continue };
            let Some(contents) = self.inspected.get(c) else { continue };
            let useful = contents.iter().any(|x| {
                keys.contains(x) || self.beliefs.get(x).is_some_and(|o| o.affordances.has(Affordance::Readable))
            });
            if !useful && (contents.is_empty() || key_lock_known) {
                liars.push(rc.object.clone());
            }
        }
        self.discredited.extend(liars);
    }

    /// Whether `id`, by current belief, sits unenclosed in `room`.
    fn visible_from(&self, id: &NodeId, room: &NodeId, me: Option<&NodeId>) -> bool {
        let mut cur = id;
        for _ in 0..MAX_CHAIN {
            let Some(o) = self.beliefs.get(cur) else { return false };
            let loc = &o.location;
            match loc.kind {
                RelationKind::InRoom => return &loc.dst == room,
                RelationKind::HeldBy => return Some(&loc.dst) == me,
                RelationKind::Inside => {
                    if self.beliefs.get(&loc.dst).is_none_or(|p| p.states.is(StateValue::Closed)) {
                        return false;
                    }
                }
                RelationKind::OnTop => {}
                RelationKind::Connects => return false,
            }
            cur = &loc.dst;
        }
        false
    }

    /// The parent chain of `id` ends in a known room or in the agent's hands.
    fn anchored(&self, id: &NodeId, me: &NodeId) -> bool {
        let mut cur = id;
        for _ in 0..MAX_CHAIN {
            let Some(o) = self.beliefs.get(cur) else { return false };
            let loc = &o.location;
            match loc.kind {
                RelationKind::InRoom => return self.rooms.contains_key(&loc.dst),
                RelationKind::HeldBy => return &loc.dst == me,
                RelationKind::Connects => return false,
                _ => cur = &loc.dst,
            }
        }
        false
    }
}

/// The agent's believed world as a scene graph containing only itself.
/// Clue veracity is unknown to the agent, so read clues count as accurate
/// unless discredited. A code lock carries the agent's best untried guess.
pub fn belief_graph(memory: &PolicyMemory, obs: &Observation, capacity: usize) -> SceneGraph {
    let me = obs.agent_id.clone().unwrap_or_else(|| NodeId::from("observer"));
    let read: Vec<ReadClue> = obs
        .read_clues
        .iter()
        .map(|c| ReadClue {
            object: c.object.clone(),
            clue: ClueText {
                text: c.text.clone(),
                referent: c.referent.clone(),
                payload: c.payload.clone(),
                veracity: if memory.discredited.contains(&c.object) { Veracity::Deceptive } else { Veracity::Accurate },
            },
        })
        .collect();
    let clue_of: BTreeMap<&NodeId, &ClueText> = read.iter().map(|rc| (&rc.object, &rc.clue)).collect();
    let lock_of = |id: &NodeId, view: &Option<LockView>| -> Option<LockSpec> {
        let view = view.as_ref()?;
        Some(match view.mechanism {
            LockMechanism::Key => LockSpec { mechanism: LockMechanism::Key, key_id: view.key_id.clone(), code: None },
            LockMechanism::Code => {
                let tried = memory.rejected_codes.get(id);
                let guess = code_candidates(&read, id).into_iter().find(|c| tried.is_none_or(|t| !t.contains(c)));
                LockSpec::code(guess.unwrap_or_else(|| UNKNOWN_CODE.to_string()))
            }
        })
    };

    let mut rooms = memory.rooms.clone();
    rooms.entry(obs.room_id.clone()).or_insert_with(|| obs.room_name.clone());
    let room_nodes: Vec<RoomNode> = rooms
        .iter()
        .map(|(id, name)| RoomNode::new(id.clone(), if name.is_empty() { id.as_str() } else { name.as_str() }))
        .collect();

    let mut objects = Vec::new();
    let mut relations = Vec::new();
    for (id, vo) in &memory.beliefs {
        if !memory.anchored(id, &me) {
            continue;
        }
        objects.push(ObjectNode {
            id: id.clone(),
            category: vo.category.clone(),
            display_name: vo.name.clone(),
            affordances: vo.affordances,
            states: vo.states,
            clue: clue_of.get(id).map(|c| (*c).clone()),
            lock: lock_of(id, &vo.lock),
            color: vo.color,
        });
        relations.push(vo.location.clone());
    }
    for (id, d) in &memory.doors {
        let v = &d.view;
        objects.push(ObjectNode {
            id: id.clone(),
            category: "door".into(),
            display_name: v.name.clone(),
            affordances: v.affordances,
            states: v.states,
            clue: None,
            lock: lock_of(id, &v.lock),
            color: None,
        });
        relations.push(Relation::in_room(id.clone(), d.seen_from.clone()));
        for room in &d.rooms {
            relations.push(Relation::connects(id.clone(), room.clone()));
        }
    }
    let mut agent = AgentNode::new(me.clone());
    agent.capacity = capacity;
    agent.holding = obs.held.iter().filter(|h| memory.beliefs.contains_key(*h)).cloned().collect();
    agent.read_clues = read;
    relations.push(Relation::in_room(me, obs.room_id.clone()));
    SceneGraph::from_parts(room_nodes, objects, [agent], relations, 0)
}

/// Short content hash of a graph, used to notice belief changes.
pub(crate) fn fingerprint(g: &SceneGraph) -> String {
    let digest = Sha256::digest(to_json(g).as_bytes());
    digest[..12].iter().map(|b| format!("{b:02x}")).collect()
}
