use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::ids::NodeId;
use crate::scene::invariants::{check_invariants, Violation};
use crate::scene::types::*;
use crate::scene::SceneError;

/// Hierarchical world state: rooms, objects, agents, and typed relations.
///
/// Node payloads sit behind `Arc` so that cloning a graph (which the solver
/// does for every search state) copies only the maps, not the strings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SceneGraph {
    rooms: Arc<BTreeMap<NodeId, RoomNode>>,
    objects: BTreeMap<NodeId, Arc<ObjectNode>>,
    agents: BTreeMap<NodeId, Arc<AgentNode>>,
    relations: BTreeSet<Relation>,
    revision: u64,
}

const MAX_DEPTH: usize = 64;

impl SceneGraph {
    pub fn new() -> Self {
        SceneGraph::default()
    }

    /// Assembles a graph without checking invariants. Call
    /// [`check_invariants`] before handing the result to anything that
    /// assumes validity.
    pub fn from_parts(
        rooms: impl IntoIterator<Item = RoomNode>,
        objects: impl IntoIterator<Item = ObjectNode>,
        agents: impl IntoIterator<Item = AgentNode>,
        relations: impl IntoIterator<Item = Relation>,
        revision: u64,
    ) -> Self {
        SceneGraph {
            rooms: Arc::new(rooms.into_iter().map(|r| (r.id.clone(), r)).collect()),
            objects: objects.into_iter().map(|o| (o.id.clone(), Arc::new(o))).collect(),
            agents: agents.into_iter().map(|a| (a.id.clone(), Arc::new(a))).collect(),
            relations: relations.into_iter().collect(),
            revision,
        }
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn room(&self, id: &NodeId) -> Option<&RoomNode> {
        self.rooms.get(id)
    }

    pub fn object(&self, id: &NodeId) -> Option<&ObjectNode> {
        self.objects.get(id).map(|o| &**o)
    }

    pub fn agent(&self, id: &NodeId) -> Option<&AgentNode> {
        self.agents.get(id).map(|a| &**a)
    }

    pub fn rooms(&self) -> impl Iterator<Item = &RoomNode> {
        self.rooms.values()
    }

    pub fn objects(&self) -> impl Iterator<Item = &ObjectNode> {
        self.objects.values().map(|o| &**o)
    }

    pub fn agents(&self) -> impl Iterator<Item = &AgentNode> {
        self.agents.values().map(|a| &**a)
    }

    pub fn agent_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.agents.keys()
    }

    pub fn relations(&self) -> impl Iterator<Item = &Relation> {
        self.relations.iter()
    }

    pub fn has_relation(&self, r: &Relation) -> bool {
        self.relations.contains(r)
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.rooms.contains_key(id) || self.objects.contains_key(id) || self.agents.contains_key(id)
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    /// All relations whose source is `id`.
    pub fn relations_from(&self, id: &NodeId) -> impl Iterator<Item = &Relation> + '_ {
        let id = id.clone();
        let lower = Relation { kind: RelationKind::InRoom, src: id.clone(), dst: NodeId::min_value() };
        self.relations.range(lower..).take_while(move |r| r.src == id)
    }

    /// The location edge of an object or agent (first one, if the graph is
    /// invalid and has several).
    pub fn parent(&self, id: &NodeId) -> Option<&Relation> {
        self.relations_from(id).find(|r| r.kind.is_parent())
    }

    /// Relations pointing at `id` as their location (inside/on_top/held_by/in_room).
    pub fn children<'a>(&'a self, id: &'a NodeId) -> impl Iterator<Item = &'a Relation> + 'a {
        self.relations.iter().filter(move |r| &r.dst == id && r.kind.is_parent())
    }

    pub fn agent_room(&self, agent: &NodeId) -> Option<&NodeId> {
        self.relations_from(agent).find(|r| r.kind == RelationKind::InRoom).map(|r| &r.dst)
    }

    /// Room an object ultimately sits in, following containment and holding.
    pub fn hoisted_room(&self, id: &NodeId) -> Option<NodeId> {
        let mut cur = id.clone();
        for _ in 0..MAX_DEPTH {
            if self.rooms.contains_key(&cur) {
                return Some(cur);
            }
            if self.agents.contains_key(&cur) {
                return self.agent_room(&cur).cloned();
            }
            let parent = self.parent(&cur)?;
            cur = parent.dst.clone();
        }
        None
    }

    /// Rooms joined by a door (empty for non-doors).
    pub fn door_rooms(&self, door: &NodeId) -> Vec<&NodeId> {
        self.relations_from(door).filter(|r| r.kind == RelationKind::Connects).map(|r| &r.dst).collect()
    }

    pub fn is_door(&self, id: &NodeId) -> bool {
        self.relations_from(id).any(|r| r.kind == RelationKind::Connects)
    }

    /// `(door, other room)` pairs for every door touching `room`, ordered by door id.
    pub fn doors_of(&self, room: &NodeId) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for r in self.relations.iter() {
            if r.kind == RelationKind::Connects && &r.dst == room {
                if let Some(other) = self.door_rooms(&r.src).into_iter().find(|d| *d != room) {
                    out.push((r.src.clone(), other.clone()));
                }
            }
        }
        out.sort();
        out
    }

    /// True when `id` is (transitively) inside or on `ancestor`.
    pub fn is_within(&self, id: &NodeId, ancestor: &NodeId) -> bool {
        let mut cur = id.clone();
        for _ in 0..MAX_DEPTH {
            match self.parent(&cur) {
                Some(p) if matches!(p.kind, RelationKind::Inside | RelationKind::OnTop) => {
                    if &p.dst == ancestor {
                        return true;
                    }
                    cur = p.dst.clone();
                }
                _ => return false,
            }
        }
        false
    }

    /// Containers and surfaces enclosing `id`, innermost first.
    pub fn ancestors(&self, id: &NodeId) -> Vec<(RelationKind, NodeId)> {
        let mut out = Vec::new();
        let mut cur = id.clone();
        for _ in 0..MAX_DEPTH {
            match self.parent(&cur) {
                Some(p) if matches!(p.kind, RelationKind::Inside | RelationKind::OnTop) => {
                    out.push((p.kind, p.dst.clone()));
                    cur = p.dst.clone();
                }
                _ => break,
            }
        }
        out
    }

    pub fn lock_holders_of(&self, key: &NodeId) -> Vec<NodeId> {
        self.objects()
            .filter(|o| o.lock.as_ref().and_then(|l| l.key_id.as_ref()) == Some(key))
            .map(|o| o.id.clone())
            .collect()
    }

    pub fn arrangement_for(&self, target: &NodeId) -> Option<(&RoomNode, &ArrangementSpec)> {
        self.rooms.values().find_map(|r| r.arrangement.as_ref().filter(|a| &a.target == target).map(|a| (r, a)))
    }

    // ---- mutation -------------------------------------------------------

    pub(crate) fn object_mut(&mut self, id: &NodeId) -> Option<&mut ObjectNode> {
        self.objects.get_mut(id).map(Arc::make_mut)
    }

    pub(crate) fn agent_mut(&mut self, id: &NodeId) -> Option<&mut AgentNode> {
        self.agents.get_mut(id).map(Arc::make_mut)
    }

    pub(crate) fn insert_relation(&mut self, r: Relation) -> bool {
        self.relations.insert(r)
    }

    /// Replaces the location edge of `id` with `kind(id, dst)`, keeping
    /// `holding` lists in step with `held_by` edges.
    pub(crate) fn set_parent(&mut self, id: &NodeId, kind: RelationKind, dst: NodeId) {
        let old: Vec<Relation> = self.relations_from(id).filter(|r| r.kind.is_parent()).cloned().collect();
        for r in old {
            if r.kind == RelationKind::HeldBy {
                if let Some(agent) = self.agent_mut(&r.dst) {
                    agent.holding.retain(|h| h != id);
                }
            }
            self.relations.remove(&r);
        }
        if kind == RelationKind::HeldBy {
            if let Some(agent) = self.agent_mut(&dst) {
                if !agent.holding.contains(id) {
                    agent.holding.push(id.clone());
                }
            }
        }
        self.relations.insert(Relation { kind, src: id.clone(), dst });
    }

    pub(crate) fn insert_object_raw(&mut self, obj: ObjectNode) {
        self.objects.insert(obj.id.clone(), Arc::new(obj));
    }

    pub(crate) fn insert_room_raw(&mut self, room: RoomNode) {
        Arc::make_mut(&mut self.rooms).insert(room.id.clone(), room);
    }

    pub(crate) fn insert_agent_raw(&mut self, agent: AgentNode) {
        self.agents.insert(agent.id.clone(), Arc::new(agent));
    }

    pub(crate) fn room_mut(&mut self, id: &NodeId) -> Option<&mut RoomNode> {
        Arc::make_mut(&mut self.rooms).get_mut(id)
    }

    pub(crate) fn bump_revision(&mut self) {
        self.revision += 1;
    }

    pub(crate) fn set_revision(&mut self, revision: u64) {
        self.revision = revision;
    }

    /// Graph equality ignoring the revision counter.
    pub fn content_eq(&self, other: &SceneGraph) -> bool {
        self.rooms == other.rooms
            && self.objects == other.objects
            && self.agents == other.agents
            && self.relations == other.relations
    }

    // ---- checked API ----------------------------------------------------

    /// Inserts a node with an optional location edge (`placement.src` must be
    /// the new node). The graph is left untouched on any error.
    pub fn add_node(&mut self, node: Node, placement: Option<Relation>) -> Result<(), SceneError> {
        let id = node.id().clone();
        if self.contains(&id) {
            return Err(SceneError::DuplicateId(id));
        }
        if let Some(p) = &placement {
            if p.src != id {
                return Err(SceneError::InvalidPlacement(format!("placement {p} does not start at {id}")));
            }
            if !self.contains(&p.dst) {
                return Err(SceneError::DanglingReference(format!("{p}: unknown node {}", p.dst)));
            }
        }
        let mut next = self.clone();
        match node {
            Node::Room(r) => next.insert_room_raw(r),
            Node::Object(o) => next.insert_object_raw(o),
            Node::Agent(a) => next.insert_agent_raw(a),
        }
        if let Some(p) = placement {
            if p.kind == RelationKind::HeldBy {
                next.set_parent(&p.src.clone(), p.kind, p.dst);
            } else {
                next.insert_relation(p);
            }
        }
        next.commit_checked(self)
    }

    /// Adds a door object located in `a` that joins rooms `a` and `b`.
    pub fn add_door(&mut self, door: ObjectNode, a: &NodeId, b: &NodeId) -> Result<(), SceneError> {
        let id = door.id.clone();
        if self.contains(&id) {
            return Err(SceneError::DuplicateId(id));
        }
        for room in [a, b] {
            if self.room(room).is_none() {
                return Err(SceneError::DanglingReference(format!("door {id}: unknown room {room}")));
            }
        }
        let mut next = self.clone();
        next.insert_object_raw(door);
        next.insert_relation(Relation::in_room(id.clone(), a.clone()));
        next.insert_relation(Relation::connects(id.clone(), a.clone()));
        next.insert_relation(Relation::connects(id, b.clone()));
        next.commit_checked(self)
    }

    fn commit_checked(mut self, target: &mut SceneGraph) -> Result<(), SceneError> {
        let violations: Vec<Violation> = check_invariants(&self);
        if !violations.is_empty() {
            return Err(SceneError::InvariantViolation(violations));
        }
        self.revision += 1;
        *target = self;
        Ok(())
    }

    /// Removes a node and every incident relation. Objects that sat inside or
    /// on the removed node are hoisted to its room; references to it from
    /// locks, clues, and arrangement specs are cleared.
    pub fn remove_node(&mut self, id: &NodeId) -> Result<(), SceneError> {
        if self.room(id).is_some() {
            if self.agents.keys().any(|a| self.agent_room(a) == Some(id)) {
                return Err(SceneError::RoomOccupied(id.clone()));
            }
            let doomed: Vec<NodeId> = self
                .objects
                .keys()
                .filter(|o| self.hoisted_room(o).as_ref() == Some(id) || self.door_rooms(o).contains(&id))
                .cloned()
                .collect();
            for o in doomed {
                self.detach(&o);
                self.objects.remove(&o);
                self.clear_references(&o);
            }
            self.detach(id);
            Arc::make_mut(&mut self.rooms).remove(id);
        } else if self.agents.contains_key(id) {
            let room = self.agent_room(id).cloned();
            let held: Vec<NodeId> = self.agent(id).map(|a| a.holding.clone()).unwrap_or_default();
            if let Some(room) = room {
                for h in held {
                    self.set_parent(&h, RelationKind::InRoom, room.clone());
                }
            }
            self.detach(id);
            self.agents.remove(id);
        } else if self.objects.contains_key(id) {
            let room = self.hoisted_room(id);
            let kids: Vec<NodeId> = self.children(id).map(|r| r.src.clone()).collect();
            for k in kids {
                match &room {
                    Some(room) => self.set_parent(&k, RelationKind::InRoom, room.clone()),
                    None => self.detach(&k),
                }
            }
            if let Some(p) = self.parent(id).cloned() {
                if p.kind == RelationKind::HeldBy {
                    if let Some(agent) = self.agent_mut(&p.dst) {
                        agent.holding.retain(|h| h != id);
                    }
                }
            }
            self.detach(id);
            self.objects.remove(id);
        } else {
            return Err(SceneError::UnknownId(id.clone()));
        }
        self.clear_references(id);
        self.revision += 1;
        Ok(())
    }

    /// Gives object `old` the payload `obj` under the id `obj.id`, carrying
    /// over every relation and reference that named `old`. Unchecked.
    pub(crate) fn replace_object(&mut self, old: &NodeId, obj: ObjectNode) {
        let new = obj.id.clone();
        self.objects.remove(old);
        self.objects.insert(new.clone(), Arc::new(obj));
        if &new == old {
            return;
        }
        let ren = |id: &NodeId| if id == old { new.clone() } else { id.clone() };
        self.relations = self.relations.iter().map(|r| Relation { kind: r.kind, src: ren(&r.src), dst: ren(&r.dst) }).collect();
        for o in self.objects.values_mut() {
            let touches = o.lock.as_ref().and_then(|l| l.key_id.as_ref()) == Some(old)
                || o.clue.as_ref().and_then(|c| c.referent.as_ref()) == Some(old);
            if touches {
                let o = Arc::make_mut(o);
                if let Some(k) = o.lock.as_mut().and_then(|l| l.key_id.as_mut()) {
                    *k = ren(k);
                }
                if let Some(r) = o.clue.as_mut().and_then(|c| c.referent.as_mut()) {
                    *r = ren(r);
                }
            }
        }
        for a in self.agents.values_mut() {
            if a.holding.contains(old) || a.read_clues.iter().any(|rc| &rc.object == old) {
                let a = Arc::make_mut(a);
                for h in a.holding.iter_mut() {
                    *h = ren(h);
                }
                for rc in a.read_clues.iter_mut() {
                    rc.object = ren(&rc.object);
                }
            }
        }
        if self.rooms.values().any(|r| r.arrangement.as_ref().is_some_and(|a| &a.target == old || &a.reveals == old)) {
            for r in Arc::make_mut(&mut self.rooms).values_mut() {
                if let Some(a) = r.arrangement.as_mut() {
                    a.target = ren(&a.target);
                    a.reveals = ren(&a.reveals);
                }
            }
        }
    }

    fn detach(&mut self, id: &NodeId) {
        self.relations.retain(|r| &r.src != id && &r.dst != id);
    }

    fn clear_references(&mut self, id: &NodeId) {
        let lockers: Vec<NodeId> = self.lock_holders_of(id);
        for l in lockers {
            if let Some(lock) = self.object_mut(&l).and_then(|o| o.lock.as_mut()) {
                lock.key_id = None;
            }
        }
        let clued: Vec<NodeId> = self
            .objects()
            .filter(|o| o.clue.as_ref().and_then(|c| c.referent.as_ref()) == Some(id))
            .map(|o| o.id.clone())
            .collect();
        for c in clued {
            if let Some(clue) = self.object_mut(&c).and_then(|o| o.clue.as_mut()) {
                clue.referent = None;
            }
        }
        let rooms: Vec<NodeId> = self
            .rooms
            .values()
            .filter(|r| r.arrangement.as_ref().is_some_and(|a| &a.target == id || &a.reveals == id))
            .map(|r| r.id.clone())
            .collect();
        for r in rooms {
            if let Some(room) = self.room_mut(&r) {
                room.arrangement = None;
            }
        }
        for agent in self.agents.values_mut() {
            if agent.read_clues.iter().any(|rc| rc.clue.referent.as_ref() == Some(id)) {
                let agent = Arc::make_mut(agent);
                for rc in agent.read_clues.iter_mut() {
                    if rc.clue.referent.as_ref() == Some(id) {
                        rc.clue.referent = None;
                    }
                }
            }
        }
    }
}
