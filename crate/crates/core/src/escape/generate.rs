use std::collections::BTreeMap;

use rand::Rng;

use crate::escape::{GenerateError, GeneratedRoom, LevelConfig, SolveError, SolveOptions, MAX_ATTEMPTS};
use crate::goal::{GoalSpec, Predicate};
use crate::ids::NodeId;
use crate::knowledge::KnowledgeFilter;
use crate::rng::{pick, seeded, shuffled, stream, SimRng};
use crate::scene::*;

const ROOM_NAMES: [&str; 8] = ["Study", "Library", "Cellar", "Attic", "Workshop", "Gallery", "Parlour", "Observatory"];
const BOX_NAMES: [&str; 6] = ["wooden box", "oak chest", "tin box", "small chest", "lacquered box", "iron strongbox"];
const KEY_NAMES: [&str; 6] = ["brass key", "iron key", "silver key", "old key", "small key", "bronze key"];
const NOTE_NAMES: [&str; 6] = ["note", "scrap of paper", "letter", "card", "memo", "torn page"];
const FLAVOR: [&str; 6] = [
    "Remember to water the plants.",
    "Dinner at eight.",
    "The clock runs five minutes fast.",
    "Do not disturb.",
    "Gone fishing, back soon.",
    "Whoever reads this owes me a coffee.",
];

/// Builds a room from temporary ids, then renumbers objects per category in
/// a shuffled order so that an id never reveals an object's role.
struct Builder {
    rng: SimRng,
    rooms: Vec<RoomNode>,
    objects: Vec<ObjectNode>,
    relations: Vec<Relation>,
    tables: Vec<NodeId>,
    next: usize,
}

impl Builder {
    fn tmp(&mut self) -> NodeId {
        self.next += 1;
        NodeId::from(format!("tmp.{}", self.next).as_str())
    }

    fn add(&mut self, mut o: ObjectNode, parent: Relation) -> NodeId {
        let id = self.tmp();
        o.id = id.clone();
        self.objects.push(o);
        self.relations.push(Relation { kind: parent.kind, src: id.clone(), dst: parent.dst });
        id
    }

    /// Loose item: on the room's table or on the floor.
    fn loose(&mut self, room: usize) -> Relation {
        let here = NodeId::from(format!("room_{}", room + 1).as_str());
        if self.rng.gen_bool(0.5) {
            Relation::on_top("tmp", self.tables[room].clone())
        } else {
            Relation::in_room("tmp", here)
        }
    }

    fn floor(&self, room: usize) -> Relation {
        Relation::in_room("tmp", format!("room_{}", room + 1).as_str())
    }

    fn object_mut(&mut self, id: &NodeId) -> &mut ObjectNode {
        self.objects.iter_mut().find(|o| &o.id == id).expect("builder object")
    }

    fn name(&mut self, pool: &[&str]) -> String {
        pick(&mut self.rng, pool).to_string()
    }

    fn boxed(&mut self, room: usize) -> NodeId {
        let name = self.name(&BOX_NAMES);
        let b = ObjectNode::new("tmp", "box", &name, &[Affordance::Container, Affordance::Openable])
            .with_state(StateValue::Closed);
        let at = self.floor(room);
        self.add(b, at)
    }

    fn key(&mut self, at: Relation) -> NodeId {
        let name = self.name(&KEY_NAMES);
        self.add(ObjectNode::new("tmp", "key", &name, &[Affordance::Graspable]), at)
    }

    fn note(&mut self, clue: ClueText, at: Relation) -> NodeId {
        let name = self.name(&NOTE_NAMES);
        self.add(ObjectNode::new("tmp", "note", &name, &[Affordance::Readable]).with_clue(clue), at)
    }

    fn pointer(&self, target: &NodeId, veracity: Veracity) -> ClueText {
        let name = &self.objects.iter().find(|o| &o.id == target).expect("target").display_name;
        ClueText {
            text: format!("What you are looking for rests inside the {name}."),
            referent: Some(target.clone()),
            payload: None,
            veracity,
        }
    }

    fn room_index(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    /// Renumbers temporary ids and rewrites every reference to them.
    fn finish(mut self, agents: Vec<AgentNode>, agent_rels: Vec<Relation>) -> (SceneGraph, BTreeMap<NodeId, NodeId>) {
        let mut by_cat: BTreeMap<String, Vec<NodeId>> = BTreeMap::new();
        for o in &self.objects {
            by_cat.entry(o.category.clone()).or_default().push(o.id.clone());
        }
        let mut map: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        for (cat, ids) in by_cat {
            for (i, tmp) in shuffled(&mut self.rng, &ids).into_iter().enumerate() {
                map.insert(tmp, NodeId::from(format!("{cat}_{}", i + 1).as_str()));
            }
        }
        let ren = |id: &NodeId| map.get(id).cloned().unwrap_or_else(|| id.clone());
        for o in &mut self.objects {
            o.id = ren(&o.id);
            if let Some(l) = &mut o.lock {
                l.key_id = l.key_id.as_ref().map(ren);
            }
            if let Some(c) = &mut o.clue {
                c.referent = c.referent.as_ref().map(ren);
            }
        }
        for r in &mut self.rooms {
            if let Some(a) = &mut r.arrangement {
                a.target = ren(&a.target);
                a.reveals = ren(&a.reveals);
            }
        }
        let rels: Vec<Relation> = self
            .relations
            .iter()
            .chain(&agent_rels)
            .map(|r| Relation { kind: r.kind, src: ren(&r.src), dst: ren(&r.dst) })
            .collect();
        let g = SceneGraph::from_parts(self.rooms, self.objects, agents, rels, 0);
        (g, map)
    }
}

/// Generates a room for `cfg`, re-rolling up to [`MAX_ATTEMPTS`] times.
pub fn generate(cfg: &LevelConfig) -> Result<GeneratedRoom, GenerateError> {
    cfg.check()?;
    let mut last = String::new();
    for attempt in 0..MAX_ATTEMPTS {
        let s = stream::GENERATE + (u64::from(cfg.level) << 16) + u64::from(attempt);
        let rng = seeded(cfg.seed, s);
        match attempt_once(cfg, rng) {
            Ok(room) => return Ok(room),
            Err(e) => {
                tracing::debug!(level = cfg.level, seed = cfg.seed, attempt, "re-rolling: {e}");
                last = e;
            }
        }
    }
    Err(GenerateError::GenerationFailure { attempts: MAX_ATTEMPTS, last })
}

fn attempt_once(cfg: &LevelConfig, rng: SimRng) -> Result<GeneratedRoom, String> {
    let n = cfg.rooms();
    let mut b = Builder { rng, rooms: Vec::new(), objects: Vec::new(), relations: Vec::new(), tables: Vec::new(), next: 0 };

    let names = shuffled(&mut b.rng, &ROOM_NAMES);
    for (i, name) in names.iter().take(n).enumerate() {
        b.rooms.push(RoomNode::new(format!("room_{}", i + 1).as_str(), *name));
    }
    b.rooms.push(RoomNode::new("outside", "Outside"));
    for i in 0..n {
        let t = ObjectNode::new("tmp", "table", "table", &[Affordance::Surface]);
        let at = b.floor(i);
        let id = b.add(t, at);
        b.tables.push(id);
    }
    let mut doors = Vec::new();
    for i in 0..n.saturating_sub(1) {
        let d = ObjectNode::new("tmp", "door", "wooden door", &[Affordance::Openable]).with_state(StateValue::Closed);
        let at = b.floor(i);
        let id = b.add(d, at);
        doors.push((id, i, i + 1));
    }
    let exit_obj = ObjectNode::new("tmp", "door", "exit door", &[Affordance::Openable, Affordance::Lockable])
        .with_state(StateValue::Closed)
        .with_state(StateValue::Locked);
    let at = b.floor(n - 1);
    let exit = b.add(exit_obj, at);
    for (d, a, c) in &doors {
        b.relations.push(Relation::connects(d.clone(), format!("room_{}", a + 1).as_str()));
        b.relations.push(Relation::connects(d.clone(), format!("room_{}", c + 1).as_str()));
    }
    b.relations.push(Relation::connects(exit.clone(), format!("room_{n}").as_str()));
    b.relations.push(Relation::connects(exit.clone(), "outside"));

    let mut fragment_notes: Vec<NodeId> = Vec::new();
    let mut deceptive: Option<NodeId> = None;
    let mut code = String::new();

    match cfg.level {
        1 | 2 | 4 => {
            let c_room = b.room_index(n);
            let c = b.boxed(c_room);
            let key = b.key(Relation::inside("tmp", c.clone()));
            b.object_mut(&exit).lock = Some(LockSpec::key(key));
            let clue = b.pointer(&c, Veracity::Accurate);
            let note_room = if cfg.level == 2 { 0 } else { b.room_index(n) };
            let at = b.loose(note_room);
            let note = b.note(clue, at);
            if cfg.level == 2 {
                b.object_mut(&note).states.set(StateValue::Hidden);
                arrangement(&mut b, note);
            }
            if cfg.level == 4 {
                let d_room = b.room_index(n);
                let d = b.boxed(d_room);
                if b.rng.gen_bool(0.5) {
                    b.key(Relation::inside("tmp", d.clone()));
                }
                let lie = b.pointer(&d, Veracity::Deceptive);
                let r = b.room_index(n);
                let at = b.loose(r);
                deceptive = Some(b.note(lie, at));
            }
        }
        3 => {
            code = (0..cfg.code_length).map(|_| char::from(b'0' + b.rng.gen_range(0..10u8))).collect();
            b.object_mut(&exit).lock = Some(LockSpec::code(code.clone()));
            for room in [0, n - 1] {
                let bx = b.boxed(room);
                let frag = ClueText {
                    text: String::new(),
                    referent: Some(exit.clone()),
                    payload: Some(String::new()),
                    veracity: Veracity::Accurate,
                };
                fragment_notes.push(b.note(frag, Relation::inside("tmp", bx.clone())));
                let hint = b.pointer(&bx, Veracity::Accurate);
                let at = b.loose(room);
                b.note(hint, at);
            }
        }
        _ => unreachable!("level checked"),
    }

    let mut decoy_boxes: Vec<NodeId> = Vec::new();
    for _ in 0..cfg.decoy_objects {
        let room = b.room_index(n);
        match b.rng.gen_range(0..3) {
            0 => {
                let d = b.boxed(room);
                decoy_boxes.push(d);
            }
            1 => {
                let at = if !decoy_boxes.is_empty() && b.rng.gen_bool(0.5) {
                    Relation::inside("tmp", pick(&mut b.rng, &decoy_boxes).clone())
                } else {
                    b.loose(room)
                };
                b.key(at);
            }
            _ => {
                let text = *pick(&mut b.rng, &FLAVOR);
                let at = b.loose(room);
                b.note(ClueText::flavor(text), at);
            }
        }
    }

    let agent = AgentNode::new("agent_1");
    let (mut g, map) = b.finish(vec![agent], vec![Relation::in_room("agent_1", "room_1")]);
    let exit = map[&exit].clone();

    if cfg.level == 3 {
        // Fragments are read in clue-id order, so the lower id carries the first half.
        let mut frags: Vec<NodeId> = fragment_notes.iter().map(|t| map[t].clone()).collect();
        frags.sort();
        let half = code.len() / 2;
        let parts = [(&code[..half], "first"), (&code[half..], "second")];
        for (id, (part, ordinal)) in frags.iter().zip(parts) {
            let clue = g.object_mut(id).and_then(|o| o.clue.as_mut()).expect("fragment note");
            clue.payload = Some(part.to_string());
            clue.text = format!("The {ordinal} part of the exit code is {part}.");
        }
    }

    let v = check_invariants(&g);
    if !v.is_empty() {
        return Err(format!("generated graph violates invariants: {v:?}"));
    }

    let goal = GoalSpec::single(Predicate::DoorOpen { door: exit.clone() }, format!("Open the exit door ({exit})."));
    let certificate = super::solve(&g, &goal, &SolveOptions::default()).map_err(|e| e.to_string())?;

    if let Some(lie) = deceptive {
        let only = KnowledgeFilter::Only([map[&lie].clone()].into());
        let opts = SolveOptions { knowledge: only, ..Default::default() };
        match super::solve(&g, &goal, &opts) {
            Err(SolveError::Unsolvable { .. }) => {}
            Ok(_) => return Err("deceptive clue alone leads to the exit".into()),
            Err(e) => return Err(format!("deception check inconclusive: {e}")),
        }
    }

    Ok(GeneratedRoom { level: cfg.level, seed: cfg.seed, graph: g, goal, certificate })
}

/// Level 2 puzzle: coloured figurines, a pedestal, and a visible note giving
/// the order that reveals `hidden`.
fn arrangement(b: &mut Builder, hidden: NodeId) {
    let ped = ObjectNode::new("tmp", "pedestal", "stone pedestal", &[Affordance::Surface]);
    let at = b.floor(0);
    let pedestal = b.add(ped, at);
    let colours: Vec<Color> = shuffled(&mut b.rng, &Color::ALL).into_iter().take(3).collect();
    for c in &colours {
        let fig = ObjectNode::new("tmp", "figurine", &format!("{} figurine", c.as_str()), &[Affordance::Graspable])
            .with_color(*c);
        let at = b.loose(0);
        b.add(fig, at);
    }
    let order = shuffled(&mut b.rng, &colours);
    let words: Vec<&str> = order.iter().map(|c| c.as_str()).collect();
    let clue = ClueText {
        text: format!("Set the figurines on the pedestal in this order: {}.", words.join(", ")),
        referent: Some(pedestal.clone()),
        payload: Some(words.join(",")),
        veracity: Veracity::Accurate,
    };
    let at = b.loose(0);
    b.note(clue, at);
    b.rooms[0].arrangement = Some(ArrangementSpec { target: pedestal, order, reveals: hidden });
}
