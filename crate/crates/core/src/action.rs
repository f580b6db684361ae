//! High-level actions: validation, effects, legal-move enumeration, and
//! sequential multi-agent stepping.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::NodeId;
use crate::scene::observe::ObservedClue;
use crate::scene::{perceive, Affordance, LockMechanism, Perception, ReadClue, RelationKind, SceneGraph, StateValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaceRelation {
    Inside,
    OnTop,
}

impl PlaceRelation {
    pub fn kind(self) -> RelationKind {
        match self {
            PlaceRelation::Inside => RelationKind::Inside,
            PlaceRelation::OnTop => RelationKind::OnTop,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UnlockWith {
    Key(NodeId),
    Code(String),
}

/// A high-level agent command. Ids are only checked for syntax here;
/// existence is a validation concern, so commands naming phantom objects
/// stay representable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "WireAction", into = "WireAction")]
pub enum Action {
    GoTo { room: NodeId },
    Open { object: NodeId },
    Close { object: NodeId },
    PickUp { object: NodeId },
    Place { object: NodeId, relation: PlaceRelation, target: NodeId },
    Unlock { object: NodeId, with: UnlockWith },
    /// Snap lock: a closed lockable object with a lock fitted locks without a key.
    Lock { object: NodeId },
    Read { object: NodeId },
    Toggle { object: NodeId },
    Arrange { objects: Vec<NodeId>, target: NodeId },
    /// Does nothing. Never offered by [`legal_actions`].
    Wait,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum WireAction {
    GoTo {
        room: NodeId,
    },
    Open {
        object: NodeId,
    },
    Close {
        object: NodeId,
    },
    PickUp {
        object: NodeId,
    },
    Place {
        object: NodeId,
        relation: PlaceRelation,
        target: NodeId,
    },
    Unlock {
        object: NodeId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        key: Option<NodeId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        code: Option<String>,
    },
    Lock {
        object: NodeId,
    },
    Read {
        object: NodeId,
    },
    Toggle {
        object: NodeId,
    },
    Arrange {
        objects: Vec<NodeId>,
        target: NodeId,
    },
    Wait,
}

impl TryFrom<WireAction> for Action {
    type Error = String;

    fn try_from(w: WireAction) -> Result<Self, String> {
        Ok(match w {
            WireAction::GoTo { room } => Action::GoTo { room },
            WireAction::Open { object } => Action::Open { object },
            WireAction::Close { object } => Action::Close { object },
            WireAction::PickUp { object } => Action::PickUp { object },
            WireAction::Place { object, relation, target } => Action::Place { object, relation, target },
            WireAction::Unlock { object, key, code } => match (key, code) {
                (Some(k), None) => Action::Unlock { object, with: UnlockWith::Key(k) },
                (None, Some(c)) => Action::Unlock { object, with: UnlockWith::Code(c) },
                _ => return Err("unlock needs exactly one of `key` or `code`".into()),
            },
            WireAction::Lock { object } => Action::Lock { object },
            WireAction::Read { object } => Action::Read { object },
            WireAction::Toggle { object } => Action::Toggle { object },
            WireAction::Arrange { objects, target } => Action::Arrange { objects, target },
            WireAction::Wait => Action::Wait,
        })
    }
}

impl From<Action> for WireAction {
    fn from(a: Action) -> Self {
        match a {
            Action::GoTo { room } => WireAction::GoTo { room },
            Action::Open { object } => WireAction::Open { object },
            Action::Close { object } => WireAction::Close { object },
            Action::PickUp { object } => WireAction::PickUp { object },
            Action::Place { object, relation, target } => WireAction::Place { object, relation, target },
            Action::Unlock { object, with: UnlockWith::Key(k) } => WireAction::Unlock { object, key: Some(k), code: None },
            Action::Unlock { object, with: UnlockWith::Code(c) } => WireAction::Unlock { object, key: None, code: Some(c) },
            Action::Lock { object } => WireAction::Lock { object },
            Action::Read { object } => WireAction::Read { object },
            Action::Toggle { object } => WireAction::Toggle { object },
            Action::Arrange { objects, target } => WireAction::Arrange { objects, target },
            Action::Wait => WireAction::Wait,
        }
    }
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::GoTo { .. } => "go_to",
            Action::Open { .. } => "open",
            Action::Close { .. } => "close",
            Action::PickUp { .. } => "pick_up",
            Action::Place { .. } => "place",
            Action::Unlock { .. } => "unlock",
            Action::Lock { .. } => "lock",
            Action::Read { .. } => "read",
            Action::Toggle { .. } => "toggle",
            Action::Arrange { .. } => "arrange",
            Action::Wait => "wait",
        }
    }

    /// Every object id the action touches (keys included, rooms excluded).
    pub fn objects(&self) -> Vec<&NodeId> {
        match self {
            Action::GoTo { .. } | Action::Wait => vec![],
            Action::Open { object }
            | Action::Close { object }
            | Action::PickUp { object }
            | Action::Lock { object }
            | Action::Read { object }
            | Action::Toggle { object } => vec![object],
            Action::Place { object, target, .. } => vec![object, target],
            Action::Unlock { object, with: UnlockWith::Key(k) } => vec![object, k],
            Action::Unlock { object, .. } => vec![object],
            Action::Arrange { objects, target } => objects.iter().chain(std::iter::once(target)).collect(),
        }
    }

    /// The object the action is primarily about.
    pub fn primary_object(&self) -> Option<&NodeId> {
        match self {
            Action::GoTo { .. } | Action::Wait => None,
            Action::Arrange { target, .. } => Some(target),
            _ => self.objects().into_iter().next(),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::GoTo { room } => write!(f, "go_to({room})"),
            Action::Place { object, relation, target } => {
                write!(f, "place({object}, {}, {target})", relation.kind().as_str())
            }
            Action::Unlock { object, with: UnlockWith::Key(k) } => write!(f, "unlock({object}, key={k})"),
            Action::Unlock { object, with: UnlockWith::Code(c) } => write!(f, "unlock({object}, code={c})"),
            Action::Arrange { objects, target } => {
                let ids: Vec<&str> = objects.iter().map(|o| o.as_str()).collect();
                write!(f, "arrange([{}], {target})", ids.join(", "))
            }
            Action::Wait => f.write_str("wait"),
            other => write!(f, "{}({})", other.name(), other.primary_object().map(|o| o.as_str()).unwrap_or("")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    UnknownObject,
    WrongRoom,
    Locked,
    ClosedContainer,
    NotHeld,
    HandsFull,
    NotAffordant,
    WrongKey,
    WrongCode,
    InvalidTarget,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::UnknownObject => "unknown_object",
            ErrorCode::WrongRoom => "wrong_room",
            ErrorCode::Locked => "locked",
            ErrorCode::ClosedContainer => "closed_container",
            ErrorCode::NotHeld => "not_held",
            ErrorCode::HandsFull => "hands_full",
            ErrorCode::NotAffordant => "not_affordant",
            ErrorCode::WrongKey => "wrong_key",
            ErrorCode::WrongCode => "wrong_code",
            ErrorCode::InvalidTarget => "invalid_target",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreconditionError {
    pub code: ErrorCode,
    pub detail: String,
}

impl fmt::Display for PreconditionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code.as_str(), self.detail)
    }
}

fn reject(code: ErrorCode, detail: impl Into<String>) -> PreconditionError {
    PreconditionError { code, detail: detail.into() }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Moved { agent: NodeId, room: NodeId },
    Opened { object: NodeId },
    Closed { object: NodeId },
    PickedUp { object: NodeId },
    Placed { object: NodeId, relation: PlaceRelation, target: NodeId },
    Unlocked { object: NodeId },
    Locked { object: NodeId },
    ClueRead { clue: ObservedClue },
    Toggled { object: NodeId, state: StateValue },
    Arranged { target: NodeId, matched: bool },
    Revealed { object: NodeId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<PreconditionError>,
    pub events: Vec<Event>,
}

impl Outcome {
    pub fn ok(events: Vec<Event>) -> Self {
        Outcome { status: Status::Ok, reason: None, events }
    }

    pub fn rejected(reason: PreconditionError) -> Self {
        Outcome { status: Status::Rejected, reason: Some(reason), events: Vec::new() }
    }

    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }

    pub fn code(&self) -> Option<ErrorCode> {
        self.reason.as_ref().map(|r| r.code)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionError {
    #[error("unknown agent {0}")]
    UnknownAgent(NodeId),
    #[error("agent {0} appears more than once in one step")]
    DuplicateAgent(NodeId),
}

pub type Verdict = Result<(), PreconditionError>;

struct Actor<'g> {
    id: &'g NodeId,
    room: &'g NodeId,
    holding: &'g [NodeId],
    capacity: usize,
    read: &'g [ReadClue],
    /// Objects already known to be reachable this state (enumeration fast path).
    reachable: Option<&'g HashSet<&'g NodeId>>,
}

fn actor<'g>(g: &'g SceneGraph, agent: &'g NodeId) -> Result<Actor<'g>, ActionError> {
    let a = g.agent(agent).ok_or_else(|| ActionError::UnknownAgent(agent.clone()))?;
    let room = g.agent_room(agent).ok_or_else(|| ActionError::UnknownAgent(agent.clone()))?;
    Ok(Actor { id: &a.id, room, holding: &a.holding, capacity: a.capacity, read: &a.read_clues, reachable: None })
}

/// Checks preconditions without touching the graph.
pub fn validate(g: &SceneGraph, agent: &NodeId, action: &Action) -> Result<Verdict, ActionError> {
    let who = actor(g, agent)?;
    Ok(check(g, &who, action))
}

/// Applies `action` for `agent`. Rejected actions return the graph unchanged
/// (same revision). The revision advances only when the world changes.
pub fn apply(g: &SceneGraph, agent: &NodeId, action: &Action) -> Result<(SceneGraph, Outcome), ActionError> {
    let mut next = g.clone();
    let outcome = apply_in_place(&mut next, agent, action)?;
    Ok((next, outcome))
}

/// In-place form of [`apply`].
pub fn apply_in_place(g: &mut SceneGraph, agent: &NodeId, action: &Action) -> Result<Outcome, ActionError> {
    let who = actor(g, agent)?;
    if let Err(e) = check(g, &who, action) {
        return Ok(Outcome::rejected(e));
    }
    let agent = agent.clone();
    let (events, changed) = execute(g, &agent, action);
    if changed {
        g.bump_revision();
    }
    Ok(Outcome::ok(events))
}

/// Applies moves in list order against the evolving graph.
pub fn step_multi(g: &SceneGraph, moves: &[(NodeId, Action)]) -> Result<(SceneGraph, Vec<Outcome>), ActionError> {
    let mut seen = BTreeSet::new();
    for (a, _) in moves {
        if !seen.insert(a) {
            return Err(ActionError::DuplicateAgent(a.clone()));
        }
        if g.agent(a).is_none() {
            return Err(ActionError::UnknownAgent(a.clone()));
        }
    }
    let mut next = g.clone();
    let mut outcomes = Vec::with_capacity(moves.len());
    for (a, act) in moves {
        outcomes.push(apply_in_place(&mut next, a, act)?);
    }
    Ok((next, outcomes))
}

/// Resolves whether the actor can reach `id` at all.
fn reach<'g>(g: &'g SceneGraph, who: &Actor<'_>, id: &NodeId) -> Result<&'g crate::scene::ObjectNode, PreconditionError> {
    let Some(obj) = g.object(id) else {
        return Err(reject(ErrorCode::UnknownObject, format!("{id} does not exist")));
    };
    if who.reachable.is_some_and(|r| r.contains(id)) {
        return Ok(obj);
    }
    if g.is_door(id) {
        return if g.door_rooms(id).contains(&who.room) {
            Ok(obj)
        } else {
            Err(reject(ErrorCode::WrongRoom, format!("door {id} is not in {}", who.room)))
        };
    }
    match perceive(g, who.room, id) {
        Perception::Visible => Ok(obj),
        Perception::Elsewhere => Err(reject(ErrorCode::WrongRoom, format!("{id} is not in {}", who.room))),
        Perception::Hidden => Err(reject(ErrorCode::UnknownObject, format!("no visible object {id}"))),
        Perception::Enclosed(c) => Err(reject(ErrorCode::ClosedContainer, format!("{id} is inside closed {c}"))),
    }
}

fn needs(obj: &crate::scene::ObjectNode, a: Affordance) -> Verdict {
    if obj.has(a) {
        Ok(())
    } else {
        Err(reject(ErrorCode::NotAffordant, format!("{} is not {:?}", obj.id, a).to_lowercase()))
    }
}

fn held_by_other(g: &SceneGraph, who: &Actor<'_>, id: &NodeId) -> Option<NodeId> {
    g.parent(id).filter(|p| p.kind == RelationKind::HeldBy && &p.dst != who.id).map(|p| p.dst.clone())
}

fn check(g: &SceneGraph, who: &Actor<'_>, action: &Action) -> Verdict {
    match action {
        Action::Wait => Ok(()),
        Action::GoTo { room } => {
            if g.room(room).is_none() {
                return Err(reject(ErrorCode::UnknownObject, format!("room {room} does not exist")));
            }
            if room == who.room {
                return Err(reject(ErrorCode::InvalidTarget, format!("already in {room}")));
            }
            let doors: Vec<NodeId> =
                g.doors_of(who.room).into_iter().filter(|(_, other)| other == room).map(|(d, _)| d).collect();
            let Some(first) = doors.first() else {
                return Err(reject(ErrorCode::InvalidTarget, format!("{room} is not adjacent to {}", who.room)));
            };
            let passable = |d: &NodeId| g.object(d).is_some_and(|o| o.is_open() && !o.is_locked());
            if doors.iter().any(passable) {
                return Ok(());
            }
            let d = g.object(first).expect("door exists");
            if d.is_locked() {
                Err(reject(ErrorCode::Locked, format!("door {first} is locked")))
            } else {
                Err(reject(ErrorCode::ClosedContainer, format!("door {first} is closed")))
            }
        }
        Action::Open { object } => {
            let o = reach(g, who, object)?;
            needs(o, Affordance::Openable)?;
            if o.is_locked() {
                return Err(reject(ErrorCode::Locked, format!("{object} is locked")));
            }
            if o.states.is(StateValue::Open) {
                return Err(reject(ErrorCode::InvalidTarget, format!("{object} is already open")));
            }
            Ok(())
        }
        Action::Close { object } => {
            let o = reach(g, who, object)?;
            needs(o, Affordance::Openable)?;
            if o.states.is(StateValue::Closed) {
                return Err(reject(ErrorCode::InvalidTarget, format!("{object} is already closed")));
            }
            Ok(())
        }
        Action::PickUp { object } => {
            let o = reach(g, who, object)?;
            needs(o, Affordance::Graspable)?;
            if who.holding.contains(object) {
                return Err(reject(ErrorCode::InvalidTarget, format!("already holding {object}")));
            }
            if let Some(other) = held_by_other(g, who, object) {
                return Err(reject(ErrorCode::InvalidTarget, format!("{object} is held by {other}")));
            }
            if who.holding.len() >= who.capacity {
                return Err(reject(ErrorCode::HandsFull, format!("{} cannot carry more", who.id)));
            }
            Ok(())
        }
        Action::Place { object, relation, target } => {
            if g.object(object).is_none() {
                return Err(reject(ErrorCode::UnknownObject, format!("{object} does not exist")));
            }
            if !who.holding.contains(object) {
                return Err(reject(ErrorCode::NotHeld, format!("{} is not holding {object}", who.id)));
            }
            let t = reach(g, who, target)?;
            if target == object || g.is_within(target, object) {
                return Err(reject(ErrorCode::InvalidTarget, format!("cannot place {object} in or on itself")));
            }
            if g.is_door(target) {
                return Err(reject(ErrorCode::NotAffordant, format!("{target} is a door")));
            }
            match relation {
                PlaceRelation::Inside => {
                    needs(t, Affordance::Container)?;
                    if !t.is_open() {
                        return Err(reject(ErrorCode::ClosedContainer, format!("{target} is closed")));
                    }
                }
                PlaceRelation::OnTop => needs(t, Affordance::Surface)?,
            }
            Ok(())
        }
        Action::Unlock { object, with } => {
            let o = reach(g, who, object)?;
            needs(o, Affordance::Lockable)?;
            let Some(lock) = &o.lock else {
                return Err(reject(ErrorCode::NotAffordant, format!("{object} has no lock fitted")));
            };
            if !o.is_locked() {
                return Err(reject(ErrorCode::InvalidTarget, format!("{object} is not locked")));
            }
            match (with, lock.mechanism) {
                (UnlockWith::Key(_), LockMechanism::Code) => {
                    Err(reject(ErrorCode::WrongCode, format!("{object} takes a code, not a key")))
                }
                (UnlockWith::Code(_), LockMechanism::Key) => {
                    Err(reject(ErrorCode::WrongKey, format!("{object} takes a key, not a code")))
                }
                (UnlockWith::Key(k), LockMechanism::Key) => {
                    if g.object(k).is_none() {
                        return Err(reject(ErrorCode::UnknownObject, format!("{k} does not exist")));
                    }
                    if !who.holding.contains(k) {
                        return Err(reject(ErrorCode::NotHeld, format!("{} is not holding {k}", who.id)));
                    }
                    if lock.key_id.as_ref() != Some(k) {
                        return Err(reject(ErrorCode::WrongKey, format!("{k} does not fit {object}")));
                    }
                    Ok(())
                }
                (UnlockWith::Code(c), LockMechanism::Code) => {
                    if lock.code.as_deref() != Some(c.as_str()) {
                        return Err(reject(ErrorCode::WrongCode, format!("code {c} does not open {object}")));
                    }
                    Ok(())
                }
            }
        }
        Action::Lock { object } => {
            let o = reach(g, who, object)?;
            needs(o, Affordance::Lockable)?;
            if o.lock.is_none() {
                return Err(reject(ErrorCode::NotAffordant, format!("{object} has no lock fitted")));
            }
            if o.is_locked() {
                return Err(reject(ErrorCode::InvalidTarget, format!("{object} is already locked")));
            }
            if o.states.is(StateValue::Open) {
                return Err(reject(ErrorCode::InvalidTarget, format!("{object} must be closed first")));
            }
            Ok(())
        }
        Action::Read { object } => {
            let o = reach(g, who, object)?;
            needs(o, Affordance::Readable)?;
            if o.clue.is_none() {
                return Err(reject(ErrorCode::NotAffordant, format!("{object} has nothing written on it")));
            }
            Ok(())
        }
        Action::Toggle { object } => {
            let o = reach(g, who, object)?;
            needs(o, Affordance::Toggleable)
        }
        Action::Arrange { objects, target } => {
            let t = reach(g, who, target)?;
            needs(t, Affordance::Surface)?;
            let Some((_, spec)) = g.arrangement_for(target) else {
                return Err(reject(ErrorCode::InvalidTarget, format!("{target} holds no arrangement puzzle")));
            };
            if objects.len() != spec.order.len() {
                return Err(reject(
                    ErrorCode::InvalidTarget,
                    format!("{target} takes {} objects, got {}", spec.order.len(), objects.len()),
                ));
            }
            let distinct: BTreeSet<&NodeId> = objects.iter().collect();
            if distinct.len() != objects.len() {
                return Err(reject(ErrorCode::InvalidTarget, "an object is listed twice"));
            }
            for id in objects {
                let o = reach(g, who, id)?;
                needs(o, Affordance::Graspable)?;
                if o.color.is_none() {
                    return Err(reject(ErrorCode::NotAffordant, format!("{id} has no colour")));
                }
                if let Some(other) = held_by_other(g, who, id) {
                    return Err(reject(ErrorCode::InvalidTarget, format!("{id} is held by {other}")));
                }
                if id == target || g.is_within(target, id) {
                    return Err(reject(ErrorCode::InvalidTarget, format!("cannot arrange {id} on itself")));
                }
            }
            Ok(())
        }
    }
}

fn set_state(g: &mut SceneGraph, id: &NodeId, v: StateValue) -> bool {
    let o = g.object(id).expect("validated object");
    if o.states.is(v) {
        return false;
    }
    g.object_mut(id).expect("validated object").states.set(v);
    true
}

/// Performs a validated action. Returns the events and whether anything changed.
fn execute(g: &mut SceneGraph, agent: &NodeId, action: &Action) -> (Vec<Event>, bool) {
    match action {
        Action::Wait => (vec![], false),
        Action::GoTo { room } => {
            g.set_parent(agent, RelationKind::InRoom, room.clone());
            (vec![Event::Moved { agent: agent.clone(), room: room.clone() }], true)
        }
        Action::Open { object } => {
            set_state(g, object, StateValue::Open);
            (vec![Event::Opened { object: object.clone() }], true)
        }
        Action::Close { object } => {
            set_state(g, object, StateValue::Closed);
            (vec![Event::Closed { object: object.clone() }], true)
        }
        Action::PickUp { object } => {
            g.set_parent(object, RelationKind::HeldBy, agent.clone());
            (vec![Event::PickedUp { object: object.clone() }], true)
        }
        Action::Place { object, relation, target } => {
            g.set_parent(object, relation.kind(), target.clone());
            (vec![Event::Placed { object: object.clone(), relation: *relation, target: target.clone() }], true)
        }
        Action::Unlock { object, .. } => {
            set_state(g, object, StateValue::Unlocked);
            (vec![Event::Unlocked { object: object.clone() }], true)
        }
        Action::Lock { object } => {
            set_state(g, object, StateValue::Locked);
            (vec![Event::Locked { object: object.clone() }], true)
        }
        Action::Read { object } => {
            let clue = g.object(object).and_then(|o| o.clue.clone()).expect("validated clue");
            let seen = ObservedClue {
                object: object.clone(),
                text: clue.text.clone(),
                referent: clue.referent.clone(),
                payload: clue.payload.clone(),
            };
            let a = g.agent(agent).expect("validated agent");
            let changed = !a.has_read(object);
            if changed {
                g.agent_mut(agent).expect("validated agent").read_clues.push(ReadClue { object: object.clone(), clue });
            }
            (vec![Event::ClueRead { clue: seen }], changed)
        }
        Action::Toggle { object } => {
            let on = g.object(object).is_some_and(|o| o.states.is(StateValue::On));
            let v = if on { StateValue::Off } else { StateValue::On };
            set_state(g, object, v);
            (vec![Event::Toggled { object: object.clone(), state: v }], true)
        }
        Action::Arrange { objects, target } => {
            let mut changed = false;
            for id in objects {
                let on = crate::scene::Relation::on_top(id.clone(), target.clone());
                if !g.has_relation(&on) {
                    g.set_parent(id, RelationKind::OnTop, target.clone());
                    changed = true;
                }
            }
            let (_, spec) = g.arrangement_for(target).expect("validated arrangement");
            let colours: Vec<_> = objects.iter().map(|o| g.object(o).and_then(|o| o.color)).collect();
            let matched = colours.iter().zip(&spec.order).all(|(c, want)| *c == Some(*want));
            let reveals = spec.reveals.clone();
            let mut events = vec![Event::Arranged { target: target.clone(), matched }];
            if matched && g.object(&reveals).is_some_and(|o| o.is_hidden()) {
                set_state(g, &reveals, StateValue::Revealed);
                events.push(Event::Revealed { object: reveals });
                changed = true;
            }
            (events, changed)
        }
    }
}

/// Code strings the agent could plausibly try on `lock`: the fragments of
/// every read clue naming the lock, concatenated in clue-object id order.
pub fn code_candidates(read: &[ReadClue], lock: &NodeId) -> Vec<String> {
    let mut frags: Vec<(&NodeId, &str)> = read
        .iter()
        .filter(|rc| rc.clue.referent.as_ref() == Some(lock))
        .filter_map(|rc| rc.clue.payload.as_deref().filter(|p| is_digits(p)).map(|p| (&rc.object, p)))
        .collect();
    if frags.is_empty() {
        return Vec::new();
    }
    frags.sort();
    vec![frags.iter().map(|(_, p)| *p).collect()]
}

pub(crate) fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

fn permutations(items: &[NodeId], k: usize, out: &mut Vec<Vec<NodeId>>, cur: &mut Vec<NodeId>, used: &mut [bool]) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for i in 0..items.len() {
        if !used[i] {
            used[i] = true;
            cur.push(items[i].clone());
            permutations(items, k, out, cur, used);
            cur.pop();
            used[i] = false;
        }
    }
}

/// Actions that would currently succeed, in class order (go_to, open, close,
/// pick_up, place, unlock, lock, read, toggle, arrange), then by id.
/// Unlock-by-code is offered only for codes assembled from read clues.
pub fn legal_actions(g: &SceneGraph, agent: &NodeId) -> Result<Vec<Action>, ActionError> {
    let mut who = actor(g, agent)?;
    let mut reachable: Vec<&NodeId> = Vec::new();
    for o in g.objects() {
        if g.is_door(&o.id) {
            if g.door_rooms(&o.id).contains(&who.room) {
                reachable.push(&o.id);
            }
        } else if perceive(g, who.room, &o.id) == Perception::Visible {
            reachable.push(&o.id);
        }
    }
    let with = |a: Affordance| -> Vec<&NodeId> {
        reachable.iter().copied().filter(|&o| g.object(o).is_some_and(|x| x.has(a))).collect()
    };
    let openable = with(Affordance::Openable);
    let mut cands: Vec<Action> = Vec::new();
    let mut rooms: Vec<NodeId> = g.doors_of(who.room).into_iter().map(|(_, r)| r).collect();
    rooms.dedup();
    cands.extend(rooms.into_iter().map(|room| Action::GoTo { room }));
    cands.extend(openable.iter().map(|&o| Action::Open { object: o.clone() }));
    cands.extend(openable.iter().map(|&o| Action::Close { object: o.clone() }));
    if who.holding.len() < who.capacity {
        cands.extend(with(Affordance::Graspable).into_iter().map(|o| Action::PickUp { object: o.clone() }));
    }
    if !who.holding.is_empty() {
        let containers = with(Affordance::Container);
        let surfaces = with(Affordance::Surface);
        for h in who.holding {
            let mut targets: Vec<(&NodeId, PlaceRelation)> = containers
                .iter()
                .map(|&t| (t, PlaceRelation::Inside))
                .chain(surfaces.iter().map(|&t| (t, PlaceRelation::OnTop)))
                .collect();
            targets.sort();
            for (t, relation) in targets {
                cands.push(Action::Place { object: h.clone(), relation, target: t.clone() });
            }
        }
    }
    let lockable = with(Affordance::Lockable);
    for &o in &lockable {
        let Some(lock) = g.object(o).and_then(|x| x.lock.as_ref()) else { continue };
        match lock.mechanism {
            LockMechanism::Key => {
                for h in who.holding {
                    cands.push(Action::Unlock { object: o.clone(), with: UnlockWith::Key(h.clone()) });
                }
            }
            LockMechanism::Code => {
                for c in code_candidates(who.read, o) {
                    cands.push(Action::Unlock { object: o.clone(), with: UnlockWith::Code(c) });
                }
            }
        }
    }
    cands.extend(lockable.iter().map(|&o| Action::Lock { object: o.clone() }));
    cands.extend(with(Affordance::Readable).into_iter().map(|o| Action::Read { object: o.clone() }));
    cands.extend(with(Affordance::Toggleable).into_iter().map(|o| Action::Toggle { object: o.clone() }));
    for t in with(Affordance::Surface) {
        let Some((_, spec)) = g.arrangement_for(t) else { continue };
        let coloured: Vec<NodeId> = reachable
            .iter()
            .filter(|&&o| g.object(o).is_some_and(|x| x.color.is_some() && x.has(Affordance::Graspable)))
            .map(|&o| o.clone())
            .collect();
        let mut perms = Vec::new();
        let mut used = vec![false; coloured.len()];
        permutations(&coloured, spec.order.len(), &mut perms, &mut Vec::new(), &mut used);
        cands.extend(perms.into_iter().map(|objects| Action::Arrange { objects, target: t.clone() }));
    }
    let fast: HashSet<&NodeId> = reachable.iter().copied().collect();
    who.reachable = Some(&fast);
    Ok(cands.into_iter().filter(|a| check(g, &who, a).is_ok()).collect())
}
