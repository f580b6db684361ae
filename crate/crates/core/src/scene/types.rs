use std::cmp::Ordering;
use std::fmt;

use serde::de::{self, Deserializer, MapAccess, SeqAccess, Visitor};
use serde::ser::{SerializeMap, SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::ids::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Affordance {
    Openable,
    Lockable,
    Graspable,
    Movable,
    Readable,
    Toggleable,
    Container,
    Surface,
}

impl Affordance {
    pub const ALL: [Affordance; 8] = [
        Affordance::Openable,
        Affordance::Lockable,
        Affordance::Graspable,
        Affordance::Movable,
        Affordance::Readable,
        Affordance::Toggleable,
        Affordance::Container,
        Affordance::Surface,
    ];

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

/// Set of affordances, stored as a bitmask. Serialized as a sorted array of names.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Affordances(u8);

impl Affordances {
    pub fn empty() -> Self {
        Affordances(0)
    }

    pub fn of(items: &[Affordance]) -> Self {
        items.iter().copied().collect()
    }

    pub fn has(self, a: Affordance) -> bool {
        self.0 & a.bit() != 0
    }

    pub fn insert(&mut self, a: Affordance) {
        self.0 |= a.bit();
    }

    pub fn union(self, other: Affordances) -> Affordances {
        Affordances(self.0 | other.0)
    }

    pub fn contains_all(self, other: Affordances) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Affordance> {
        Affordance::ALL.into_iter().filter(move |a| self.has(*a))
    }
}

impl FromIterator<Affordance> for Affordances {
    fn from_iter<I: IntoIterator<Item = Affordance>>(iter: I) -> Self {
        let mut set = Affordances::empty();
        for a in iter {
            set.insert(a);
        }
        set
    }
}

impl fmt::Debug for Affordances {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for Affordances {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let items: Vec<Affordance> = self.iter().collect();
        let mut seq = serializer.serialize_seq(Some(items.len()))?;
        for a in items {
            seq.serialize_element(&a)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Affordances {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Affordances;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an array of affordance names")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Affordances, A::Error> {
                let mut set = Affordances::empty();
                while let Some(a) = seq.next_element::<Affordance>()? {
                    set.insert(a);
                }
                Ok(set)
            }
        }
        deserializer.deserialize_seq(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKey {
    Openness,
    Lock,
    Power,
    Visibility,
}

impl StateKey {
    pub const ALL: [StateKey; 4] = [StateKey::Openness, StateKey::Lock, StateKey::Power, StateKey::Visibility];

    /// Affordance that must be present for the key to appear on an object.
    pub fn enabling_affordance(self) -> Option<Affordance> {
        match self {
            StateKey::Openness => Some(Affordance::Openable),
            StateKey::Lock => Some(Affordance::Lockable),
            StateKey::Power => Some(Affordance::Toggleable),
            StateKey::Visibility => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StateKey::Openness => "openness",
            StateKey::Lock => "lock",
            StateKey::Power => "power",
            StateKey::Visibility => "visibility",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateValue {
    Open,
    Closed,
    Locked,
    Unlocked,
    On,
    Off,
    Revealed,
    Hidden,
}

impl StateValue {
    pub fn key(self) -> StateKey {
        match self {
            StateValue::Open | StateValue::Closed => StateKey::Openness,
            StateValue::Locked | StateValue::Unlocked => StateKey::Lock,
            StateValue::On | StateValue::Off => StateKey::Power,
            StateValue::Revealed | StateValue::Hidden => StateKey::Visibility,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StateValue::Open => "open",
            StateValue::Closed => "closed",
            StateValue::Locked => "locked",
            StateValue::Unlocked => "unlocked",
            StateValue::On => "on",
            StateValue::Off => "off",
            StateValue::Revealed => "revealed",
            StateValue::Hidden => "hidden",
        }
    }

    pub fn parse(s: &str) -> Option<StateValue> {
        Some(match s {
            "open" => StateValue::Open,
            "closed" => StateValue::Closed,
            "locked" => StateValue::Locked,
            "unlocked" => StateValue::Unlocked,
            "on" => StateValue::On,
            "off" => StateValue::Off,
            "revealed" => StateValue::Revealed,
            "hidden" => StateValue::Hidden,
            _ => return None,
        })
    }
}

impl fmt::Display for StateValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Object state map with one optional slot per [`StateKey`].
/// Serialized as a JSON object, e.g. `{"openness": "closed", "lock": "locked"}`.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct States([Option<StateValue>; 4]);

impl States {
    pub fn new() -> Self {
        States::default()
    }

    pub fn get(&self, key: StateKey) -> Option<StateValue> {
        self.0[key as usize]
    }

    /// Sets the slot for `value.key()`.
    pub fn set(&mut self, value: StateValue) {
        self.0[value.key() as usize] = Some(value);
    }

    pub fn with(mut self, value: StateValue) -> Self {
        self.set(value);
        self
    }

    pub fn clear(&mut self, key: StateKey) {
        self.0[key as usize] = None;
    }

    pub fn is(&self, value: StateValue) -> bool {
        self.get(value.key()) == Some(value)
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateKey, StateValue)> + '_ {
        StateKey::ALL.into_iter().filter_map(|k| self.get(k).map(|v| (k, v)))
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(Option::is_none)
    }

    pub(crate) fn pack(&self) -> [u8; 4] {
        let mut out = [0u8; 4];
        for (slot, v) in out.iter_mut().zip(self.0.iter()) {
            *slot = v.map_or(0, |v| v as u8 + 1);
        }
        out
    }
}

impl fmt::Debug for States {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.iter().map(|(k, v)| (k.as_str(), v.as_str()))).finish()
    }
}

impl Serialize for States {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let n = self.iter().count();
        let mut map = serializer.serialize_map(Some(n))?;
        for (k, v) in self.iter() {
            map.serialize_entry(&k, &v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for States {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = States;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map of state keys to state values")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<States, A::Error> {
                let mut states = States::new();
                while let Some((k, v)) = map.next_entry::<StateKey, StateValue>()? {
                    if v.key() != k {
                        return Err(de::Error::custom(format!(
                            "state value {:?} does not belong to key {:?}",
                            v.as_str(),
                            k.as_str()
                        )));
                    }
                    states.set(v);
                }
                Ok(states)
            }
        }
        deserializer.deserialize_map(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    Red,
    Blue,
    Green,
    Yellow,
    Purple,
    Orange,
}

impl Color {
    pub const ALL: [Color; 6] = [Color::Red, Color::Blue, Color::Green, Color::Yellow, Color::Purple, Color::Orange];

    pub fn as_str(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Blue => "blue",
            Color::Green => "green",
            Color::Yellow => "yellow",
            Color::Purple => "purple",
            Color::Orange => "orange",
        }
    }

    pub fn parse(s: &str) -> Option<Color> {
        Color::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LockMechanism {
    Key,
    Code,
}

/// A lock on a lockable object. `key_id` is absent on a key lock only when its
/// key was removed from the graph; such a lock can no longer be opened.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LockSpec {
    pub mechanism: LockMechanism,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_id: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
}

impl LockSpec {
    pub fn key(key_id: NodeId) -> Self {
        LockSpec { mechanism: LockMechanism::Key, key_id: Some(key_id), code: None }
    }

    pub fn code(code: impl Into<String>) -> Self {
        LockSpec { mechanism: LockMechanism::Code, key_id: None, code: Some(code.into()) }
    }

    /// Checks the mechanism/field pairing and the code format.
    pub fn well_formed(&self) -> Result<(), &'static str> {
        match self.mechanism {
            LockMechanism::Key => {
                if self.code.is_some() {
                    return Err("key lock must not carry a code");
                }
            }
            LockMechanism::Code => {
                if self.key_id.is_some() {
                    return Err("code lock must not carry a key_id");
                }
                let Some(code) = &self.code else {
                    return Err("code lock requires a code");
                };
                if !(2..=8).contains(&code.len()) || !code.bytes().all(|b| b.is_ascii_digit()) {
                    return Err("code must be 2-8 digits");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Veracity {
    Accurate,
    Deceptive,
}

/// Text carried by a readable object.
///
/// `referent` names the object the clue points at (a container that holds
/// something, a lock whose code this clue contributes to, or a surface whose
/// arrangement it describes). `payload` carries machine-usable content: a code
/// fragment (digits) or an arrangement order (comma-separated colours).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClueText {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub referent: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
    pub veracity: Veracity,
}

impl ClueText {
    pub fn flavor(text: impl Into<String>) -> Self {
        ClueText { text: text.into(), referent: None, payload: None, veracity: Veracity::Accurate }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrangementSpec {
    /// Surface the coloured objects must be arranged on.
    pub target: NodeId,
    pub order: Vec<Color>,
    /// Hidden object revealed when the arrangement matches.
    pub reveals: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomNode {
    pub id: NodeId,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrangement: Option<ArrangementSpec>,
}

impl RoomNode {
    pub fn new(id: impl Into<NodeId>, name: impl Into<String>) -> Self {
        RoomNode { id: id.into(), name: name.into(), arrangement: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectNode {
    pub id: NodeId,
    pub category: String,
    #[serde(rename = "name")]
    pub display_name: String,
    pub affordances: Affordances,
    #[serde(default)]
    pub states: States,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clue: Option<ClueText>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lock: Option<LockSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<Color>,
}

impl ObjectNode {
    pub fn new(id: impl Into<NodeId>, category: &str, display_name: &str, affordances: &[Affordance]) -> Self {
        ObjectNode {
            id: id.into(),
            category: category.to_string(),
            display_name: display_name.to_string(),
            affordances: Affordances::of(affordances),
            states: States::new(),
            clue: None,
            lock: None,
            color: None,
        }
    }

    pub fn with_state(mut self, v: StateValue) -> Self {
        self.states.set(v);
        self
    }

    pub fn with_clue(mut self, clue: ClueText) -> Self {
        self.clue = Some(clue);
        self
    }

    pub fn with_lock(mut self, lock: LockSpec) -> Self {
        self.lock = Some(lock);
        self
    }

    pub fn with_color(mut self, color: Color) -> Self {
        self.color = Some(color);
        self
    }

    pub fn has(&self, a: Affordance) -> bool {
        self.affordances.has(a)
    }

    pub fn is_open(&self) -> bool {
        !self.states.is(StateValue::Closed)
    }

    pub fn is_locked(&self) -> bool {
        self.states.is(StateValue::Locked)
    }

    pub fn is_hidden(&self) -> bool {
        self.states.is(StateValue::Hidden)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadClue {
    pub object: NodeId,
    pub clue: ClueText,
}

pub const DEFAULT_CAPACITY: usize = 1;

fn default_capacity() -> usize {
    DEFAULT_CAPACITY
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentNode {
    pub id: NodeId,
    #[serde(default = "default_capacity")]
    pub capacity: usize,
    #[serde(default)]
    pub holding: Vec<NodeId>,
    #[serde(default)]
    pub read_clues: Vec<ReadClue>,
}

impl AgentNode {
    pub fn new(id: impl Into<NodeId>) -> Self {
        AgentNode { id: id.into(), capacity: DEFAULT_CAPACITY, holding: Vec::new(), read_clues: Vec::new() }
    }

    pub fn has_read(&self, object: &NodeId) -> bool {
        self.read_clues.iter().any(|r| &r.object == object)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    InRoom,
    Inside,
    OnTop,
    HeldBy,
    Connects,
}

impl RelationKind {
    pub fn is_parent(self) -> bool {
        !matches!(self, RelationKind::Connects)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::InRoom => "in_room",
            RelationKind::Inside => "inside",
            RelationKind::OnTop => "on_top",
            RelationKind::HeldBy => "held_by",
            RelationKind::Connects => "connects",
        }
    }
}

/// A typed edge. `connects` edges run from a door object to each of the two
/// rooms it joins; every other kind runs from a child to its location.
///
/// Ordered by `(src, kind, dst)` so the relations of one node are contiguous.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Relation {
    pub kind: RelationKind,
    pub src: NodeId,
    pub dst: NodeId,
}

impl Relation {
    pub fn new(kind: RelationKind, src: impl Into<NodeId>, dst: impl Into<NodeId>) -> Self {
        Relation { kind, src: src.into(), dst: dst.into() }
    }

    pub fn in_room(src: impl Into<NodeId>, dst: impl Into<NodeId>) -> Self {
        Relation::new(RelationKind::InRoom, src, dst)
    }

    pub fn inside(src: impl Into<NodeId>, dst: impl Into<NodeId>) -> Self {
        Relation::new(RelationKind::Inside, src, dst)
    }

    pub fn on_top(src: impl Into<NodeId>, dst: impl Into<NodeId>) -> Self {
        Relation::new(RelationKind::OnTop, src, dst)
    }

    pub fn held_by(src: impl Into<NodeId>, dst: impl Into<NodeId>) -> Self {
        Relation::new(RelationKind::HeldBy, src, dst)
    }

    pub fn connects(src: impl Into<NodeId>, dst: impl Into<NodeId>) -> Self {
        Relation::new(RelationKind::Connects, src, dst)
    }
}

impl Ord for Relation {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.src, self.kind, &self.dst).cmp(&(&other.src, other.kind, &other.dst))
    }
}

impl PartialOrd for Relation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.kind.as_str(), self.src, self.dst)
    }
}

/// Any node that can be inserted into a graph.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Room(RoomNode),
    Object(ObjectNode),
    Agent(AgentNode),
}

impl Node {
    pub fn id(&self) -> &NodeId {
        match self {
            Node::Room(r) => &r.id,
            Node::Object(o) => &o.id,
            Node::Agent(a) => &a.id,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn states_serialize_as_map() {
        let s = States::new().with(StateValue::Closed).with(StateValue::Locked);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"openness":"closed","lock":"locked"}"#);
        let back: States = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn states_reject_mismatched_key() {
        assert!(serde_json::from_str::<States>(r#"{"power":"open"}"#).is_err());
    }

    #[test]
    fn affordances_round_trip_sorted() {
        let a = Affordances::of(&[Affordance::Surface, Affordance::Openable]);
        assert_eq!(serde_json::to_string(&a).unwrap(), r#"["openable","surface"]"#);
    }

    #[test]
    fn lock_spec_pairing() {
        assert!(LockSpec::key("k".into()).well_formed().is_ok());
        assert!(LockSpec::code("4217").well_formed().is_ok());
        assert!(LockSpec::code("1").well_formed().is_err());
        assert!(LockSpec::code("12a4").well_formed().is_err());
        let both = LockSpec { mechanism: LockMechanism::Key, key_id: Some("k".into()), code: Some("12".into()) };
        assert!(both.well_formed().is_err());
    }
}
