//! Task specifications: the structured form an external language model emits
//! for a free-text instruction, plus requirement extraction and instantiation.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::goal::{find_cycle, GoalSpec, Predicate};
use crate::ids::NodeId;
use crate::rng::{pick, seeded, stream};
use crate::scene::document::path_error;
use crate::scene::*;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubGoalKind {
    ObjectIn,
    ObjectOn,
    StateIs,
    DoorOpen,
    ClueSolved,
    HeldBy,
}

impl SubGoalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SubGoalKind::ObjectIn => "object_in",
            SubGoalKind::ObjectOn => "object_on",
            SubGoalKind::StateIs => "state_is",
            SubGoalKind::DoorOpen => "door_open",
            SubGoalKind::ClueSolved => "clue_solved",
            SubGoalKind::HeldBy => "held_by",
        }
    }

    fn takes_object(self) -> bool {
        matches!(self, SubGoalKind::ObjectIn | SubGoalKind::ObjectOn | SubGoalKind::HeldBy)
    }

    fn takes_target(self) -> bool {
        self != SubGoalKind::HeldBy
    }
}

/// A subgoal as emitted on the wire. Objects are named either by id or by
/// category; `*_instance` distinguishes several objects of one category
/// (`key` instance 1 and 2 are two different keys).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubGoal {
    pub kind: SubGoalKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_id: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_instance: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_id: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_instance: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ObjRef {
    Id(NodeId),
    Category { category: String, instance: u32 },
}

impl ObjRef {
    fn category(&self) -> Option<&str> {
        match self {
            ObjRef::Category { category, .. } => Some(category),
            ObjRef::Id(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Object,
    Target,
}

impl SubGoal {
    pub fn reference(&self, role: Role) -> Option<ObjRef> {
        let (id, cat, inst) = match role {
            Role::Object => (&self.object_id, &self.object_category, self.object_instance),
            Role::Target => (&self.target_id, &self.target_category, self.target_instance),
        };
        match (id, cat) {
            (Some(id), _) => Some(ObjRef::Id(id.clone())),
            (None, Some(c)) => Some(ObjRef::Category { category: c.clone(), instance: inst.unwrap_or(1) }),
            (None, None) => None,
        }
    }

    /// Affordances the subgoal demands of the object filling `role`.
    pub fn demands(&self, role: Role) -> Affordances {
        use Affordance::*;
        match (self.kind, role) {
            (SubGoalKind::ObjectIn, Role::Object) | (SubGoalKind::ObjectOn, Role::Object) => Affordances::of(&[Graspable]),
            (SubGoalKind::HeldBy, Role::Object) => Affordances::of(&[Graspable]),
            (SubGoalKind::ObjectIn, Role::Target) => Affordances::of(&[Container]),
            (SubGoalKind::ObjectOn, Role::Target) => Affordances::of(&[Surface]),
            (SubGoalKind::StateIs, Role::Target) => {
                self.state.and_then(|s| s.key().enabling_affordance()).map(|a| Affordances::of(&[a])).unwrap_or_default()
            }
            (SubGoalKind::DoorOpen, Role::Target) => Affordances::of(&[Openable]),
            (SubGoalKind::ClueSolved, Role::Target) => Affordances::of(&[Readable]),
            _ => Affordances::empty(),
        }
    }

    fn roles(&self) -> impl Iterator<Item = Role> + '_ {
        [Role::Object, Role::Target].into_iter().filter(|r| match r {
            Role::Object => self.kind.takes_object(),
            Role::Target => self.kind.takes_target(),
        })
    }
}

/// Where a minted object should go.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementHint {
    Room(NodeId),
    Container(NodeId),
    Surface(NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    pub subgoal: usize,
    pub role: Role,
    pub at: PlacementHint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assignment {
    pub subgoal: usize,
    pub agent: NodeId,
}

/// Temporal (`order`), heterogeneous (`assign`), or spatial (`place`) constraint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Constraint {
    Order([usize; 2]),
    Assign(Assignment),
    Place(Placement),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    #[serde(default = "version")]
    pub schema_version: String,
    pub description: String,
    pub subgoals: Vec<SubGoal>,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
}

fn version() -> String {
    SCHEMA_VERSION.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("temporal constraints are cyclic through subgoals {subgoals:?}")]
pub struct CycleError {
    pub subgoals: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaskError {
    #[error("schema error at {0}")]
    Schema(SchemaError),
    #[error(transparent)]
    Cycle(#[from] CycleError),
}

impl From<SchemaError> for TaskError {
    fn from(e: SchemaError) -> Self {
        TaskError::Schema(e)
    }
}

pub fn validate_task_spec(document: &serde_json::Value) -> Result<TaskSpec, TaskError> {
    let spec: TaskSpec = serde_path_to_error::deserialize(document).map_err(|e| path_error(e.path(), e.inner()))?;
    check_spec(&spec)?;
    Ok(spec)
}

pub fn parse_task_spec(text: &str) -> Result<TaskSpec, TaskError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let spec: TaskSpec = serde_path_to_error::deserialize(de).map_err(|e| path_error(e.path(), e.inner()))?;
    check_spec(&spec)?;
    Ok(spec)
}

fn check_spec(spec: &TaskSpec) -> Result<(), TaskError> {
    if spec.schema_version != SCHEMA_VERSION {
        return Err(SchemaError::new("/schema_version", format!("unsupported version {:?}", spec.schema_version)).into());
    }
    if spec.subgoals.is_empty() {
        return Err(SchemaError::new("/subgoals", "empty").into());
    }
    for (i, sg) in spec.subgoals.iter().enumerate() {
        check_arity(i, sg)?;
    }
    let n = spec.subgoals.len();
    let mut order = Vec::new();
    for (k, c) in spec.constraints.iter().enumerate() {
        let at = |field: &str| format!("/constraints/{k}/{field}");
        match c {
            Constraint::Order(pair) => {
                if pair[0] >= n || pair[1] >= n {
                    return Err(SchemaError::new(at("order"), format!("subgoal index out of range (have {n})")).into());
                }
                order.push(*pair);
            }
            Constraint::Assign(a) if a.subgoal >= n => {
                return Err(SchemaError::new(at("assign/subgoal"), format!("subgoal index out of range (have {n})")).into());
            }
            Constraint::Assign(_) => {}
            Constraint::Place(p) => {
                let Some(sg) = spec.subgoals.get(p.subgoal) else {
                    return Err(SchemaError::new(at("place/subgoal"), format!("subgoal index out of range (have {n})")).into());
                };
                match sg.reference(p.role) {
                    Some(ObjRef::Category { .. }) => {}
                    Some(ObjRef::Id(_)) => {
                        return Err(SchemaError::new(at("place/role"), "placement applies only to objects named by category").into())
                    }
                    None => {
                        return Err(SchemaError::new(at("place/role"), format!("{} has no {:?} reference", sg.kind.as_str(), p.role).to_lowercase()).into())
                    }
                }
            }
        }
    }
    if let Some(cycle) = find_cycle(n, &order) {
        return Err(CycleError { subgoals: cycle }.into());
    }
    Ok(())
}

fn check_arity(i: usize, sg: &SubGoal) -> Result<(), SchemaError> {
    let at = |field: &str| format!("/subgoals/{i}/{field}");
    let kind = sg.kind.as_str();
    for (role, takes, id, cat, inst) in [
        ("object", sg.kind.takes_object(), &sg.object_id, &sg.object_category, sg.object_instance),
        ("target", sg.kind.takes_target(), &sg.target_id, &sg.target_category, sg.target_instance),
    ] {
        match (takes, id.is_some(), cat.is_some()) {
            (true, false, false) => {
                return Err(SchemaError::new(at(&format!("{role}_category")), format!("{kind} requires {role}_id or {role}_category")))
            }
            (true, true, true) => {
                return Err(SchemaError::new(at(&format!("{role}_id")), format!("give {role}_id or {role}_category, not both")))
            }
            (false, true, _) => return Err(SchemaError::new(at(&format!("{role}_id")), format!("not allowed for {kind}"))),
            (false, _, true) => return Err(SchemaError::new(at(&format!("{role}_category")), format!("not allowed for {kind}"))),
            _ => {}
        }
        if let Some(c) = cat {
            if c.trim().is_empty() {
                return Err(SchemaError::new(at(&format!("{role}_category")), "empty category"));
            }
        }
        match inst {
            Some(0) => return Err(SchemaError::new(at(&format!("{role}_instance")), "instances are numbered from 1")),
            Some(_) if cat.is_none() => {
                return Err(SchemaError::new(at(&format!("{role}_instance")), format!("needs {role}_category")))
            }
            _ => {}
        }
    }
    match (sg.kind == SubGoalKind::StateIs, sg.state) {
        (true, None) => return Err(SchemaError::new(at("state"), "state_is requires state")),
        (false, Some(_)) => return Err(SchemaError::new(at("state"), format!("not allowed for {kind}"))),
        _ => {}
    }
    if sg.kind != SubGoalKind::HeldBy && sg.agent.is_some() {
        return Err(SchemaError::new(at("agent"), format!("not allowed for {kind}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectRequirement {
    pub category: String,
    pub count: usize,
    pub affordances: Affordances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement: Option<PlacementHint>,
}

/// One category-named object the spec talks about, with everything demanded of it.
#[derive(Debug, Clone)]
struct Slot {
    key: ObjRef,
    affordances: Affordances,
    placement: Option<PlacementHint>,
}

fn slots(spec: &TaskSpec) -> Vec<Slot> {
    let mut out: Vec<Slot> = Vec::new();
    for sg in &spec.subgoals {
        for role in sg.roles() {
            let Some(r @ ObjRef::Category { .. }) = sg.reference(role) else { continue };
            let need = sg.demands(role);
            match out.iter_mut().find(|s| s.key == r) {
                Some(s) => s.affordances = s.affordances.union(need),
                None => out.push(Slot { key: r, affordances: need, placement: None }),
            }
        }
    }
    for c in &spec.constraints {
        if let Constraint::Place(p) = c {
            if let Some(r) = spec.subgoals.get(p.subgoal).and_then(|sg| sg.reference(p.role)) {
                if let Some(s) = out.iter_mut().find(|s| s.key == r) {
                    s.placement = Some(p.at.clone());
                }
            }
        }
    }
    out
}

/// Objects the spec needs, grouped by (category, affordances, placement) in
/// order of first mention. Objects named by id are not requirements.
pub fn required_objects(spec: &TaskSpec) -> Vec<ObjectRequirement> {
    let mut out: Vec<ObjectRequirement> = Vec::new();
    for s in slots(spec) {
        let cat = s.key.category().expect("slots are category references");
        match out.iter_mut().find(|r| r.category == cat && r.affordances == s.affordances && r.placement == s.placement) {
            Some(r) => r.count += 1,
            None => out.push(ObjectRequirement {
                category: cat.to_string(),
                count: 1,
                affordances: s.affordances,
                placement: s.placement,
            }),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstantiationError {
    #[error("base graph has no rooms")]
    NoRooms,
    #[error("placement hint names unknown room {0}")]
    UnknownRoom(NodeId),
    #[error("placement hint names unknown object {0}")]
    UnknownHost(NodeId),
    #[error("placement host {host} cannot take the object: {reason}")]
    BadHost { host: NodeId, reason: String },
    #[error("subgoal names unknown object {0}")]
    UnknownObject(NodeId),
    #[error("object {object} lacks affordance {affordance:?}")]
    MissingAffordance { object: NodeId, affordance: Affordance },
    #[error("assignment names unknown agent {0}")]
    UnknownAgent(NodeId),
    #[error("instantiated graph is invalid: {0:?}")]
    Invalid(Vec<Violation>),
}

fn satisfies_hint(g: &SceneGraph, id: &NodeId, hint: &PlacementHint) -> bool {
    match hint {
        PlacementHint::Room(r) => g.hoisted_room(id).as_ref() == Some(r),
        PlacementHint::Container(c) => g.has_relation(&Relation::inside(id.clone(), c.clone())),
        PlacementHint::Surface(s) => g.has_relation(&Relation::on_top(id.clone(), s.clone())),
    }
}

fn next_free(g: &SceneGraph, category: &str) -> NodeId {
    let stem: String = category
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    let stem = if stem.starts_with(|c: char| c.is_ascii_alphabetic()) { stem } else { format!("obj_{stem}") };
    (1..)
        .map(|k| NodeId::from(format!("{stem}_{k}").as_str()))
        .find(|id| !g.contains(id))
        .expect("unbounded search")
}

fn mint(g: &SceneGraph, s: &Slot, rng: &mut crate::rng::SimRng) -> ObjectNode {
    let category = s.key.category().expect("category slot");
    let mut aff = s.affordances;
    if aff.has(Affordance::Lockable) {
        aff.insert(Affordance::Openable);
    }
    let id = next_free(g, category);
    let mut o = ObjectNode::new(id, category, category, &[]);
    o.affordances = aff;
    if aff.has(Affordance::Openable) {
        o.states.set(StateValue::Closed);
    }
    if aff.has(Affordance::Lockable) {
        o.states.set(StateValue::Unlocked);
        let code: String = (0..4).map(|_| char::from(b'0' + rng.gen_range(0..10u8))).collect();
        o.lock = Some(LockSpec::code(code));
    }
    if aff.has(Affordance::Toggleable) {
        o.states.set(StateValue::Off);
    }
    if aff.has(Affordance::Readable) {
        o.clue = Some(ClueText::flavor(format!("A plain {category}.")));
    }
    o
}

fn placement_for(
    g: &SceneGraph,
    id: &NodeId,
    aff: Affordances,
    hint: Option<&PlacementHint>,
    rng: &mut crate::rng::SimRng,
) -> Result<Relation, InstantiationError> {
    match hint {
        Some(PlacementHint::Room(r)) => {
            if g.room(r).is_none() {
                return Err(InstantiationError::UnknownRoom(r.clone()));
            }
            Ok(Relation::in_room(id.clone(), r.clone()))
        }
        Some(PlacementHint::Container(c)) => {
            let host = g.object(c).ok_or_else(|| InstantiationError::UnknownHost(c.clone()))?;
            if !host.has(Affordance::Container) {
                return Err(InstantiationError::BadHost { host: c.clone(), reason: "not a container".into() });
            }
            Ok(Relation::inside(id.clone(), c.clone()))
        }
        Some(PlacementHint::Surface(s)) => {
            let host = g.object(s).ok_or_else(|| InstantiationError::UnknownHost(s.clone()))?;
            if !host.has(Affordance::Surface) {
                return Err(InstantiationError::BadHost { host: s.clone(), reason: "not a surface".into() });
            }
            Ok(Relation::on_top(id.clone(), s.clone()))
        }
        None => {
            let mut hosts: Vec<Relation> = g.rooms().map(|r| Relation::in_room(id.clone(), r.id.clone())).collect();
            if aff.has(Affordance::Graspable) {
                hosts.extend(
                    g.objects()
                        .filter(|o| o.has(Affordance::Surface) && !g.is_door(&o.id))
                        .map(|o| Relation::on_top(id.clone(), o.id.clone())),
                );
            }
            if hosts.is_empty() {
                return Err(InstantiationError::NoRooms);
            }
            Ok(pick(rng, &hosts).clone())
        }
    }
}

/// Binds every object the spec mentions to a node of `base`, reusing
/// matching objects (lowest id first) before minting new ones, and compiles
/// the goal. The result is one mutation: revision advances by exactly one.
pub fn instantiate(spec: &TaskSpec, base: &SceneGraph, seed: u64) -> Result<(SceneGraph, GoalSpec), InstantiationError> {
    if base.rooms().next().is_none() {
        return Err(InstantiationError::NoRooms);
    }
    let mut rng = seeded(seed, stream::INSTANTIATE);
    let mut g = base.clone();
    let mut bound: BTreeMap<ObjRef, NodeId> = BTreeMap::new();
    let mut taken: Vec<NodeId> = Vec::new();

    for sg in &spec.subgoals {
        for role in sg.roles() {
            if let Some(ObjRef::Id(id)) = sg.reference(role) {
                let o = base.object(&id).ok_or_else(|| InstantiationError::UnknownObject(id.clone()))?;
                if let Some(a) = sg.demands(role).iter().find(|a| !o.has(*a)) {
                    return Err(InstantiationError::MissingAffordance { object: id, affordance: a });
                }
                taken.push(id);
            }
        }
    }

    for s in slots(spec) {
        let category = s.key.category().expect("category slot");
        let reuse = g
            .objects()
            .filter(|o| o.category == category && o.affordances.contains_all(s.affordances) && !taken.contains(&o.id))
            .find(|o| s.placement.as_ref().is_none_or(|h| satisfies_hint(&g, &o.id, h)))
            .map(|o| o.id.clone());
        let id = match reuse {
            Some(id) => id,
            None => {
                let obj = mint(&g, &s, &mut rng);
                let at = placement_for(&g, &obj.id, obj.affordances, s.placement.as_ref(), &mut rng)?;
                let id = obj.id.clone();
                g.insert_object_raw(obj);
                g.insert_relation(at);
                id
            }
        };
        taken.push(id.clone());
        bound.insert(s.key, id);
    }

    let resolve = |sg: &SubGoal, role: Role| -> NodeId {
        match sg.reference(role).expect("arity checked") {
            ObjRef::Id(id) => id,
            r => bound[&r].clone(),
        }
    };
    let mut goal = GoalSpec { description: spec.description.clone(), ..Default::default() };
    for sg in &spec.subgoals {
        let p = match sg.kind {
            SubGoalKind::ObjectIn => Predicate::ObjectIn { object: resolve(sg, Role::Object), container: resolve(sg, Role::Target) },
            SubGoalKind::ObjectOn => Predicate::ObjectOn { object: resolve(sg, Role::Object), surface: resolve(sg, Role::Target) },
            SubGoalKind::StateIs => Predicate::StateIs { object: resolve(sg, Role::Target), state: sg.state.expect("arity checked") },
            SubGoalKind::DoorOpen => Predicate::DoorOpen { door: resolve(sg, Role::Target) },
            SubGoalKind::ClueSolved => Predicate::ClueSolved { clue: resolve(sg, Role::Target) },
            SubGoalKind::HeldBy => Predicate::HeldBy { object: resolve(sg, Role::Object), agent: sg.agent.clone() },
        };
        goal.conjuncts.push(p);
    }
    for c in &spec.constraints {
        match c {
            Constraint::Order(pair) => goal.ordering.push(*pair),
            Constraint::Assign(a) => {
                if base.agent(&a.agent).is_none() {
                    return Err(InstantiationError::UnknownAgent(a.agent.clone()));
                }
                goal.assignments.insert(a.subgoal, a.agent.clone());
            }
            Constraint::Place(_) => {}
        }
    }
    for sg in &spec.subgoals {
        if let Some(a) = &sg.agent {
            if base.agent(a).is_none() {
                return Err(InstantiationError::UnknownAgent(a.clone()));
            }
        }
    }

    let v = check_invariants(&g);
    if !v.is_empty() {
        return Err(InstantiationError::Invalid(v));
    }
    g.set_revision(base.revision() + 1);
    Ok((g, goal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn example() -> serde_json::Value {
        json!({"description":"lock the key in the box",
               "subgoals":[{"kind":"object_in","object_category":"key","target_category":"box"},
                           {"kind":"state_is","target_category":"box","state":"locked"}],
               "constraints":[{"order":[0,1]}]})
    }

    #[test]
    fn example_spec_accepted() {
        let spec = validate_task_spec(&example()).unwrap();
        assert_eq!(spec.subgoals.len(), 2);
        assert_eq!(spec.schema_version, "1");
        assert_eq!(spec.constraints, vec![Constraint::Order([0, 1])]);
    }

    #[test]
    fn empty_subgoals() {
        let err = validate_task_spec(&json!({"description":"x","subgoals":[]})).unwrap_err();
        let TaskError::Schema(e) = err else { panic!("{err:?}") };
        assert_eq!(e.to_string(), "/subgoals: empty");
    }

    #[test]
    fn cyclic_order() {
        let mut doc = example();
        doc["constraints"] = json!([{"order":[0,1]},{"order":[1,0]}]);
        assert_eq!(validate_task_spec(&doc), Err(TaskError::Cycle(CycleError { subgoals: vec![0, 1] })));
    }

    #[test]
    fn arity_errors_have_paths() {
        let cases = [
            (json!({"kind":"state_is","target_category":"box"}), "/subgoals/0/state"),
            (json!({"kind":"object_in","object_category":"key"}), "/subgoals/0/target_category"),
            (json!({"kind":"door_open","target_id":"door_1","object_category":"key"}), "/subgoals/0/object_category"),
            (json!({"kind":"door_open","target_id":"door_1","target_category":"door"}), "/subgoals/0/target_id"),
            (json!({"kind":"door_open","target_category":"door","state":"open"}), "/subgoals/0/state"),
            (json!({"kind":"teleport"}), "/subgoals/0/kind"),
        ];
        for (sg, path) in cases {
            let err = validate_task_spec(&json!({"description":"x","subgoals":[sg]})).unwrap_err();
            let TaskError::Schema(e) = err else { panic!("{err:?}") };
            assert_eq!(e.path, path, "{e}");
        }
    }

    #[test]
    fn bad_version_and_indices() {
        let mut doc = example();
        doc["schema_version"] = json!("2");
        assert!(matches!(validate_task_spec(&doc), Err(TaskError::Schema(e)) if e.path == "/schema_version"));
        let mut doc = example();
        doc["constraints"] = json!([{"order":[0,5]}]);
        assert!(matches!(validate_task_spec(&doc), Err(TaskError::Schema(e)) if e.path == "/constraints/0/order"));
    }

    #[test]
    fn requirements_of_example() {
        let spec = validate_task_spec(&example()).unwrap();
        let req = required_objects(&spec);
        use Affordance::*;
        assert_eq!(
            req,
            vec![
                ObjectRequirement { category: "key".into(), count: 1, affordances: Affordances::of(&[Graspable]), placement: None },
                ObjectRequirement {
                    category: "box".into(),
                    count: 1,
                    affordances: Affordances::of(&[Container, Lockable]),
                    placement: None
                },
            ]
        );
    }

    #[test]
    fn door_needs_only_openable() {
        let spec = validate_task_spec(&json!({"description":"x",
            "subgoals":[{"kind":"door_open","target_category":"door"}]}))
        .unwrap();
        let req = required_objects(&spec);
        assert_eq!(req.len(), 1);
        assert_eq!(req[0].affordances, Affordances::of(&[Affordance::Openable]));
    }

    #[test]
    fn duplicate_mentions_count_once_and_instances_count_twice() {
        let sg = json!({"kind":"held_by","object_category":"key"});
        let spec = validate_task_spec(&json!({"description":"x","subgoals":[sg.clone(), sg]})).unwrap();
        assert_eq!(required_objects(&spec)[0].count, 1);
        let spec = validate_task_spec(&json!({"description":"x","subgoals":[
            {"kind":"held_by","object_category":"key"},
            {"kind":"held_by","object_category":"key","object_instance":2}]}))
        .unwrap();
        assert_eq!(required_objects(&spec)[0].count, 2);
    }

    fn one_room() -> SceneGraph {
        SceneGraph::from_parts([RoomNode::new("room_1", "Hall")], [], [], [], 0)
    }

    #[test]
    fn instantiate_into_empty_room() {
        let spec = validate_task_spec(&example()).unwrap();
        let (g, goal) = instantiate(&spec, &one_room(), 3).unwrap();
        assert!(g.object(&"key_1".into()).is_some());
        assert!(g.object(&"box_1".into()).is_some());
        assert_eq!(
            goal.conjuncts,
            vec![
                Predicate::ObjectIn { object: "key_1".into(), container: "box_1".into() },
                Predicate::StateIs { object: "box_1".into(), state: StateValue::Locked },
            ]
        );
        assert_eq!(goal.ordering, vec![[0, 1]]);
        assert_eq!(g.revision(), 1);
        assert!(check_invariants(&g).is_empty());
        assert!(!goal.satisfied(&g));
    }

    #[test]
    fn instantiate_reuses_existing() {
        let spec = validate_task_spec(&example()).unwrap();
        let (once, _) = instantiate(&spec, &one_room(), 3).unwrap();
        let (twice, goal) = instantiate(&spec, &once, 99).unwrap();
        assert!(twice.content_eq(&once));
        assert_eq!(twice.revision(), once.revision() + 1);
        assert_eq!(goal.conjuncts[0], Predicate::ObjectIn { object: "key_1".into(), container: "box_1".into() });
    }

    #[test]
    fn instantiate_is_deterministic() {
        let spec = validate_task_spec(&example()).unwrap();
        let base = crate::escape::generate(&crate::escape::LevelConfig::new(1, 4)).unwrap().graph;
        let a = instantiate(&spec, &base, 7).unwrap();
        let b = instantiate(&spec, &base, 7).unwrap();
        assert_eq!(to_json(&a.0), to_json(&b.0));
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn unknown_room_hint() {
        let mut doc = example();
        doc["constraints"] = json!([{"place":{"subgoal":0,"role":"object","at":{"room":"cellar_9"}}}]);
        let spec = validate_task_spec(&doc).unwrap();
        assert_eq!(instantiate(&spec, &one_room(), 1), Err(InstantiationError::UnknownRoom("cellar_9".into())));
    }
}
