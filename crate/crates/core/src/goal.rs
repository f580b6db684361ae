//! Goal predicates and goal specifications.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::NodeId;
use crate::scene::{Relation, SceneGraph, StateValue};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Predicate {
    ObjectIn { object: NodeId, container: NodeId },
    ObjectOn { object: NodeId, surface: NodeId },
    StateIs { object: NodeId, state: StateValue },
    DoorOpen { door: NodeId },
    /// Some agent has read the clue carried by `clue`.
    ClueSolved { clue: NodeId },
    /// `object` is held by `agent`, or by anyone when `agent` is absent.
    HeldBy {
        object: NodeId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        agent: Option<NodeId>,
    },
}

impl Predicate {
    pub fn holds(&self, g: &SceneGraph) -> bool {
        match self {
            Predicate::ObjectIn { object, container } => {
                g.has_relation(&Relation::inside(object.clone(), container.clone()))
            }
            Predicate::ObjectOn { object, surface } => g.has_relation(&Relation::on_top(object.clone(), surface.clone())),
            Predicate::StateIs { object, state } => g.object(object).is_some_and(|o| o.states.is(*state)),
            Predicate::DoorOpen { door } => g.object(door).is_some_and(|o| o.states.is(StateValue::Open)),
            Predicate::ClueSolved { clue } => g.agents().any(|a| a.has_read(clue)),
            Predicate::HeldBy { object, agent } => match agent {
                Some(a) => g.has_relation(&Relation::held_by(object.clone(), a.clone())),
                None => g.agents().any(|a| a.holding.contains(object)),
            },
        }
    }

    /// The object whose whereabouts matter most for achieving the predicate.
    pub fn focus(&self) -> &NodeId {
        match self {
            Predicate::ObjectIn { object, .. }
            | Predicate::ObjectOn { object, .. }
            | Predicate::StateIs { object, .. }
            | Predicate::HeldBy { object, .. } => object,
            Predicate::DoorOpen { door } => door,
            Predicate::ClueSolved { clue } => clue,
        }
    }

    /// Every node id the predicate mentions.
    pub fn ids(&self) -> Vec<&NodeId> {
        match self {
            Predicate::ObjectIn { object, container } => vec![object, container],
            Predicate::ObjectOn { object, surface } => vec![object, surface],
            Predicate::HeldBy { object, agent } => std::iter::once(object).chain(agent.as_ref()).collect(),
            other => vec![other.focus()],
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::ObjectIn { object, container } => write!(f, "inside({object}, {container})"),
            Predicate::ObjectOn { object, surface } => write!(f, "on_top({object}, {surface})"),
            Predicate::StateIs { object, state } => write!(f, "{state}({object})"),
            Predicate::DoorOpen { door } => write!(f, "open({door})"),
            Predicate::ClueSolved { clue } => write!(f, "read({clue})"),
            Predicate::HeldBy { object, agent: Some(a) } => write!(f, "held_by({object}, {a})"),
            Predicate::HeldBy { object, agent: None } => write!(f, "held({object})"),
        }
    }
}

/// A conjunction of predicates with an optional temporal order
/// (`[before, after]` index pairs) and optional agent assignments.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalSpec {
    #[serde(default)]
    pub description: String,
    pub conjuncts: Vec<Predicate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ordering: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub assignments: BTreeMap<usize, NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GoalError {
    #[error("ordering pair {0:?} names a conjunct that does not exist")]
    BadIndex([usize; 2]),
    #[error("temporal ordering is cyclic through conjuncts {0:?}")]
    Cycle(Vec<usize>),
    #[error("assignment for conjunct {0} is out of range")]
    BadAssignment(usize),
}

impl GoalSpec {
    pub fn single(p: Predicate, description: impl Into<String>) -> Self {
        GoalSpec { description: description.into(), conjuncts: vec![p], ..Default::default() }
    }

    /// All conjuncts hold in `g`, ignoring order and assignment.
    pub fn satisfied(&self, g: &SceneGraph) -> bool {
        self.conjuncts.iter().all(|p| p.holds(g))
    }

    /// Direct predecessors of conjunct `i`.
    pub fn predecessors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.ordering.iter().filter(move |[_, b]| *b == i).map(|[a, _]| *a)
    }

    pub fn check(&self) -> Result<(), GoalError> {
        let n = self.conjuncts.len();
        for pair in &self.ordering {
            if pair[0] >= n || pair[1] >= n {
                return Err(GoalError::BadIndex(*pair));
            }
        }
        if let Some(&i) = self.assignments.keys().find(|&&i| i >= n) {
            return Err(GoalError::BadAssignment(i));
        }
        match find_cycle(n, &self.ordering) {
            Some(c) => Err(GoalError::Cycle(c)),
            None => Ok(()),
        }
    }
}

/// Returns the members of some cycle (sorted), if the order has one.
pub fn find_cycle(n: usize, edges: &[[usize; 2]]) -> Option<Vec<usize>> {
    let mut indeg = vec![0usize; n];
    for [_, b] in edges {
        indeg[*b] += 1;
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut done = BTreeSet::new();
    while let Some(i) = ready.pop() {
        done.insert(i);
        for [a, b] in edges {
            if *a == i {
                indeg[*b] -= 1;
                if indeg[*b] == 0 {
                    ready.push(*b);
                }
            }
        }
    }
    if done.len() == n {
        None
    } else {
        Some((0..n).filter(|i| !done.contains(i)).collect())
    }
}
