//! Goal completion against world state and satisfaction history.

use serde::{Deserialize, Serialize};

use crate::goal::{GoalSpec, Predicate};
use crate::ids::NodeId;
use crate::scene::SceneGraph;

/// When a conjunct first held. `seq` orders moves within a tick (0 is the
/// state before any move of the tick); `agent` is the mover whose action
/// made it hold, absent when it held from the start.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SatisfiedAt {
    pub tick: u64,
    pub seq: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<NodeId>,
}

impl SatisfiedAt {
    fn key(&self) -> (u64, u32) {
        (self.tick, self.seq)
    }
}

/// First-satisfied record per conjunct, index-aligned with the goal.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GoalHistory(pub Vec<Option<SatisfiedAt>>);

impl GoalHistory {
    pub fn new(goal: &GoalSpec) -> Self {
        GoalHistory(vec![None; goal.conjuncts.len()])
    }

    /// Records every conjunct that holds in `g` for the first time.
    pub fn update(&mut self, goal: &GoalSpec, g: &SceneGraph, tick: u64, seq: u32, agent: Option<&NodeId>) {
        self.0.resize(goal.conjuncts.len(), None);
        for (slot, p) in self.0.iter_mut().zip(&goal.conjuncts) {
            if slot.is_none() && p.holds(g) {
                *slot = Some(SatisfiedAt { tick, seq, agent: agent.cloned() });
            }
        }
    }

    pub fn get(&self, i: usize) -> Option<&SatisfiedAt> {
        self.0.get(i).and_then(Option::as_ref)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjunctReport {
    pub index: usize,
    pub predicate: Predicate,
    pub holds: bool,
    pub ordering_ok: bool,
    pub assignment_ok: bool,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_satisfied: Option<SatisfiedAt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalReport {
    pub pass: bool,
    /// Share of passing conjuncts (1.0 for an empty goal).
    pub fraction: f64,
    pub conjuncts: Vec<ConjunctReport>,
}

/// Evaluates each conjunct on `g` and against `history`. A conjunct with a
/// predecessor passes only if every predecessor first held strictly
/// earlier; an assigned conjunct passes only if its assignee's move made it
/// hold (or it held from the start).
pub fn goal_check(g: &SceneGraph, goal: &GoalSpec, history: &GoalHistory) -> GoalReport {
    let conjuncts: Vec<ConjunctReport> = goal
        .conjuncts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let holds = p.holds(g);
            let mine = history.get(i);
            let ordering_ok = goal.predecessors(i).all(|j| match (history.get(j), mine) {
                (Some(before), Some(after)) => before.key() < after.key(),
                _ => false,
            });
            let assignment_ok = match goal.assignments.get(&i) {
                None => true,
                Some(who) => mine.is_some_and(|s| s.agent.as_ref().is_none_or(|a| a == who)),
            };
            ConjunctReport {
                index: i,
                predicate: p.clone(),
                holds,
                ordering_ok,
                assignment_ok,
                pass: holds && ordering_ok && assignment_ok,
                first_satisfied: mine.cloned(),
            }
        })
        .collect();
    let passed = conjuncts.iter().filter(|c| c.pass).count();
    let fraction = if conjuncts.is_empty() { 1.0 } else { passed as f64 / conjuncts.len() as f64 };
    GoalReport { pass: passed == conjuncts.len(), fraction, conjuncts }
}
