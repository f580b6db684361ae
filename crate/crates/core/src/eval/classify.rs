//! Trace-level failure classification.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{ErrorCode, Event};
use crate::harness::{EpisodeTrace, Terminal};
use crate::ids::NodeId;
use crate::scene::SceneGraph;

/// Arrivals in one room, with nothing newly seen in between, that make a loop.
pub const LOOP_VISITS: usize = 4;
/// Rejections for closed, locked, or wrongly unlocked targets.
pub const STATE_HITS: usize = 2;
/// Ticks in which two agents went for the same object.
pub const CONTESTED_TICKS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCategory {
    ExplorationLoop,
    PhantomGoal,
    StateAssumption,
    CoordinationFailure,
    ImpossibleSequence,
    ObjectConfusion,
    Unclassified,
}

impl FailureCategory {
    pub const ALL: [FailureCategory; 7] = [
        FailureCategory::ExplorationLoop,
        FailureCategory::PhantomGoal,
        FailureCategory::StateAssumption,
        FailureCategory::CoordinationFailure,
        FailureCategory::ImpossibleSequence,
        FailureCategory::ObjectConfusion,
        FailureCategory::Unclassified,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FailureCategory::ExplorationLoop => "exploration_loop",
            FailureCategory::PhantomGoal => "phantom_goal",
            FailureCategory::StateAssumption => "state_assumption",
            FailureCategory::CoordinationFailure => "coordination_failure",
            FailureCategory::ImpossibleSequence => "impossible_sequence",
            FailureCategory::ObjectConfusion => "object_confusion",
            FailureCategory::Unclassified => "unclassified",
        }
    }
}

impl fmt::Display for FailureCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("the episode succeeded; only failures are classified")]
    NotAFailure,
    #[error("trace incomplete: {0}")]
    TraceIncomplete(String),
}

/// Assigns a failed episode to the first rule that fires, in the order
/// exploration loop, phantom goal, coordination failure, state assumption,
/// impossible sequence, object confusion.
pub fn classify_failure(trace: &EpisodeTrace, final_graph: &SceneGraph) -> Result<FailureCategory, ClassifyError> {
    if trace.terminal == Terminal::Success {
        return Err(ClassifyError::NotAFailure);
    }
    check_complete(trace)?;
    let rules: [(FailureCategory, fn(&EpisodeTrace, &SceneGraph) -> bool); 6] = [
        (FailureCategory::ExplorationLoop, |t, _| exploration_loop(t)),
        (FailureCategory::PhantomGoal, |t, _| count_codes(t, &[ErrorCode::UnknownObject]) >= 1),
        (FailureCategory::CoordinationFailure, |t, _| coordination_failure(t)),
        (FailureCategory::StateAssumption, |t, _| {
            count_codes(t, &[ErrorCode::ClosedContainer, ErrorCode::Locked, ErrorCode::WrongKey, ErrorCode::WrongCode])
                >= STATE_HITS
        }),
        (FailureCategory::ImpossibleSequence, |t, _| {
            count_codes(t, &[ErrorCode::NotHeld, ErrorCode::HandsFull, ErrorCode::InvalidTarget, ErrorCode::NotAffordant])
                >= 1
        }),
        (FailureCategory::ObjectConfusion, object_confusion),
    ];
    Ok(rules.iter().find(|(_, fires)| fires(trace, final_graph)).map_or(FailureCategory::Unclassified, |(c, _)| *c))
}

/// Every tick before `ticks` has exactly one step per agent, and no step
/// lies outside that range or belongs to an unknown agent.
fn check_complete(t: &EpisodeTrace) -> Result<(), ClassifyError> {
    let incomplete = |m: String| Err(ClassifyError::TraceIncomplete(m));
    if t.policies.is_empty() {
        return incomplete("no agents".into());
    }
    if t.ticks > t.budget {
        return incomplete(format!("{} ticks exceed the budget of {}", t.ticks, t.budget));
    }
    if t.terminal == Terminal::PolicyError && t.policy_error.is_none() {
        return incomplete("policy-error terminal without the error".into());
    }
    let mut per_tick: BTreeMap<u64, BTreeSet<&NodeId>> = BTreeMap::new();
    for s in &t.steps {
        if !t.policies.contains_key(&s.agent_id) {
            return incomplete(format!("step for unknown agent {}", s.agent_id));
        }
        if s.tick >= t.ticks {
            return incomplete(format!("step at tick {} beyond the {} recorded ticks", s.tick, t.ticks));
        }
        if !per_tick.entry(s.tick).or_default().insert(&s.agent_id) {
            return incomplete(format!("agent {} acts twice at tick {}", s.agent_id, s.tick));
        }
    }
    for tick in 0..t.ticks {
        let n = per_tick.get(&tick).map_or(0, BTreeSet::len);
        if n != t.policies.len() {
            return incomplete(format!("tick {tick} has {n} of {} steps", t.policies.len()));
        }
    }
    Ok(())
}

fn count_codes(t: &EpisodeTrace, codes: &[ErrorCode]) -> usize {
    t.steps.iter().filter(|s| s.outcome.code().is_some_and(|c| codes.contains(&c))).count()
}

/// Per agent: some room is entered `LOOP_VISITS` times in a row with no
/// first sighting between consecutive entries.
fn exploration_loop(t: &EpisodeTrace) -> bool {
    t.agents().any(|agent| {
        let mut runs: BTreeMap<&NodeId, usize> = BTreeMap::new();
        // Sightings since the last entry into each room.
        let mut fresh: BTreeMap<&NodeId, bool> = BTreeMap::new();
        for s in t.steps.iter().filter(|s| &s.agent_id == agent) {
            if !s.first_seen.is_empty() {
                fresh.values_mut().for_each(|f| *f = true);
            }
            let arrived = s.outcome.events.iter().find_map(|e| match e {
                Event::Moved { agent: a, room } if a == agent => Some(room),
                _ => None,
            });
            let Some(room) = arrived else { continue };
            let run = runs.entry(room).or_insert(0);
            *run = if fresh.get(room).copied().unwrap_or(true) { 1 } else { *run + 1 };
            fresh.insert(room, false);
            if *run >= LOOP_VISITS {
                return true;
            }
        }
        false
    })
}

fn coordination_failure(t: &EpisodeTrace) -> bool {
    if t.policies.len() < 2 {
        return false;
    }
    let mut targets: BTreeMap<u64, BTreeMap<&NodeId, usize>> = BTreeMap::new();
    for s in &t.steps {
        if let Some(o) = s.action.primary_object() {
            *targets.entry(s.tick).or_default().entry(o).or_default() += 1;
        }
    }
    let contested = targets.values().filter(|by| by.values().any(|n| *n >= 2)).count();
    contested >= CONTESTED_TICKS || assignments_neglected(t)
}

/// Every agent with assigned conjuncts left all of them untouched for more
/// than half the budget. A conjunct is touched by acting on an object it
/// names or by it becoming satisfied.
fn assignments_neglected(t: &EpisodeTrace) -> bool {
    let mut assigned: BTreeMap<&NodeId, Vec<usize>> = BTreeMap::new();
    for (i, a) in &t.goal.assignments {
        if t.policies.contains_key(a) && *i < t.goal.conjuncts.len() {
            assigned.entry(a).or_default().push(*i);
        }
    }
    if assigned.len() < 2 || 2 * t.ticks <= t.budget {
        return false;
    }
    assigned.iter().all(|(agent, conjuncts)| {
        let names: BTreeSet<&NodeId> = conjuncts.iter().flat_map(|i| t.goal.conjuncts[*i].ids()).collect();
        let acted = t
            .steps
            .iter()
            .filter(|s| &s.agent_id == *agent && s.action.objects().iter().any(|o| names.contains(o)))
            .map(|s| s.tick)
            .min();
        let satisfied = conjuncts.iter().filter_map(|i| t.history.get(*i)).map(|at| at.tick).min();
        let first = acted.into_iter().chain(satisfied).min();
        first.is_none_or(|tick| 2 * tick > t.budget)
    })
}

/// Some agent successfully handled an object that is not named by the goal
/// but shares a category with one that is.
fn object_confusion(t: &EpisodeTrace, g: &SceneGraph) -> bool {
    let named: BTreeSet<&NodeId> = t.goal.conjuncts.iter().flat_map(|p| p.ids()).collect();
    let categories: BTreeSet<&str> = named.iter().filter_map(|id| g.object(id)).map(|o| o.category.as_str()).collect();
    t.steps.iter().filter(|s| s.outcome.is_ok()).any(|s| {
        s.action.objects().into_iter().any(|o| {
            !named.contains(o) && g.object(o).is_some_and(|x| categories.contains(x.category.as_str()))
        })
    })
}
