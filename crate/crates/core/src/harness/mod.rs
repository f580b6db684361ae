//! Policies, episode execution, goal checking, and subgoal allocation.

mod allocate;
mod baseline;
mod belief;
mod episode;
mod goal_check;
mod llm;
mod oracle;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{Action, Outcome};
use crate::goal::GoalSpec;
use crate::ids::NodeId;
use crate::scene::{DoorView, Observation, VisibleObject};

pub use allocate::{allocate_subgoals, room_distance};
pub use baseline::{random_policy, scripted_policy, RandomPolicy, ScriptedPolicy};
pub use belief::belief_graph;
pub use episode::{
    observation_digest, run_episode, EpisodeError, EpisodeTrace, PolicyFailure, Step, Terminal, TRACE_SCHEMA_VERSION,
};
pub use goal_check::{goal_check, ConjunctReport, GoalHistory, GoalReport, SatisfiedAt};
pub use llm::{
    extract_action, llm_policy, LlmConfigError, LlmEndpointConfig, LlmPolicy, DEFAULT_PROMPT_TEMPLATE, SYSTEM_PROMPT,
    TRANSCRIPT_WINDOW,
};
pub use oracle::{oracle_policy, OraclePolicy};

/// Everything a policy sees on its turn. The legal-action menu is part of
/// the observation surface: it is what an agent would be offered as tools.
#[derive(Debug, Clone, Copy)]
pub struct Turn<'a> {
    pub tick: u64,
    pub observation: &'a Observation,
    pub legal: &'a [Action],
    /// How many objects the agent can hold at once.
    pub capacity: usize,
    /// Outcome of this agent's previous action, if any.
    pub last_outcome: Option<&'a Outcome>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum PolicyError {
    #[error("endpoint error: {0}")]
    Endpoint(String),
    #[error("malformed decision: {0}")]
    Malformed(String),
}

pub trait Policy: Send + Sync {
    fn name(&self) -> &str;

    fn decide(&self, turn: &Turn<'_>, goal: &GoalSpec, memory: PolicyMemory) -> Result<(Action, PolicyMemory), PolicyError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoorBelief {
    /// The room the door was first seen from.
    pub seen_from: NodeId,
    /// The two rooms it joins.
    pub rooms: [NodeId; 2],
    pub view: DoorView,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseFailure {
    pub tick: u64,
    pub attempts: u32,
    pub error: String,
}

/// A policy's private, serializable memory. Nothing here is shared between
/// agents.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyMemory {
    /// Decisions taken so far.
    pub turns: u64,
    /// Arrivals per room; the starting room counts once.
    pub visits: BTreeMap<NodeId, u32>,
    /// Last observed room.
    pub room: Option<NodeId>,
    /// Last seen whereabouts and appearance of every object, possibly stale.
    pub beliefs: BTreeMap<NodeId, VisibleObject>,
    pub doors: BTreeMap<NodeId, DoorBelief>,
    /// Known rooms with their names (empty until visited).
    pub rooms: BTreeMap<NodeId, String>,
    pub pending: Vec<Action>,
    /// Belief fingerprint expected after the next pending action.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<String>,
    /// Clue objects judged deceptive.
    pub discredited: BTreeSet<NodeId>,
    /// Direct contents of containers when first seen open.
    pub inspected: BTreeMap<NodeId, Vec<NodeId>>,
    pub rejected_codes: BTreeMap<NodeId, BTreeSet<String>>,
    /// Arrangement targets already attempted.
    pub arranged: BTreeSet<NodeId>,
    pub transcript: Vec<TranscriptEntry>,
    pub parse_failures: Vec<ParseFailure>,
}

/// The part of `goal` an agent is responsible for: its assigned conjuncts
/// plus unassigned ones, with ordering and assignments re-indexed.
pub fn goal_for(goal: &GoalSpec, agent: &NodeId) -> GoalSpec {
    if goal.assignments.is_empty() {
        return goal.clone();
    }
    let keep: Vec<usize> =
        (0..goal.conjuncts.len()).filter(|i| goal.assignments.get(i).is_none_or(|a| a == agent)).collect();
    let remap: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(new, old)| (*old, new)).collect();
    GoalSpec {
        description: goal.description.clone(),
        conjuncts: keep.iter().map(|&i| goal.conjuncts[i].clone()).collect(),
        ordering: goal
            .ordering
            .iter()
            .filter_map(|[a, b]| Some([*remap.get(a)?, *remap.get(b)?]))
            .collect(),
        assignments: goal.assignments.iter().filter_map(|(i, a)| Some((*remap.get(i)?, a.clone()))).collect(),
    }
}
