//! Episode execution.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::action::{apply_in_place, legal_actions, Action, Outcome};
use crate::goal::GoalSpec;
use crate::harness::goal_check::{goal_check, GoalHistory, GoalReport};
use crate::harness::{goal_for, Policy, PolicyError, PolicyMemory, Turn};
use crate::ids::NodeId;
use crate::scene::{observe, visibility_violations, Observation, SceneGraph};

pub const TRACE_SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub tick: u64,
    pub agent_id: NodeId,
    pub observation_digest: String,
    /// Objects this agent saw for the first time in this step's observation.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub first_seen: Vec<NodeId>,
    pub action: Action,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    Success,
    BudgetExhausted,
    PolicyError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFailure {
    pub tick: u64,
    pub agent_id: NodeId,
    pub error: PolicyError,
}

/// One episode, serialized as a single JSON document. Wall-clock time is
/// kept out of the document so identical runs serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub schema_version: String,
    pub task_id: String,
    pub seed: u64,
    pub budget: u64,
    /// Policy name per agent, in acting order.
    pub policies: BTreeMap<NodeId, String>,
    pub goal: GoalSpec,
    pub steps: Vec<Step>,
    pub terminal: Terminal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy_error: Option<PolicyFailure>,
    /// Ticks in which moves were applied.
    pub ticks: u64,
    pub history: GoalHistory,
    pub goal_report: GoalReport,
    /// Observations that showed something the visibility rule forbids.
    pub visibility_violations: usize,
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl EpisodeTrace {
    pub fn success(&self) -> bool {
        self.terminal == Terminal::Success
    }

    pub fn agents(&self) -> impl Iterator<Item = &NodeId> {
        self.policies.keys()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EpisodeError {
    #[error("agent {0} has no policy")]
    MissingPolicy(NodeId),
    #[error("policy given for {0}, which is not an agent in the scene")]
    UnknownAgent(NodeId),
    #[error("budget must be at least one tick")]
    ZeroBudget,
    #[error("goal: {0}")]
    Goal(String),
}

/// SHA-256 over the observation's JSON, truncated to 128 bits.
pub fn observation_digest(obs: &Observation) -> String {
    let bytes = serde_json::to_vec(obs).expect("observations serialize");
    Sha256::digest(&bytes)[..16].iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs one episode. Each tick every agent (in id order) observes the
/// pre-tick world and decides; the moves are then applied in the same order,
/// and the goal history is updated after each move. Stops when the goal
/// check passes, the budget runs out, or a policy fails. Returns the trace
/// and the final world.
pub fn run_episode(
    task_id: &str,
    room: &SceneGraph,
    goal: &GoalSpec,
    policies: &BTreeMap<NodeId, Box<dyn Policy>>,
    budget: u64,
    seed: u64,
) -> Result<(EpisodeTrace, SceneGraph), EpisodeError> {
    let started = Instant::now();
    if budget == 0 {
        return Err(EpisodeError::ZeroBudget);
    }
    goal.check().map_err(|e| EpisodeError::Goal(e.to_string()))?;
    let agents: Vec<NodeId> = room.agent_ids().cloned().collect();
    if let Some(a) = agents.iter().find(|a| !policies.contains_key(*a)) {
        return Err(EpisodeError::MissingPolicy(a.clone()));
    }
    if let Some(a) = policies.keys().find(|a| room.agent(a).is_none()) {
        return Err(EpisodeError::UnknownAgent(a.clone()));
    }
    let subgoals: BTreeMap<&NodeId, GoalSpec> = agents.iter().map(|a| (a, goal_for(goal, a))).collect();

    let mut g = room.clone();
    let mut history = GoalHistory::new(goal);
    history.update(goal, &g, 0, 0, None);
    let mut memories: BTreeMap<NodeId, PolicyMemory> = BTreeMap::new();
    let mut last: BTreeMap<NodeId, Outcome> = BTreeMap::new();
    let mut seen: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    let mut steps = Vec::new();
    let mut violations = 0;
    let mut failure = None;
    let mut ticks = 0;

    'ticks: for tick in 0..budget {
        if goal_check(&g, goal, &history).pass {
            break;
        }
        let mut moves = Vec::with_capacity(agents.len());
        for a in &agents {
            let obs = observe(&g, a).expect("scene agents are placed");
            violations += visibility_violations(&g, &obs).len();
            let legal = legal_actions(&g, a).expect("scene agents are placed");
            let capacity = g.agent(a).map_or(1, |x| x.capacity);
            let turn = Turn { tick, observation: &obs, legal: &legal, capacity, last_outcome: last.get(a) };
            let known = seen.entry(a.clone()).or_default();
            let fresh: Vec<NodeId> =
                obs.visible_objects.iter().filter(|o| known.insert(o.id.clone())).map(|o| o.id.clone()).collect();
            let memory = memories.remove(a).unwrap_or_default();
            match policies[a].decide(&turn, &subgoals[a], memory) {
                Ok((action, mut memory)) => {
                    memory.turns += 1;
                    memories.insert(a.clone(), memory);
                    moves.push((a, action, observation_digest(&obs), fresh));
                }
                Err(error) => {
                    failure = Some(PolicyFailure { tick, agent_id: a.clone(), error });
                    break 'ticks;
                }
            }
        }
        for (seq, (a, action, digest, first_seen)) in moves.into_iter().enumerate() {
            let outcome = apply_in_place(&mut g, a, &action).expect("scene agents are placed");
            history.update(goal, &g, tick, seq as u32 + 1, Some(a));
            last.insert(a.clone(), outcome.clone());
            steps.push(Step { tick, agent_id: a.clone(), observation_digest: digest, first_seen, action, outcome });
        }
        ticks = tick + 1;
    }

    let goal_report = goal_check(&g, goal, &history);
    let terminal = if failure.is_some() {
        Terminal::PolicyError
    } else if goal_report.pass {
        Terminal::Success
    } else {
        Terminal::BudgetExhausted
    };
    let trace = EpisodeTrace {
        schema_version: TRACE_SCHEMA_VERSION.into(),
        task_id: task_id.into(),
        seed,
        budget,
        policies: agents.iter().map(|a| (a.clone(), policies[a].name().to_string())).collect(),
        goal: goal.clone(),
        steps,
        terminal,
        policy_error: failure,
        ticks,
        history,
        goal_report,
        visibility_violations: violations,
        wall_clock: started.elapsed(),
    };
    Ok((trace, g))
}
