use std::collections::{BTreeSet, HashMap, VecDeque};

use rustc_hash::{FxHashMap, FxHashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{apply_in_place, legal_actions, Action};
use crate::escape::{PlanStep, SolutionCertificate};
use crate::goal::GoalSpec;
use crate::ids::NodeId;
use crate::knowledge::{derive, permits, secret_containers, KnowledgeFilter};
use crate::scene::{RelationKind, SceneGraph};

pub const DEFAULT_BUDGET: usize = 400_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Maximum number of distinct states to visit.
    pub budget: usize,
    /// Acting agents, in tie-break order. Defaults to every agent by id.
    #[serde(default)]
    pub agents: Option<Vec<NodeId>>,
    #[serde(default)]
    pub knowledge: KnowledgeFilter,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { budget: DEFAULT_BUDGET, agents: None, knowledge: KnowledgeFilter::All }
    }
}

impl SolveOptions {
    pub fn with_budget(budget: usize) -> Self {
        SolveOptions { budget, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SolveError {
    #[error("unsolvable: no plan reaches the goal ({explored} states explored)")]
    Unsolvable { explored: usize },
    #[error("state budget exceeded after {explored} states")]
    BudgetExceeded { explored: usize },
    #[error("unknown agent {agent}")]
    UnknownAgent { agent: NodeId },
}

/// Shortest plan reaching `goal` (all conjuncts; ordering is not enforced).
pub fn solve(g: &SceneGraph, goal: &GoalSpec, opts: &SolveOptions) -> Result<SolutionCertificate, SolveError> {
    let plan = search(g, opts, |s| goal.satisfied(s))?;
    Ok(SolutionCertificate { optimal_length: plan.len(), plan })
}

/// Identifies a world state for duplicate detection: location relations,
/// object states, and each agent's set of read clues.
pub fn canonical_key<S: std::hash::BuildHasher>(g: &SceneGraph, index: &HashMap<NodeId, u16, S>) -> Vec<u16> {
    let mut key = Vec::with_capacity(64);
    for r in g.relations() {
        if r.kind != RelationKind::Connects {
            key.extend([index[&r.src], r.kind as u16, index[&r.dst]]);
        }
    }
    key.push(u16::MAX);
    for o in g.objects() {
        let p = o.states.pack();
        key.push(u16::from(p[0]) << 8 | u16::from(p[1]));
        key.push(u16::from(p[2]) << 8 | u16::from(p[3]));
    }
    for a in g.agents() {
        key.push(u16::MAX);
        let mut read: Vec<u16> = a.read_clues.iter().map(|rc| index[&rc.object]).collect();
        read.sort_unstable();
        key.extend(read);
    }
    key
}

fn id_index(g: &SceneGraph) -> FxHashMap<NodeId, u16> {
    let ids = g.rooms().map(|r| &r.id).chain(g.objects().map(|o| &o.id)).chain(g.agents().map(|a| &a.id));
    ids.enumerate().map(|(i, id)| (id.clone(), i as u16)).collect()
}

/// Knowledge-respecting successors of `g`, in tie-break order.
pub fn successors(
    g: &SceneGraph,
    agents: &[NodeId],
    filter: &KnowledgeFilter,
    secrets: &BTreeSet<NodeId>,
) -> Result<Vec<(PlanStep, SceneGraph)>, SolveError> {
    successors_where(g, agents, filter, secrets, &|_: &SceneGraph, _: &Action| true)
}

fn successors_where(
    g: &SceneGraph,
    agents: &[NodeId],
    filter: &KnowledgeFilter,
    secrets: &BTreeSet<NodeId>,
    keep: &dyn Fn(&SceneGraph, &Action) -> bool,
) -> Result<Vec<(PlanStep, SceneGraph)>, SolveError> {
    let k = derive(g, filter);
    let mut out = Vec::new();
    for agent in agents {
        let acts = legal_actions(g, agent).map_err(|_| SolveError::UnknownAgent { agent: agent.clone() })?;
        for action in acts {
            if !keep(g, &action) || !permits(g, &k, secrets, &action) {
                continue;
            }
            let mut next = g.clone();
            let outcome = apply_in_place(&mut next, agent, &action).expect("agent exists");
            debug_assert!(outcome.is_ok());
            out.push((PlanStep { agent: agent.clone(), action }, next));
        }
    }
    Ok(out)
}

/// Breadth-first search with a caller-supplied goal test, checked when a
/// state is generated.
pub fn search(
    g: &SceneGraph,
    opts: &SolveOptions,
    is_goal: impl Fn(&SceneGraph) -> bool,
) -> Result<Vec<PlanStep>, SolveError> {
    search_where(g, opts, |_, _| true, is_goal)
}

/// [`search`] restricted to actions accepted by `keep`.
pub fn search_where(
    g: &SceneGraph,
    opts: &SolveOptions,
    keep: impl Fn(&SceneGraph, &Action) -> bool,
    is_goal: impl Fn(&SceneGraph) -> bool,
) -> Result<Vec<PlanStep>, SolveError> {
    if is_goal(g) {
        return Ok(Vec::new());
    }
    let agents: Vec<NodeId> = match &opts.agents {
        Some(a) => a.clone(),
        None => g.agent_ids().cloned().collect(),
    };
    let secrets = secret_containers(g);
    let index = id_index(g);

    // Arena of (parent, step) for plan reconstruction.
    let mut arena: Vec<(usize, Option<PlanStep>)> = vec![(usize::MAX, None)];
    let mut seen: FxHashSet<Vec<u16>> = FxHashSet::default();
    seen.insert(canonical_key(g, &index));
    let mut frontier: VecDeque<(usize, SceneGraph)> = VecDeque::from([(0, g.clone())]);

    while let Some((node, state)) = frontier.pop_front() {
        for (step, next) in successors_where(&state, &agents, &opts.knowledge, &secrets, &keep)? {
            if !seen.insert(canonical_key(&next, &index)) {
                continue;
            }
            arena.push((node, Some(step)));
            let id = arena.len() - 1;
            if is_goal(&next) {
                return Ok(unwind(&arena, id));
            }
            if seen.len() > opts.budget {
                return Err(SolveError::BudgetExceeded { explored: seen.len() });
            }
            frontier.push_back((id, next));
        }
    }
    Err(SolveError::Unsolvable { explored: seen.len() })
}

fn unwind(arena: &[(usize, Option<PlanStep>)], mut id: usize) -> Vec<PlanStep> {
    let mut plan = Vec::new();
    while let (parent, Some(step)) = &arena[id] {
        plan.push(step.clone());
        id = *parent;
    }
    plan.reverse();
    plan
}
