//! Benchmark suites and their execution.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::escape::{generate, solve, LevelConfig, SolveOptions};
use crate::eval::report::{aggregate, BenchmarkReport, EpisodeSummary};
use crate::eval::scenario::{household, HouseholdTask};
use crate::eval::classify_failure;
use crate::par;
use crate::goal::GoalSpec;
use crate::harness::{
    llm_policy, oracle_policy, random_policy, run_episode, EpisodeTrace, LlmEndpointConfig, Policy, DEFAULT_PROMPT_TEMPLATE,
};
use crate::ids::NodeId;
use crate::scene::{AgentNode, Node, Relation, SceneGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    Escape { level: u8 },
    Household { task: HouseholdTask },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Ticks(u64),
    /// A multiple of the optimal plan length, at least one tick.
    TimesOptimal(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskDef {
    pub name: String,
    pub scenario: Scenario,
    #[serde(default = "one")]
    pub agents: usize,
    pub budget: Budget,
    pub seeds: Vec<u64>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSuite {
    pub tasks: Vec<TaskDef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SuiteError {
    #[error("task {0} has no seeds")]
    NoSeeds(String),
    #[error("task name {0} is used twice")]
    DuplicateName(String),
    #[error("task {task}: {reason}")]
    Invalid { task: String, reason: String },
}

impl BenchmarkSuite {
    pub fn validate(&self) -> Result<(), SuiteError> {
        let mut names = BTreeSet::new();
        for t in &self.tasks {
            if !names.insert(&t.name) {
                return Err(SuiteError::DuplicateName(t.name.clone()));
            }
            if t.seeds.is_empty() {
                return Err(SuiteError::NoSeeds(t.name.clone()));
            }
            let invalid = |reason: String| Err(SuiteError::Invalid { task: t.name.clone(), reason });
            if !(1..=2).contains(&t.agents) {
                return invalid(format!("agent count must be 1 or 2, got {}", t.agents));
            }
            match &t.scenario {
                Scenario::Escape { level } if !(1..=4).contains(level) => {
                    return invalid(format!("level must be 1-4, got {level}"));
                }
                Scenario::Household { task } if task.agents() > t.agents => {
                    return invalid(format!("{} needs {} agents", task.title(), task.agents()));
                }
                _ => {}
            }
            if matches!(t.budget, Budget::Ticks(0) | Budget::TimesOptimal(0)) {
                return invalid("budget must be positive".into());
            }
        }
        Ok(())
    }

    /// Escape levels 1 to 4 plus the five household tasks, with `seeds`
    /// seeds each and a budget of four times the optimal plan.
    pub fn standard(seeds: u64) -> Self {
        let seeds: Vec<u64> = (0..seeds).collect();
        let mut tasks: Vec<TaskDef> = (1..=4)
            .map(|level| TaskDef {
                name: format!("Escape L{level}"),
                scenario: Scenario::Escape { level },
                agents: 1,
                budget: Budget::TimesOptimal(4),
                seeds: seeds.clone(),
            })
            .collect();
        tasks.extend(HouseholdTask::ALL.iter().map(|t| TaskDef {
            name: format!("{} ({})", t.title(), if t.agents() > 1 { "M" } else { "S" }),
            scenario: Scenario::Household { task: *t },
            agents: t.agents(),
            budget: Budget::TimesOptimal(4),
            seeds: seeds.clone(),
        }));
        BenchmarkSuite { tasks }
    }
}

/// A world and goal ready to run, with its tick budget.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub graph: SceneGraph,
    pub goal: GoalSpec,
    pub budget: u64,
}

/// Builds the episode for one task and seed.
pub fn prepare(task: &TaskDef, seed: u64) -> Result<Prepared, String> {
    let (graph, goal, optimal) = match &task.scenario {
        Scenario::Escape { level } => {
            let room = generate(&LevelConfig::new(*level, seed)).map_err(|e| e.to_string())?;
            let mut g = room.graph;
            for i in 2..=task.agents {
                let id = NodeId::from(format!("agent_{i}").as_str());
                let start = g.agent_room(&"agent_1".into()).cloned().expect("generated rooms place agent_1");
                g.add_node(Node::Agent(AgentNode::new(id.clone())), Some(Relation::in_room(id, start)))
                    .map_err(|e| e.to_string())?;
            }
            (g, room.goal, room.certificate.optimal_length)
        }
        Scenario::Household { task: h } => {
            let (g, goal) = household(*h, seed, task.agents).map_err(|e| e.to_string())?;
            let optimal = match task.budget {
                // Single-agent optimum: an upper bound on what a team needs.
                Budget::TimesOptimal(_) => {
                    let opts = SolveOptions { agents: Some(vec!["agent_1".into()]), ..Default::default() };
                    solve(&g, &goal, &opts).map_err(|e| e.to_string())?.optimal_length
                }
                Budget::Ticks(_) => 0,
            };
            (g, goal, optimal)
        }
    };
    let budget = match task.budget {
        Budget::Ticks(n) => n,
        Budget::TimesOptimal(k) => (k * optimal as u64).max(1),
    };
    Ok(Prepared { graph, goal, budget })
}

/// A policy family; one instance is built per agent and episode.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyKind {
    Oracle,
    Random,
    Llm { config: LlmEndpointConfig, template: String },
}

impl PolicyKind {
    pub fn name(&self) -> String {
        match self {
            PolicyKind::Oracle => "oracle".into(),
            PolicyKind::Random => "random".into(),
            PolicyKind::Llm { config, .. } => format!("llm:{}", config.model),
        }
    }

    pub fn llm(config: LlmEndpointConfig) -> Self {
        PolicyKind::Llm { config, template: DEFAULT_PROMPT_TEMPLATE.into() }
    }

    /// Agent `index` (from zero) of an episode with `seed`. Random agents
    /// of one episode draw from distinct seeds.
    pub fn build(&self, seed: u64, index: usize) -> Result<Box<dyn Policy>, String> {
        Ok(match self {
            PolicyKind::Oracle => Box::new(oracle_policy(seed)),
            PolicyKind::Random => Box::new(random_policy(seed.wrapping_add((index as u64) << 32))),
            PolicyKind::Llm { config, template } => {
                Box::new(llm_policy(config.clone(), template.clone()).map_err(|e| e.to_string())?)
            }
        })
    }
}

/// Runs one episode of `task` for `seed` under `policy`, returning the
/// trace and the final world.
pub fn run_cell(task: &TaskDef, policy: &PolicyKind, seed: u64) -> Result<(EpisodeTrace, SceneGraph), String> {
    let p = prepare(task, seed)?;
    let mut policies: BTreeMap<NodeId, Box<dyn Policy>> = BTreeMap::new();
    for (i, a) in p.graph.agent_ids().enumerate() {
        policies.insert(a.clone(), policy.build(seed, i)?);
    }
    run_episode(&task.name, &p.graph, &p.goal, &policies, p.budget, seed).map_err(|e| e.to_string())
}

fn summarize(task: &TaskDef, policy: &PolicyKind, seed: u64) -> EpisodeSummary {
    match run_cell(task, policy, seed) {
        Ok((trace, g)) => {
            let success = trace.success();
            let mut error = trace.policy_error.as_ref().map(|f| f.error.to_string());
            let category = if success {
                None
            } else {
                match classify_failure(&trace, &g) {
                    Ok(c) => Some(c),
                    Err(e) => {
                        error.get_or_insert_with(|| e.to_string());
                        None
                    }
                }
            };
            EpisodeSummary { seed, success, ticks: trace.ticks, category, error }
        }
        Err(e) => EpisodeSummary { seed, success: false, ticks: 0, category: None, error: Some(e) },
    }
}

/// Runs every (task, policy, seed) episode, `jobs` at a time (0 for one per
/// core). Failing cells are recorded and the run carries on. Rows come out
/// in (task, policy) order whatever the scheduling.
pub fn run_benchmark(suite: &BenchmarkSuite, policies: &[PolicyKind], jobs: usize) -> Result<BenchmarkReport, SuiteError> {
    suite.validate()?;
    let names: Vec<String> = policies.iter().map(PolicyKind::name).collect();
    if policies.is_empty() {
        return Ok(BenchmarkReport::new(vec![], vec![], vec![], vec![]));
    }
    let cells: Vec<(usize, usize, u64)> = suite
        .tasks
        .iter()
        .enumerate()
        .flat_map(|(ti, t)| (0..policies.len()).flat_map(move |pi| t.seeds.iter().map(move |s| (ti, pi, *s))))
        .collect();
    let outcomes = par::map(&cells, jobs, |&(ti, pi, seed)| summarize(&suite.tasks[ti], &policies[pi], seed));

    let mut rows = Vec::new();
    let mut episodes = Vec::new();
    let mut rest = outcomes.as_slice();
    for t in &suite.tasks {
        for name in &names {
            let (cell, tail) = rest.split_at(t.seeds.len());
            rows.push(aggregate(&t.name, name, cell));
            episodes.push(cell.to_vec());
            rest = tail;
        }
    }
    let tasks = suite.tasks.iter().map(|t| t.name.clone()).collect();
    Ok(BenchmarkReport::new(tasks, names, rows, episodes))
}
