//! Solver-backed policy acting on what it has observed.
//!
//! Each turn the oracle folds the observation into its belief graph and, if
//! the belief differs from what its last step predicted (or the step was
//! rejected), replans. Planning first targets the goal itself; when the
//! believed world admits no plan it falls back to information gathering in
//! this order: open containers a trusted clue points at, solve a known
//! arrangement puzzle, read unread notes, open any closed container, and
//! finally walk to the least-visited known room (ties by room id).

use std::collections::BTreeSet;

use crate::action::{apply, Action, UnlockWith};
use crate::escape::{search_where, PlanStep, SolveOptions};
use crate::goal::GoalSpec;
use crate::harness::belief::{belief_graph, fingerprint};
use crate::harness::{Policy, PolicyError, PolicyMemory, Turn};
use crate::ids::NodeId;
use crate::knowledge::{parse_colours, KnowledgeFilter};
use crate::scene::{Affordance, Color, ClueText, SceneGraph, StateValue};

/// State budget for one belief-space search.
const BELIEF_BUDGET: usize = 20_000;
/// Wrong code guesses discovered through the menu before giving up on a turn.
const MAX_GUESSES: usize = 4;

#[derive(Debug, Clone)]
pub struct OraclePolicy {
    /// Recorded for the policy contract; the oracle makes no random choices.
    pub seed: u64,
}

pub fn oracle_policy(seed: u64) -> OraclePolicy {
    OraclePolicy { seed }
}

impl Policy for OraclePolicy {
    fn name(&self) -> &str {
        "oracle"
    }

    fn decide(&self, turn: &Turn<'_>, goal: &GoalSpec, mut mem: PolicyMemory) -> Result<(Action, PolicyMemory), PolicyError> {
        let obs = turn.observation;
        let me = obs.agent_id.clone().ok_or_else(|| PolicyError::Malformed("observation has no agent".into()))?;
        mem.note(obs);
        if turn.last_outcome.is_some_and(|o| !o.is_ok()) {
            mem.pending.clear();
        }
        for _ in 0..MAX_GUESSES {
            let belief = with_placeholders(belief_graph(&mem, obs, turn.capacity), &me);
            if mem.expected.as_deref() != Some(fingerprint(&belief).as_str()) {
                mem.pending.clear();
            }
            if mem.pending.is_empty() {
                mem.pending = plan(&mut mem, &belief, turn, goal, &me);
            }
            let Some(next) = mem.pending.first().cloned() else { break };
            if turn.legal.contains(&next) || next == Action::Wait {
                mem.pending.remove(0);
                mem.expected = apply(&belief, &me, &next)
                    .ok()
                    .filter(|(_, o)| o.is_ok())
                    .map(|(g, _)| fingerprint(&with_placeholders(g, &me)));
                return Ok((next, mem));
            }
            // The menu only offers a code that opens the lock.
            mem.pending.clear();
            mem.expected = None;
            match next {
                Action::Unlock { object, with: UnlockWith::Code(c) } => {
                    mem.rejected_codes.entry(object).or_default().insert(c);
                }
                _ => break,
            }
        }
        mem.expected = None;
        Ok((Action::Wait, mem))
    }
}

/// Unread notes get blank text so reading them can be planned.
fn with_placeholders(mut g: SceneGraph, me: &NodeId) -> SceneGraph {
    let read: BTreeSet<NodeId> =
        g.agent(me).map(|a| a.read_clues.iter().map(|rc| rc.object.clone()).collect()).unwrap_or_default();
    let blank: Vec<NodeId> = g
        .objects()
        .filter(|o| o.has(Affordance::Readable) && o.clue.is_none() && !read.contains(&o.id))
        .map(|o| o.id.clone())
        .collect();
    for id in blank {
        if let Some(o) = g.object_mut(&id) {
            o.clue = Some(ClueText::flavor(""));
        }
    }
    g
}

/// Ids that make an action worth considering in belief-space search.
#[derive(Default)]
struct Relevance {
    objects: BTreeSet<NodeId>,
    keys: BTreeSet<NodeId>,
    reads: BTreeSet<NodeId>,
}

impl Relevance {
    fn new(g: &SceneGraph, goal: &GoalSpec) -> Self {
        let objects = goal.conjuncts.iter().flat_map(|p| p.ids()).cloned().collect();
        let keys = g.objects().filter_map(|o| o.lock.as_ref()?.key_id.clone()).collect();
        Relevance { objects, keys, reads: BTreeSet::new() }
    }

    fn keep(&self, a: &Action) -> bool {
        match a {
            Action::GoTo { .. } | Action::Open { .. } | Action::Unlock { .. } => true,
            Action::PickUp { object } => self.objects.contains(object) || self.keys.contains(object),
            // Goal objects go only to goal targets; anything else may be set
            // down anywhere to free a hand.
            Action::Place { object, target, .. } => !self.objects.contains(object) || self.objects.contains(target),
            Action::Read { object } => self.reads.contains(object) || self.objects.contains(object),
            Action::Close { object } | Action::Lock { object } | Action::Toggle { object } => {
                self.objects.contains(object)
            }
            Action::Arrange { .. } | Action::Wait => false,
        }
    }
}

fn actions(plan: Vec<PlanStep>) -> Vec<Action> {
    plan.into_iter().map(|s| s.action).collect()
}

fn plan(mem: &mut PolicyMemory, belief: &SceneGraph, turn: &Turn<'_>, goal: &GoalSpec, me: &NodeId) -> Vec<Action> {
    let opts = SolveOptions { budget: BELIEF_BUDGET, agents: Some(vec![me.clone()]), knowledge: KnowledgeFilter::All };
    let stage = staged(goal, belief);
    if stage.satisfied(belief) {
        return vec![Action::Wait];
    }
    let mut rel = Relevance::new(belief, goal);
    let find = |rel: &Relevance, is_goal: &dyn Fn(&SceneGraph) -> bool| -> Option<Vec<Action>> {
        search_where(belief, &opts, |_, a| rel.keep(a), is_goal).ok().filter(|p| !p.is_empty()).map(actions)
    };
    if let Some(p) = find(&rel, &|s| stage.satisfied(s)) {
        return p;
    }

    let Some(agent) = belief.agent(me) else { return vec![Action::Wait] };
    let closed = |s: &SceneGraph, id: &NodeId| s.object(id).is_some_and(|o| o.states.is(StateValue::Closed));

    // Containers a trusted clue points at.
    let pointed: Vec<NodeId> = agent
        .read_clues
        .iter()
        .filter(|rc| !mem.discredited.contains(&rc.object) && rc.clue.payload.is_none())
        .filter_map(|rc| rc.clue.referent.clone())
        .filter(|c| closed(belief, c) && !belief.is_door(c))
        .collect();
    if !pointed.is_empty() {
        if let Some(p) = find(&rel, &|s| pointed.iter().any(|c| !closed(s, c))) {
            return p;
        }
    }

    // Known arrangement orders.
    for rc in &agent.read_clues {
        if mem.discredited.contains(&rc.object) {
            continue;
        }
        let (Some(target), Some(order)) = (&rc.clue.referent, rc.clue.payload.as_deref().and_then(parse_colours)) else {
            continue;
        };
        if mem.arranged.contains(target) {
            continue;
        }
        if let Some(a) = matching_arrangement(belief, turn.legal, target, &order) {
            mem.arranged.insert(target.clone());
            return vec![a];
        }
        let there = belief.hoisted_room(target);
        if there.is_some() && there.as_ref() != belief.agent_room(me) {
            if let Some(p) = find(&rel, &|s| s.agent_room(me) == there.as_ref()) {
                return p;
            }
        }
    }

    // Unread notes.
    let unread: BTreeSet<NodeId> = belief
        .objects()
        .filter(|o| o.has(Affordance::Readable) && !agent.has_read(&o.id))
        .map(|o| o.id.clone())
        .collect();
    if !unread.is_empty() {
        rel.reads = unread.clone();
        let read_any = |s: &SceneGraph| s.agent(me).is_some_and(|a| unread.iter().any(|u| a.has_read(u)));
        if let Some(p) = find(&rel, &read_any) {
            return p;
        }
    }

    // Any closed container.
    let boxes: Vec<NodeId> = belief
        .objects()
        .filter(|o| o.has(Affordance::Container) && o.states.is(StateValue::Closed))
        .map(|o| o.id.clone())
        .collect();
    if !boxes.is_empty() {
        if let Some(p) = find(&rel, &|s| boxes.iter().any(|c| !closed(s, c))) {
            return p;
        }
    }

    // Least-visited rooms first.
    let here = belief.agent_room(me).cloned();
    let mut rooms: Vec<(u32, NodeId)> = belief
        .rooms()
        .filter(|r| Some(&r.id) != here.as_ref())
        .map(|r| (mem.visits.get(&r.id).copied().unwrap_or(0), r.id.clone()))
        .collect();
    rooms.sort();
    for (_, room) in rooms {
        if let Some(p) = find(&rel, &|s| s.agent_room(me) == Some(&room)) {
            return p;
        }
    }
    vec![Action::Wait]
}

/// The Arrange action on the menu that places coloured objects on `target`
/// in `order`.
fn matching_arrangement(g: &SceneGraph, legal: &[Action], target: &NodeId, order: &[Color]) -> Option<Action> {
    legal
        .iter()
        .find(|a| match a {
            Action::Arrange { objects, target: t } => {
                t == target
                    && objects.len() == order.len()
                    && objects.iter().zip(order).all(|(o, c)| g.object(o).and_then(|x| x.color) == Some(*c))
            }
            _ => false,
        })
        .cloned()
}

/// With a temporal order, aim at the shortest topological prefix that is not
/// yet satisfied; otherwise at the whole goal.
fn staged(goal: &GoalSpec, g: &SceneGraph) -> GoalSpec {
    if goal.ordering.is_empty() {
        return goal.clone();
    }
    let n = goal.conjuncts.len();
    let mut indegree = vec![0usize; n];
    for [_, b] in &goal.ordering {
        indegree[*b] += 1;
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut prefix = Vec::new();
    while let Some(i) = ready.pop_first() {
        prefix.push(goal.conjuncts[i].clone());
        if !goal.conjuncts[i].holds(g) {
            break;
        }
        for [a, b] in &goal.ordering {
            if *a == i {
                indegree[*b] -= 1;
                if indegree[*b] == 0 {
                    ready.insert(*b);
                }
            }
        }
    }
    GoalSpec { conjuncts: prefix, ..Default::default() }
}
