//! Greedy subgoal allocation across agents.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::goal::GoalSpec;
use crate::ids::NodeId;
use crate::scene::SceneGraph;

/// Door hops between two rooms, ignoring door and lock states.
pub fn room_distance(g: &SceneGraph, from: &NodeId, to: &NodeId) -> Option<usize> {
    let mut seen = BTreeSet::from([from.clone()]);
    let mut queue = VecDeque::from([(from.clone(), 0)]);
    while let Some((room, d)) = queue.pop_front() {
        if &room == to {
            return Some(d);
        }
        for (_, next) in g.doors_of(&room) {
            if seen.insert(next.clone()) {
                queue.push_back((next, d + 1));
            }
        }
    }
    None
}

/// Assigns every conjunct to an agent. Existing assignments are kept. Each
/// remaining conjunct, in index order, goes to the agent whose accumulated
/// estimate would be smallest afterwards (ties by agent id). A conjunct's
/// estimate for an agent is one plus the door hops from the agent's room to
/// the room holding the conjunct's focus object; unreachable or unplaced
/// focus objects count as one hop more than the number of rooms.
pub fn allocate_subgoals(goal: &GoalSpec, agents: &[NodeId], g: &SceneGraph) -> BTreeMap<usize, NodeId> {
    let mut out = goal.assignments.clone();
    let mut agents: Vec<&NodeId> = agents.iter().collect();
    agents.sort();
    agents.dedup();
    if agents.is_empty() {
        return out;
    }
    let far = g.rooms().count() + 1;
    let estimate = |agent: &NodeId, i: usize| -> usize {
        let focus = g.hoisted_room(goal.conjuncts[i].focus());
        let start = g.agent_room(agent);
        let hops = match (start, focus) {
            (Some(s), Some(f)) => room_distance(g, s, &f).unwrap_or(far),
            _ => far,
        };
        hops + 1
    };
    let mut load: BTreeMap<&NodeId, usize> = agents.iter().map(|a| (*a, 0)).collect();
    for (i, a) in &goal.assignments {
        if let Some(l) = load.get_mut(a) {
            *l += estimate(a, *i);
        }
    }
    for i in 0..goal.conjuncts.len() {
        if out.contains_key(&i) {
            continue;
        }
        let (cost, agent) = agents
            .iter()
            .map(|a| (load[a] + estimate(a, i), *a))
            .min()
            .expect("at least one agent");
        load.insert(agent, cost);
        out.insert(i, agent.clone());
    }
    out
}
