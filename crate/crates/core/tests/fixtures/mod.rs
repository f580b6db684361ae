//! Synthetic failed traces, one family per failure category.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::time::Duration;

use symenv_core::action::{Action, ErrorCode, Event, Outcome, PreconditionError};
use symenv_core::eval::FailureCategory;
use symenv_core::goal::{GoalSpec, Predicate};
use symenv_core::harness::*;
use symenv_core::scene::*;
use symenv_core::NodeId;

pub fn id(s: &str) -> NodeId {
    NodeId::from(s)
}

pub fn goto(room: &str) -> Action {
    Action::GoTo { room: id(room) }
}

pub fn pick_up(o: &str) -> Action {
    Action::PickUp { object: id(o) }
}

pub fn moved(agent: &str, room: &str) -> Outcome {
    Outcome::ok(vec![Event::Moved { agent: id(agent), room: id(room) }])
}

pub fn rejected(code: ErrorCode) -> Outcome {
    Outcome::rejected(PreconditionError { code, detail: String::new() })
}

pub struct S {
    pub tick: u64,
    pub agent: &'static str,
    pub action: Action,
    pub outcome: Outcome,
    pub seen: Vec<&'static str>,
}

pub fn s(tick: u64, agent: &'static str, action: Action, outcome: Outcome) -> S {
    S { tick, agent, action, outcome, seen: vec![] }
}

pub fn held_goal(object: &str) -> GoalSpec {
    GoalSpec::single(Predicate::HeldBy { object: id(object), agent: None }, "hold it")
}

/// A failed trace with one step per agent per tick.
pub fn trace(agents: &[&str], goal: GoalSpec, steps: Vec<S>, budget: u64) -> EpisodeTrace {
    let ticks = steps.iter().map(|s| s.tick + 1).max().unwrap_or(0);
    EpisodeTrace {
        schema_version: TRACE_SCHEMA_VERSION.into(),
        task_id: "fixture".into(),
        seed: 0,
        budget,
        policies: agents.iter().map(|a| (id(a), "fixture".to_string())).collect(),
        history: GoalHistory::new(&goal),
        goal,
        steps: steps
            .into_iter()
            .map(|s| Step {
                tick: s.tick,
                agent_id: id(s.agent),
                observation_digest: String::new(),
                first_seen: s.seen.into_iter().map(id).collect(),
                action: s.action,
                outcome: s.outcome,
            })
            .collect(),
        terminal: Terminal::BudgetExhausted,
        policy_error: None,
        ticks,
        goal_report: GoalReport { pass: false, fraction: 0.0, conjuncts: vec![] },
        visibility_violations: 0,
        wall_clock: Duration::ZERO,
    }
}

/// Two rooms, two keys of one category, a box.
pub fn world() -> SceneGraph {
    let key = |i: &str| ObjectNode::new(i, "key", "brass key", &[Affordance::Graspable]);
    SceneGraph::from_parts(
        [RoomNode::new("room_1", "Hall"), RoomNode::new("room_2", "Study"), RoomNode::new("room_3", "Attic")],
        [
            key("key_1"),
            key("key_2"),
            ObjectNode::new("box_1", "box", "box", &[Affordance::Container, Affordance::Openable]).with_state(StateValue::Closed),
            ObjectNode::new("vase_1", "vase", "vase", &[Affordance::Graspable]),
        ],
        [AgentNode::new("agent_1"), AgentNode::new("agent_2")],
        [
            Relation::in_room("key_1", "room_2"),
            Relation::in_room("key_2", "room_1"),
            Relation::in_room("box_1", "room_1"),
            Relation::in_room("vase_1", "room_1"),
            Relation::in_room("agent_1", "room_1"),
            Relation::in_room("agent_2", "room_1"),
        ],
        0,
    )
}

pub fn loop_fixture(cycles: u64, other: &'static str) -> EpisodeTrace {
    let mut steps = vec![S { seen: vec!["box_1"], ..s(0, "agent_1", goto(other), moved("agent_1", other)) }];
    for c in 0..cycles {
        steps.push(s(2 * c + 1, "agent_1", goto("room_1"), moved("agent_1", "room_1")));
        steps.push(s(2 * c + 2, "agent_1", goto(other), moved("agent_1", other)));
    }
    trace(&["agent_1"], held_goal("key_1"), steps, 2 * cycles + 2)
}

pub fn phantom_fixture(k: u64) -> EpisodeTrace {
    let ghost: &'static str = Box::leak(format!("ghost_{k}").into_boxed_str());
    let mut steps: Vec<S> = (0..k).map(|t| s(t, "agent_1", Action::Wait, Outcome::ok(vec![]))).collect();
    steps.push(s(k, "agent_1", pick_up(ghost), rejected(ErrorCode::UnknownObject)));
    trace(&["agent_1"], held_goal("key_1"), steps, k + 4)
}

pub fn coordination_fixture(k: u64) -> EpisodeTrace {
    let mut steps = Vec::new();
    for t in 0..2 {
        steps.push(s(k + t, "agent_1", pick_up("key_2"), Outcome::ok(vec![Event::PickedUp { object: id("key_2") }])));
        steps.push(s(k + t, "agent_2", pick_up("key_2"), rejected(ErrorCode::InvalidTarget)));
    }
    for t in 0..k {
        steps.push(s(t, "agent_1", Action::Wait, Outcome::ok(vec![])));
        steps.push(s(t, "agent_2", Action::Wait, Outcome::ok(vec![])));
    }
    trace(&["agent_1", "agent_2"], held_goal("key_1"), steps, k + 10)
}

/// Both agents idle past half the budget on their assigned conjuncts.
pub fn neglect_fixture(k: u64) -> EpisodeTrace {
    let mut goal = GoalSpec {
        description: String::new(),
        conjuncts: vec![
            Predicate::HeldBy { object: id("key_1"), agent: None },
            Predicate::HeldBy { object: id("vase_1"), agent: None },
        ],
        ordering: vec![],
        assignments: BTreeMap::new(),
    };
    goal.assignments.insert(0, id("agent_1"));
    goal.assignments.insert(1, id("agent_2"));
    let ticks = 6 + k;
    let steps = (0..ticks)
        .flat_map(|t| {
            [s(t, "agent_1", Action::Wait, Outcome::ok(vec![])), s(t, "agent_2", Action::Wait, Outcome::ok(vec![]))]
        })
        .collect();
    trace(&["agent_1", "agent_2"], goal, steps, ticks)
}

pub fn state_fixture(k: u64) -> EpisodeTrace {
    let codes = [ErrorCode::ClosedContainer, ErrorCode::Locked, ErrorCode::WrongKey, ErrorCode::WrongCode];
    let steps = (0..2 + k)
        .map(|t| s(t, "agent_1", Action::Open { object: id("box_1") }, rejected(codes[(t as usize) % 4])))
        .collect();
    trace(&["agent_1"], held_goal("key_1"), steps, 2 + k)
}

pub fn impossible_fixture(k: u64) -> EpisodeTrace {
    let codes = [ErrorCode::NotHeld, ErrorCode::HandsFull, ErrorCode::InvalidTarget, ErrorCode::NotAffordant];
    let steps = vec![
        s(0, "agent_1", Action::Wait, Outcome::ok(vec![])),
        s(1, "agent_1", pick_up("vase_1"), rejected(codes[(k as usize) % 4])),
    ];
    trace(&["agent_1"], held_goal("key_1"), steps, 3)
}

pub fn confusion_fixture(k: u64) -> EpisodeTrace {
    let mut steps: Vec<S> = (0..k).map(|t| s(t, "agent_1", Action::Wait, Outcome::ok(vec![]))).collect();
    steps.push(s(k, "agent_1", pick_up("key_2"), Outcome::ok(vec![Event::PickedUp { object: id("key_2") }])));
    trace(&["agent_1"], held_goal("key_1"), steps, k + 2)
}

pub type Family = (FailureCategory, Box<dyn Fn(u64) -> EpisodeTrace>);

/// Each family yields a distinct failed trace per variant `k`.
pub fn families() -> Vec<Family> {
    vec![
        (FailureCategory::ExplorationLoop, Box::new(|k| loop_fixture(5 + k, if k % 2 == 0 { "room_2" } else { "room_3" }))),
        (FailureCategory::PhantomGoal, Box::new(phantom_fixture)),
        (FailureCategory::CoordinationFailure, Box::new(coordination_fixture)),
        (FailureCategory::CoordinationFailure, Box::new(neglect_fixture)),
        (FailureCategory::StateAssumption, Box::new(state_fixture)),
        (FailureCategory::ImpossibleSequence, Box::new(impossible_fixture)),
        (FailureCategory::ObjectConfusion, Box::new(confusion_fixture)),
    ]
}
