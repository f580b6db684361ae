use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use symenv_core::action::{apply_in_place, legal_actions, Action, Event, Status};
use symenv_core::escape::{generate, replay, LevelConfig};
use symenv_core::goal::{GoalSpec, Predicate};
use symenv_core::harness::*;
use symenv_core::scene::*;
use symenv_core::NodeId;

fn id(s: &str) -> NodeId {
    NodeId::from(s)
}

fn one(agent: &str, p: impl Policy + 'static) -> BTreeMap<NodeId, Box<dyn Policy>> {
    let mut m: BTreeMap<NodeId, Box<dyn Policy>> = BTreeMap::new();
    m.insert(id(agent), Box::new(p));
    m
}

fn room(level: u8, seed: u64) -> symenv_core::escape::GeneratedRoom {
    generate(&LevelConfig::new(level, seed)).expect("generates")
}

fn certificate_actions(r: &symenv_core::escape::GeneratedRoom) -> Vec<Action> {
    r.certificate.plan.iter().map(|s| s.action.clone()).collect()
}

#[test]
fn solved_room_goal_check_passes() {
    let r = room(1, 7);
    let solved = replay(&r.graph, &r.goal, &r.certificate.plan).expect("certificate replays");
    let report = goal_check(&solved, &r.goal, &GoalHistory::default());
    assert!(report.pass);
    assert_eq!(report.fraction, 1.0);
    assert!(!goal_check(&r.graph, &r.goal, &GoalHistory::default()).pass);
}

/// Key inside a locked box. The history says the box was locked at tick 1
/// and the key went in at tick 3, the reverse of the required order.
#[test]
fn temporal_order_violation_fails_on_ordering() {
    let bx = ObjectNode::new("box_1", "box", "chest", &[Affordance::Container, Affordance::Openable, Affordance::Lockable])
        .with_state(StateValue::Closed)
        .with_state(StateValue::Locked)
        .with_lock(LockSpec::code("1234"));
    let key = ObjectNode::new("key_1", "key", "key", &[Affordance::Graspable]);
    let g = SceneGraph::from_parts(
        [RoomNode::new("room_1", "Hall")],
        [bx, key],
        [AgentNode::new("agent_1")],
        [
            Relation::in_room("box_1", "room_1"),
            Relation::inside("key_1", "box_1"),
            Relation::in_room("agent_1", "room_1"),
        ],
        4,
    );
    let goal = GoalSpec {
        conjuncts: vec![
            Predicate::ObjectIn { object: id("key_1"), container: id("box_1") },
            Predicate::StateIs { object: id("box_1"), state: StateValue::Locked },
        ],
        ordering: vec![[0, 1]],
        ..Default::default()
    };
    let at = |tick| Some(SatisfiedAt { tick, seq: 1, agent: Some(id("agent_1")) });
    let report = goal_check(&g, &goal, &GoalHistory(vec![at(3), at(1)]));
    assert!(report.conjuncts.iter().all(|c| c.holds));
    assert!(report.conjuncts[0].pass);
    assert!(!report.conjuncts[1].ordering_ok);
    assert!(!report.pass);
    assert_eq!(report.fraction, 0.5);

    let good = goal_check(&g, &goal, &GoalHistory(vec![at(1), at(3)]));
    assert!(good.pass);
}

#[test]
fn wrong_agent_fails_on_assignment() {
    let key = ObjectNode::new("key_1", "key", "key", &[Affordance::Graspable]);
    let g = SceneGraph::from_parts(
        [RoomNode::new("room_1", "Hall")],
        [key],
        [AgentNode::new("agent_1"), AgentNode::new("agent_2")],
        [
            Relation::in_room("key_1", "room_1"),
            Relation::in_room("agent_1", "room_1"),
            Relation::in_room("agent_2", "room_1"),
        ],
        0,
    );
    let goal = GoalSpec {
        conjuncts: vec![Predicate::HeldBy { object: id("key_1"), agent: None }],
        assignments: [(0, id("agent_2"))].into(),
        ..Default::default()
    };
    let mut policies: BTreeMap<NodeId, Box<dyn Policy>> = BTreeMap::new();
    policies.insert(id("agent_1"), Box::new(scripted_policy(vec![Action::PickUp { object: id("key_1") }])));
    policies.insert(id("agent_2"), Box::new(scripted_policy(vec![Action::Wait])));
    let (trace, end) = run_episode("assign", &g, &goal, &policies, 3, 0).unwrap();
    assert!(Predicate::HeldBy { object: id("key_1"), agent: Some(id("agent_1")) }.holds(&end));
    assert_eq!(trace.terminal, Terminal::BudgetExhausted);
    let c = &trace.goal_report.conjuncts[0];
    assert!(c.holds && c.ordering_ok && !c.assignment_ok);
    assert_eq!(c.first_satisfied.as_ref().and_then(|s| s.agent.clone()), Some(id("agent_1")));
}

#[test]
fn empty_goal_succeeds_at_tick_zero() {
    let r = room(1, 3);
    let goal = GoalSpec::default();
    let (trace, _) = run_episode("empty", &r.graph, &goal, &one("agent_1", random_policy(1)), 5, 3).unwrap();
    assert_eq!(trace.terminal, Terminal::Success);
    assert_eq!(trace.ticks, 0);
    assert!(trace.steps.is_empty());
    assert_eq!(trace.goal_report.fraction, 1.0);
}

#[test]
fn preconditions_are_errors() {
    let r = room(1, 3);
    let none: BTreeMap<NodeId, Box<dyn Policy>> = BTreeMap::new();
    assert!(matches!(run_episode("t", &r.graph, &r.goal, &none, 5, 0), Err(EpisodeError::MissingPolicy(_))));
    let p = one("agent_1", oracle_policy(0));
    assert!(matches!(run_episode("t", &r.graph, &r.goal, &p, 0, 0), Err(EpisodeError::ZeroBudget)));
    let mut extra = one("agent_1", oracle_policy(0));
    extra.insert(id("agent_9"), Box::new(oracle_policy(0)));
    assert!(matches!(run_episode("t", &r.graph, &r.goal, &extra, 5, 0), Err(EpisodeError::UnknownAgent(_))));
}

#[test]
fn scripted_certificate_succeeds_on_every_level() {
    for level in 1..=4 {
        for seed in 0..5 {
            let r = room(level, seed);
            let plan = certificate_actions(&r);
            let budget = plan.len() as u64;
            let (trace, _) = run_episode("cert", &r.graph, &r.goal, &one("agent_1", scripted_policy(plan)), budget, seed).unwrap();
            assert_eq!(trace.terminal, Terminal::Success, "L{level} seed {seed}");
            assert_eq!(trace.ticks, budget);
            assert!(trace.steps.iter().all(|s| s.outcome.status == Status::Ok));
        }
    }
}

#[test]
fn scripted_illegal_action_is_recorded_and_play_continues() {
    let r = room(1, 5);
    let mut plan = vec![Action::PickUp { object: id("ghost_7") }];
    plan.extend(certificate_actions(&r));
    let budget = plan.len() as u64 + 2;
    let (trace, _) = run_episode("ghost", &r.graph, &r.goal, &one("agent_1", scripted_policy(plan)), budget, 5).unwrap();
    assert_eq!(trace.steps[0].outcome.status, Status::Rejected);
    assert_eq!(trace.steps[0].outcome.code().map(|c| c.as_str()), Some("unknown_object"));
    assert_eq!(trace.terminal, Terminal::Success);
}

#[test]
fn random_traces_are_byte_identical() {
    for level in 1..=4 {
        let r = room(level, 11);
        let run = || {
            let (t, _) = run_episode("rand", &r.graph, &r.goal, &one("agent_1", random_policy(99)), 30, 11).unwrap();
            serde_json::to_string(&t).unwrap()
        };
        assert_eq!(run(), run());
    }
    let r = room(2, 11);
    let a = run_episode("rand", &r.graph, &r.goal, &one("agent_1", random_policy(1)), 30, 11).unwrap().0;
    let b = run_episode("rand", &r.graph, &r.goal, &one("agent_1", random_policy(2)), 30, 11).unwrap().0;
    assert_ne!(a.steps, b.steps);
}

#[test]
fn traces_round_trip_and_omit_wall_clock() {
    let r = room(2, 4);
    let (t, _) = run_episode("rt", &r.graph, &r.goal, &one("agent_1", oracle_policy(0)), 40, 4).unwrap();
    let text = serde_json::to_string(&t).unwrap();
    assert!(!text.contains("wall_clock"));
    let back: EpisodeTrace = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), text);
    assert!(t.steps.iter().all(|s| s.observation_digest.len() == 32));
}

#[test]
fn random_rarely_escapes_level_three_in_two_ticks() {
    let n = 500;
    let wins = (0..n)
        .filter(|&seed| {
            let r = room(3, seed);
            run_episode("r", &r.graph, &r.goal, &one("agent_1", random_policy(seed)), 2, seed).unwrap().0.success()
        })
        .count();
    assert!(wins * 100 < n as usize, "{wins}/{n}");
}

#[test]
fn oracle_stays_within_twice_optimal_on_level_one() {
    for seed in 0..100 {
        let r = room(1, seed);
        let opt = r.certificate.optimal_length as u64;
        let (t, _) = run_episode("o", &r.graph, &r.goal, &one("agent_1", oracle_policy(seed)), 4 * opt, seed).unwrap();
        assert!(t.success(), "seed {seed}");
        assert!(t.ticks <= 2 * opt, "seed {seed}: {} ticks vs optimal {opt}", t.ticks);
    }
}

#[test]
fn oracle_idles_in_a_solved_room() {
    let r = room(1, 2);
    let solved = replay(&r.graph, &r.goal, &r.certificate.plan).unwrap();
    let (t, _) = run_episode("done", &solved, &r.goal, &one("agent_1", oracle_policy(0)), 5, 2).unwrap();
    assert_eq!(t.terminal, Terminal::Success);
    assert_eq!(t.ticks, 0);
}

/// Steps the oracle by hand so its memory can be inspected.
fn walk(r: &symenv_core::escape::GeneratedRoom, budget: u64) -> (PolicyMemory, SceneGraph, Vec<Action>) {
    let pol = oracle_policy(0);
    let me = id("agent_1");
    let mut g = r.graph.clone();
    let mut mem = PolicyMemory::default();
    let mut last = None;
    let mut taken = Vec::new();
    for tick in 0..budget {
        if r.goal.satisfied(&g) {
            break;
        }
        let obs = observe(&g, &me).unwrap();
        let legal = legal_actions(&g, &me).unwrap();
        let turn = Turn { tick, observation: &obs, legal: &legal, capacity: 1, last_outcome: last.as_ref() };
        let (a, m) = pol.decide(&turn, &r.goal, mem).unwrap();
        mem = m;
        mem.turns += 1;
        last = Some(apply_in_place(&mut g, &me, &a).unwrap());
        taken.push(a);
    }
    (mem, g, taken)
}

fn clue_notes(r: &symenv_core::escape::GeneratedRoom) -> (NodeId, NodeId) {
    let find = |v: Veracity| {
        r.graph
            .objects()
            .find(|o| o.clue.as_ref().is_some_and(|c| c.veracity == v && c.referent.is_some()))
            .map(|o| o.id.clone())
            .unwrap()
    };
    (find(Veracity::Deceptive), find(Veracity::Accurate))
}

#[test]
fn oracle_never_discredits_the_true_clue_on_level_four() {
    let mut exposed = 0;
    for seed in 0..40 {
        let r = room(4, seed);
        let (lie, truth) = clue_notes(&r);
        let (mem, g, _) = walk(&r, 4 * r.certificate.optimal_length as u64);
        assert!(r.goal.satisfied(&g), "seed {seed}");
        assert!(mem.discredited.iter().all(|d| d == &lie), "seed {seed}: {:?}", mem.discredited);
        exposed += usize::from(mem.discredited.contains(&lie));
        assert!(!mem.discredited.contains(&truth));
    }
    assert!(exposed > 0);
}

/// On seed 0 the oracle reads the lie first, finds its container useless,
/// then reads the true note.
#[test]
fn level_four_walkthrough_reads_both_and_discards_the_lie() {
    let r = room(4, 0);
    let (lie, truth) = clue_notes(&r);
    let (mem, g, taken) = walk(&r, 4 * r.certificate.optimal_length as u64);
    assert!(r.goal.satisfied(&g));
    let read_at = |n: &NodeId| taken.iter().position(|a| a == &Action::Read { object: n.clone() });
    assert!(read_at(&lie).unwrap() < read_at(&truth).unwrap());
    assert_eq!(mem.discredited, [lie].into());
}

#[test]
fn memory_serializes_and_visits_are_monotone() {
    let r = room(3, 8);
    let (mem, _, taken) = walk(&r, 60);
    assert!(taken.iter().any(|a| matches!(a, Action::GoTo { .. })));
    assert!(mem.visits.values().all(|&v| v >= 1));
    let text = serde_json::to_string(&mem).unwrap();
    let back: PolicyMemory = serde_json::from_str(&text).unwrap();
    assert_eq!(back, mem);
}

fn two_rooms_two_agents() -> SceneGraph {
    let door = ObjectNode::new("door_1", "door", "door", &[Affordance::Openable]).with_state(StateValue::Open);
    let cup = ObjectNode::new("cup_1", "cup", "cup", &[Affordance::Graspable]);
    let tv = ObjectNode::new("tv_1", "tv", "tv", &[Affordance::Toggleable]).with_state(StateValue::Off);
    SceneGraph::from_parts(
        [RoomNode::new("room_1", "Kitchen"), RoomNode::new("room_2", "Lounge")],
        [door, cup, tv],
        [AgentNode::new("agent_1"), AgentNode::new("agent_2")],
        [
            Relation::in_room("door_1", "room_1"),
            Relation::connects("door_1", "room_1"),
            Relation::connects("door_1", "room_2"),
            Relation::in_room("cup_1", "room_2"),
            Relation::in_room("tv_1", "room_1"),
            Relation::in_room("agent_1", "room_1"),
            Relation::in_room("agent_2", "room_2"),
        ],
        0,
    )
}

fn split_goal() -> GoalSpec {
    GoalSpec {
        description: "fetch the cup and switch the tv on".into(),
        conjuncts: vec![
            Predicate::HeldBy { object: id("cup_1"), agent: None },
            Predicate::StateIs { object: id("tv_1"), state: StateValue::On },
        ],
        ..Default::default()
    }
}

#[test]
fn allocation_gives_each_agent_the_near_conjunct() {
    let g = two_rooms_two_agents();
    let agents = [id("agent_1"), id("agent_2")];
    // cup: agent_1 one hop away (estimate 2), agent_2 in place (1) -> agent_2.
    // tv: agent_1 in place (0 + 1), agent_2 load 1 + 2 -> agent_1.
    let a = allocate_subgoals(&split_goal(), &agents, &g);
    assert_eq!(a, [(0, id("agent_2")), (1, id("agent_1"))].into());
    assert_eq!(room_distance(&g, &id("room_1"), &id("room_2")), Some(1));
}

#[test]
fn allocation_with_one_agent_or_fixed_points() {
    let g = two_rooms_two_agents();
    let a = allocate_subgoals(&split_goal(), &[id("agent_1")], &g);
    assert_eq!(a, [(0, id("agent_1")), (1, id("agent_1"))].into());

    let mut fixed = split_goal();
    fixed.assignments.insert(1, id("agent_2"));
    let a = allocate_subgoals(&fixed, &[id("agent_2"), id("agent_1")], &g);
    assert_eq!(a[&1], id("agent_2"));
    assert_eq!(a[&0], id("agent_1"));
    assert_eq!(a, allocate_subgoals(&fixed, &[id("agent_1"), id("agent_2")], &g));
}

#[test]
fn allocated_oracles_split_the_work() {
    let g = two_rooms_two_agents();
    let mut goal = split_goal();
    goal.assignments = allocate_subgoals(&goal, &[id("agent_1"), id("agent_2")], &g);
    let mut both: BTreeMap<NodeId, Box<dyn Policy>> = BTreeMap::new();
    both.insert(id("agent_1"), Box::new(oracle_policy(0)));
    both.insert(id("agent_2"), Box::new(oracle_policy(0)));
    let (t, _) = run_episode("split", &g, &goal, &both, 10, 0).unwrap();
    assert!(t.success());
    assert_eq!(t.ticks, 1);
    assert!(t.goal_report.conjuncts.iter().all(|c| c.assignment_ok));
}

#[test]
fn goal_for_keeps_own_and_unassigned_conjuncts() {
    let goal = GoalSpec {
        conjuncts: vec![
            Predicate::DoorOpen { door: id("door_1") },
            Predicate::DoorOpen { door: id("door_2") },
            Predicate::DoorOpen { door: id("door_3") },
        ],
        ordering: vec![[0, 2], [1, 2]],
        assignments: [(0, id("agent_2"))].into(),
        ..Default::default()
    };
    let mine = goal_for(&goal, &id("agent_1"));
    assert_eq!(mine.conjuncts.len(), 2);
    assert_eq!(mine.ordering, vec![[0, 1]]);
    assert!(mine.assignments.is_empty());
}

#[test]
fn extracts_first_well_formed_action() {
    assert_eq!(
        extract_action(r#"I will grab it: {"type":"pick_up","object":"key_1"} then {"type":"wait"}"#),
        Ok(Action::PickUp { object: id("key_1") })
    );
    assert_eq!(
        extract_action(r#"{"plan": {"type":"open","object":"box_1"}}"#),
        Ok(Action::Open { object: id("box_1") })
    );
    assert!(extract_action(r#"{"type":"unlock","object":"door_1"}"#).is_err());
    assert!(extract_action("I would open the box.").is_err());
    assert!(extract_action(r#"{"type":"open","object":"Bad Id"}"#).is_err());
}

/// Minimal chat-completions stub. Replies in order, recording request bodies;
/// `None` means accept the connection and never answer.
fn stub(replies: Vec<Option<String>>) -> (String, Arc<Mutex<Vec<String>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    thread::spawn(move || {
        let mut held = Vec::new();
        for reply in replies {
            let Ok((stream, _)) = listener.accept() else { return };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            log.lock().unwrap().push(String::from_utf8(body).unwrap());
            match reply {
                Some(content) => {
                    let doc = serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]});
                    let text = doc.to_string();
                    let mut s = stream;
                    write!(s, "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}", text.len()).unwrap();
                }
                None => held.push(stream),
            }
        }
        thread::sleep(Duration::from_secs(5));
    });
    (url, seen)
}

fn llm(url: &str, retries: u32, timeout: f64) -> LlmPolicy {
    let mut cfg = LlmEndpointConfig::new(url, "stub-model");
    cfg.max_retries = retries;
    cfg.timeout_secs = timeout;
    cfg.api_key_env = "SYMENV_TEST_UNSET_KEY".into();
    llm_policy(cfg, DEFAULT_PROMPT_TEMPLATE).unwrap()
}

fn key_room() -> SceneGraph {
    let key = ObjectNode::new("key_1", "key", "iron key", &[Affordance::Graspable]);
    SceneGraph::from_parts(
        [RoomNode::new("room_1", "Hall")],
        [key],
        [AgentNode::new("agent_1")],
        [Relation::in_room("key_1", "room_1"), Relation::in_room("agent_1", "room_1")],
        0,
    )
}

#[test]
fn llm_decides_the_stubbed_action() {
    let (url, seen) = stub(vec![Some(r#"Sure. {"type":"pick_up","object":"key_1"}"#.into())]);
    let g = key_room();
    let goal = GoalSpec::single(Predicate::HeldBy { object: id("key_1"), agent: None }, "Pick up the key.");
    let (t, _) = run_episode("llm", &g, &goal, &one("agent_1", llm(&url, 0, 5.0)), 3, 0).unwrap();
    assert_eq!(t.terminal, Terminal::Success);
    assert_eq!(t.steps[0].action, Action::PickUp { object: id("key_1") });
    let bodies = seen.lock().unwrap();
    let req: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
    assert_eq!(req["model"], "stub-model");
    let prompt = req["messages"][1]["content"].as_str().unwrap();
    assert!(prompt.contains("Pick up the key."));
    assert!(prompt.contains(r#"{"type":"pick_up","object":"key_1"}"#));
}

#[test]
fn llm_prose_falls_back_to_wait_and_logs() {
    let (url, _) = stub(vec![Some("I think I should look around.".into())]);
    let g = key_room();
    let goal = GoalSpec::single(Predicate::HeldBy { object: id("key_1"), agent: None }, "Pick up the key.");
    let obs = observe(&g, &id("agent_1")).unwrap();
    let legal = legal_actions(&g, &id("agent_1")).unwrap();
    let turn = Turn { tick: 0, observation: &obs, legal: &legal, capacity: 1, last_outcome: None };
    let (a, mem) = llm(&url, 0, 5.0).decide(&turn, &goal, PolicyMemory::default()).unwrap();
    assert_eq!(a, Action::Wait);
    assert_eq!(mem.parse_failures.len(), 1);
    assert_eq!(mem.parse_failures[0].attempts, 1);
}

#[test]
fn llm_retries_with_feedback_then_succeeds() {
    let (url, seen) = stub(vec![Some("hmm".into()), Some(r#"{"type":"pick_up","object":"key_1"}"#.into())]);
    let g = key_room();
    let goal = GoalSpec::single(Predicate::HeldBy { object: id("key_1"), agent: None }, "Pick up the key.");
    let obs = observe(&g, &id("agent_1")).unwrap();
    let legal = legal_actions(&g, &id("agent_1")).unwrap();
    let turn = Turn { tick: 0, observation: &obs, legal: &legal, capacity: 1, last_outcome: None };
    let (a, mem) = llm(&url, 1, 5.0).decide(&turn, &goal, PolicyMemory::default()).unwrap();
    assert_eq!(a, Action::PickUp { object: id("key_1") });
    assert!(mem.parse_failures.is_empty());
    let second: serde_json::Value = serde_json::from_str(&seen.lock().unwrap()[1]).unwrap();
    let msgs = second["messages"].as_array().unwrap();
    assert_eq!(msgs.last().unwrap()["role"], "user");
    assert!(msgs.last().unwrap()["content"].as_str().unwrap().contains("did not contain a valid action"));
}

#[test]
fn llm_timeout_ends_the_episode_with_policy_error() {
    let (url, _) = stub(vec![None, None]);
    let g = key_room();
    let goal = GoalSpec::single(Predicate::HeldBy { object: id("key_1"), agent: None }, "Pick up the key.");
    let (t, _) = run_episode("llm", &g, &goal, &one("agent_1", llm(&url, 1, 0.3)), 3, 0).unwrap();
    assert_eq!(t.terminal, Terminal::PolicyError);
    assert!(matches!(t.policy_error.as_ref().map(|f| &f.error), Some(PolicyError::Endpoint(_))));
    assert!(t.steps.is_empty());
}

#[test]
fn llm_config_rejects_non_positive_timeout() {
    let mut cfg = LlmEndpointConfig::new("http://localhost:1/v1", "m");
    cfg.timeout_secs = 0.0;
    assert!(llm_policy(cfg, DEFAULT_PROMPT_TEMPLATE).is_err());
}

#[test]
fn llm_transcript_window_is_bounded() {
    let replies = (0..12).map(|_| Some(r#"{"type":"wait"}"#.to_string())).collect();
    let (url, seen) = stub(replies);
    let g = key_room();
    let goal = GoalSpec::single(Predicate::HeldBy { object: id("key_1"), agent: None }, "Pick up the key.");
    let (t, _) = run_episode("llm", &g, &goal, &one("agent_1", llm(&url, 0, 5.0)), 12, 0).unwrap();
    assert_eq!(t.ticks, 12);
    let last: serde_json::Value = serde_json::from_str(seen.lock().unwrap().last().unwrap()).unwrap();
    // system + 8 prompt/reply pairs + the new prompt
    assert_eq!(last["messages"].as_array().unwrap().len(), 1 + 2 * TRANSCRIPT_WINDOW + 1);
    assert!(t.steps.iter().all(|s| s.outcome.events.is_empty() || matches!(s.outcome.events[0], Event::Moved { .. })));
}
