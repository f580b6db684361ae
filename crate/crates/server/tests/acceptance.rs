//! Acceptance run. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;
#[path = "../../core/tests/fixtures/mod.rs"]
mod fixtures;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Barrier};
use std::time::{Duration, Instant};

use reqwest::StatusCode;
use serde::Serialize;
use serde_json::{json, Value};

use symenv_core::action::{apply, apply_in_place};
use symenv_core::escape::{generate, solve, verify, GeneratedRoom, LevelConfig, SolveError, SolveOptions};
use symenv_core::eval::*;
use symenv_core::harness::{goal_check, observation_digest, run_episode, EpisodeTrace, GoalHistory, Policy};
use symenv_core::knowledge::KnowledgeFilter;
use symenv_core::scene::{observe, to_document, visibility_violations, Affordance, ObjectNode, RelationKind, SceneGraph, StateValue, Veracity};
use symenv_core::task::{apply_and_check, apply_edit, apply_edits, diff, interpretation_check, random_edits, Edit, EditStatus};
use symenv_core::NodeId;
use symenv_server::api::{ActionsRequest, EditsRequest, Move, RecheckRequest, Solvability};
use symenv_server::client::{Client, ClientError};

const SWEEP_SEEDS: u64 = 100;
const SEPARATION_SEEDS: u64 = 200;
const HOUSEHOLD_SEEDS: u64 = 20;
const EDIT_PAIRS: u64 = 500;
const PAIRED_TASKS: u64 = 50;

type Check = Result<String, String>;

struct Episode {
    trace: EpisodeTrace,
    start: SceneGraph,
    end: SceneGraph,
}

struct Run {
    lines: Vec<(String, Check)>,
}

impl Run {
    fn record(&mut self, name: &str, result: Check) {
        let line = match &result {
            Ok(detail) => format!("PASS  {name}: {detail}"),
            Err(detail) => format!("FAIL  {name}: {detail}"),
        };
        println!("{line}");
        self.lines.push((name.to_string(), result));
    }
}

fn ensure(ok: bool, detail: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(detail())
    }
}

fn policy(kind: &PolicyKind, seed: u64, index: usize) -> Box<dyn Policy> {
    kind.build(seed, index).expect("built-in policies always build")
}

fn escape_episode(room: &GeneratedRoom, kind: &PolicyKind) -> Episode {
    let mut policies = BTreeMap::new();
    policies.insert(NodeId::from("agent_1"), policy(kind, room.seed, 0));
    let budget = 4 * room.certificate.optimal_length as u64;
    let name = format!("Escape L{}", room.level);
    let (trace, end) = run_episode(&name, &room.graph, &room.goal, &policies, budget, room.seed).unwrap();
    Episode { trace, start: room.graph.clone(), end }
}

fn median(mut xs: Vec<usize>) -> f64 {
    xs.sort_unstable();
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2] as f64
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) as f64 / 2.0
    }
}

fn sweep(rooms: &mut Vec<Vec<GeneratedRoom>>) -> Check {
    let started = Instant::now();
    let mut failures = Vec::new();
    for level in 1..=4u8 {
        let mut made = Vec::new();
        for seed in 0..SWEEP_SEEDS {
            let room = match generate(&LevelConfig::new(level, seed)) {
                Ok(r) => r,
                Err(e) => {
                    failures.push(format!("L{level}/{seed} generate: {e}"));
                    continue;
                }
            };
            if let Err(e) = verify(&room) {
                failures.push(format!("L{level}/{seed} replay: {e:?}"));
            }
            match solve(&room.graph, &room.goal, &SolveOptions::default()) {
                Ok(c) if c.optimal_length == room.certificate.optimal_length => {}
                Ok(c) => failures.push(format!("L{level}/{seed} solve length {} vs {}", c.optimal_length, room.certificate.optimal_length)),
                Err(e) => failures.push(format!("L{level}/{seed} solve: {e}")),
            }
            let text = serde_json::to_string(&room).unwrap();
            let back: GeneratedRoom = serde_json::from_str(&text).unwrap();
            if serde_json::to_string(&back).unwrap() != text || !back.graph.content_eq(&room.graph) {
                failures.push(format!("L{level}/{seed} round trip differs"));
            }
            made.push(room);
        }
        rooms.push(made);
    }
    let took = started.elapsed();
    ensure(failures.is_empty(), || failures.join("; "))?;
    ensure(took < Duration::from_secs(300), || format!("took {took:?}"))?;
    Ok(format!("{} rooms generated, replayed, solved, round-tripped in {:.1}s", 4 * SWEEP_SEEDS, took.as_secs_f64()))
}

fn determinism(rooms: &[Vec<GeneratedRoom>]) -> Check {
    let mut compared = 0;
    for level_rooms in rooms {
        for room in level_rooms.iter().take(25) {
            let again = generate(&LevelConfig::new(room.level, room.seed)).unwrap();
            ensure(serde_json::to_vec(&again).unwrap() == serde_json::to_vec(room).unwrap(), || {
                format!("L{}/{} serialized differently", room.level, room.seed)
            })?;
            compared += 1;
        }
    }
    let mut traces = 0;
    for level_rooms in rooms {
        for room in level_rooms.iter().take(10) {
            for kind in [PolicyKind::Oracle, PolicyKind::Random] {
                let a = serde_json::to_vec(&escape_episode(room, &kind).trace).unwrap();
                let b = serde_json::to_vec(&escape_episode(room, &kind).trace).unwrap();
                ensure(a == b, || format!("L{}/{} {} traces differ", room.level, room.seed, kind.name()))?;
                traces += 1;
            }
        }
    }
    for task in BenchmarkSuite::standard(3).tasks.iter().skip(4) {
        for seed in 0..3 {
            let a = serde_json::to_vec(&run_cell(task, &PolicyKind::Random, seed).unwrap().0).unwrap();
            let b = serde_json::to_vec(&run_cell(task, &PolicyKind::Random, seed).unwrap().0).unwrap();
            ensure(a == b, || format!("{} seed {seed} traces differ", task.name))?;
            traces += 1;
        }
    }
    Ok(format!("{compared} rooms and {traces} traces byte-identical across runs"))
}

fn separation(escape: &BTreeMap<(u8, String), Vec<Episode>>) -> Check {
    let mut parts = Vec::new();
    let mut bad = Vec::new();
    for level in 1..=4u8 {
        let rate = |p: &str| {
            let eps = &escape[&(level, p.to_string())];
            eps.iter().filter(|e| e.trace.success()).count() as f64 / eps.len() as f64
        };
        let (o, r) = (rate("oracle"), rate("random"));
        parts.push(format!("L{level} oracle {o:.3} random {r:.3}"));
        if o != 1.0 {
            bad.push(format!("L{level} oracle {o}"));
        }
        if level >= 2 && r >= 0.10 {
            bad.push(format!("L{level} random {r}"));
        }
    }
    ensure(bad.is_empty(), || format!("{} ({})", bad.join(", "), parts.join(", ")))?;
    Ok(parts.join(", "))
}

fn difficulty(rooms: &[Vec<GeneratedRoom>]) -> Check {
    let m: Vec<f64> = rooms
        .iter()
        .map(|rs| median(rs.iter().take(SWEEP_SEEDS as usize).map(|r| r.certificate.optimal_length).collect()))
        .collect();
    let detail = format!("medians L1 {} L2 {} L3 {} L4 {}", m[0], m[1], m[2], m[3]);
    ensure(m[0] < m[1] && m[1] <= m[2], || detail.clone())?;
    Ok(detail)
}

fn deception(rooms: &[Vec<GeneratedRoom>]) -> Check {
    let mut blocked = 0;
    for room in rooms[3].iter().take(SWEEP_SEEDS as usize) {
        let lies: BTreeSet<NodeId> = room
            .graph
            .objects()
            .filter(|o| o.clue.as_ref().is_some_and(|c| c.veracity == Veracity::Deceptive))
            .map(|o| o.id.clone())
            .collect();
        ensure(!lies.is_empty(), || format!("seed {} has no deceptive clue", room.seed))?;
        let only = SolveOptions { knowledge: KnowledgeFilter::Only(lies), ..Default::default() };
        match solve(&room.graph, &room.goal, &only) {
            Err(SolveError::Unsolvable { .. }) => blocked += 1,
            other => return Err(format!("seed {}: {:?}", room.seed, other.map(|c| c.optimal_length))),
        }
        solve(&room.graph, &room.goal, &SolveOptions::default()).map_err(|e| format!("seed {}: {e}", room.seed))?;
    }
    Ok(format!("{blocked}/{SWEEP_SEEDS} unsolvable on the deceptive clue alone, all solvable with full knowledge"))
}

/// Replays a trace tick by tick: every agent observes the pre-tick world,
/// then the moves apply in step order.
fn replay_violations(ep: &Episode) -> Result<usize, String> {
    let mut g = ep.start.clone();
    let mut found = 0;
    let mut i = 0;
    let steps = &ep.trace.steps;
    while i < steps.len() {
        let tick = steps[i].tick;
        let end = steps[i..].iter().position(|s| s.tick != tick).map_or(steps.len(), |p| i + p);
        for s in &steps[i..end] {
            let obs = observe(&g, &s.agent_id).map_err(|e| e.to_string())?;
            if observation_digest(&obs) != s.observation_digest {
                return Err(format!("{} tick {tick}: observation digest differs", ep.trace.task_id));
            }
            found += visibility_violations(&g, &obs).len();
        }
        for s in &steps[i..end] {
            apply_in_place(&mut g, &s.agent_id, &s.action).map_err(|e| e.to_string())?;
        }
        i = end;
    }
    Ok(found)
}

fn observability(all: &[&Episode]) -> Check {
    let mut observations = 0;
    let mut reported = 0;
    let mut replayed = 0;
    for ep in all {
        observations += ep.trace.steps.len();
        reported += ep.trace.visibility_violations;
        replayed += replay_violations(ep)?;
    }
    ensure(reported == 0 && replayed == 0, || format!("{reported} reported, {replayed} on replay"))?;
    Ok(format!("0 violations over {observations} observations in {} episodes", all.len()))
}

/// Corrupts the graph where the last edit's subject is concerned. `None`
/// when no single fault applies.
fn tamper(before: &SceneGraph, after: &SceneGraph, last: &Edit) -> Option<SceneGraph> {
    let mut g = after.clone();
    let subject = match last {
        Edit::Replace { object, .. } => object.id.clone(),
        e => e.subject().clone(),
    };
    let fault = match last {
        Edit::Remove { object_id } => {
            let object = before.object(object_id)?.clone();
            let parent = before.parent(object_id)?.clone();
            Edit::Add { object, relation: parent.kind, target: parent.dst }
        }
        Edit::SetState { key, value, .. } => {
            let want = match value {
                Some(v) => *v,
                None => *all_states().iter().find(|v| v.key() == *key)?,
            };
            let flipped = all_states().into_iter().find(|v| v.key() == *key && *v != want)?;
            Edit::SetState { object_id: subject.clone(), key: *key, value: Some(flipped) }
        }
        Edit::Replace { .. } => {
            let mut object = after.object(&subject)?.clone();
            object.display_name.push_str(" (tampered)");
            Edit::Replace { object_id: subject.clone(), object }
        }
        Edit::Add { .. } | Edit::Move { .. } => {
            after.object(&subject)?;
            let here = after.parent(&subject).cloned();
            let elsewhere = after.rooms().map(|r| r.id.clone()).find(|r| here.as_ref().is_none_or(|p| &p.dst != r));
            match elsewhere {
                Some(room) => Edit::Move { object_id: subject.clone(), relation: RelationKind::InRoom, target: room },
                None => Edit::Remove { object_id: subject.clone() },
            }
        }
    };
    if apply_edit(&mut g, &fault).is_ok() {
        return Some(g);
    }
    // Fall back to deleting the subject outright.
    let mut g = after.clone();
    apply_edit(&mut g, &Edit::Remove { object_id: subject }).ok()?;
    Some(g)
}

fn all_states() -> Vec<StateValue> {
    use StateValue::*;
    vec![Open, Closed, Locked, Unlocked, On, Off, Revealed, Hidden]
}

fn edit_closure(rooms: &[Vec<GeneratedRoom>]) -> Check {
    let pool: Vec<&GeneratedRoom> = rooms.iter().flat_map(|rs| rs.iter().take(25)).collect();
    let agent = NodeId::from("agent_1");
    let (mut honest, mut tampered, mut flagged) = (0, 0, 0);
    for k in 0..EDIT_PAIRS {
        let before = &pool[(k as usize) % pool.len()].graph;
        let edits = random_edits(before, k, 1 + (k % 10) as usize);
        let (after, first) = apply_edits(before, &edits);
        let d = diff(before, &after).map_err(|e| format!("pair {k}: diff: {e}"))?;
        let (replayed, _) = apply_edits(before, &d);
        ensure(replayed.content_eq(&after), || format!("pair {k}: replayed diff differs"))?;

        let kept: Vec<Edit> = edits
            .into_iter()
            .zip(&first.verdicts)
            .filter(|(_, v)| v.status == EditStatus::Applied)
            .map(|(e, _)| e)
            .collect();
        let (good, report) = apply_and_check(before, &kept, &agent).map_err(|e| e.to_string())?;
        ensure(report.passed, || format!("pair {k}: honest batch flagged: {:?}", report.mismatches))?;
        honest += 1;

        let Some(last) = kept.last() else { continue };
        let Some(bad) = tamper(before, &good, last) else { continue };
        tampered += 1;
        let report = interpretation_check(&bad, &kept, &report, &agent).map_err(|e| e.to_string())?;
        ensure(!report.passed && !report.mismatches.is_empty(), || format!("pair {k}: tamper of {:?} went unflagged", last))?;
        flagged += 1;
    }
    Ok(format!("{EDIT_PAIRS} diff closures, {honest}/{honest} honest batches pass, {flagged}/{tampered} tampers flagged"))
}

fn classifier(failed: &[&Episode], succeeded: &[&Episode]) -> Check {
    let g = fixtures::world();
    let mut fixtures_ok = 0;
    let families = fixtures::families();
    for (want, make) in &families {
        for k in 0..6 {
            let got = classify_failure(&make(k), &g);
            ensure(got == Ok(*want), || format!("family {want} variant {k}: {got:?}"))?;
            fixtures_ok += 1;
        }
    }
    let distinct: BTreeSet<_> = families.iter().map(|(c, _)| *c).collect();
    ensure(distinct.len() == 6, || format!("{} families", distinct.len()))?;
    let mut counts: BTreeMap<FailureCategory, usize> = BTreeMap::new();
    for ep in failed {
        let c = classify_failure(&ep.trace, &ep.end).map_err(|e| format!("{} seed {}: {e}", ep.trace.task_id, ep.trace.seed))?;
        *counts.entry(c).or_default() += 1;
    }
    for ep in succeeded {
        ensure(classify_failure(&ep.trace, &ep.end) == Err(ClassifyError::NotAFailure), || "success classified".into())?;
    }
    Ok(format!("6/6 families ({fixtures_ok} fixtures), {} failed episodes each got one category {counts:?}", failed.len()))
}

fn summary(ep: &Episode) -> EpisodeSummary {
    EpisodeSummary { seed: ep.trace.seed, success: ep.trace.success(), ticks: ep.trace.ticks, category: None, error: None }
}

fn aggregation(escape: &BTreeMap<(u8, String), Vec<Episode>>) -> Check {
    for n in 1..=60usize {
        for k in 0..=n {
            let outcomes: Vec<EpisodeSummary> = (0..n)
                .map(|i| EpisodeSummary { seed: i as u64, success: i < k, ticks: 1, category: None, error: None })
                .collect();
            let row = aggregate("t", "p", &outcomes);
            let mean = k as f64 / n as f64;
            let var = if n == 1 { 0.0 } else { (k * (n - k)) as f64 / (n * (n - 1)) as f64 };
            ensure((row.mean - mean).abs() <= 1e-12 && (row.std - var.sqrt()).abs() <= 1e-12, || {
                format!("n {n} k {k}: {} ± {} vs {mean} ± {}", row.mean, row.std, var.sqrt())
            })?;
        }
    }

    let policies = ["oracle", "random"];
    let tasks: Vec<String> = (1..=4).map(|l| format!("Escape L{l}")).collect();
    let mut rows = Vec::new();
    let mut episodes = Vec::new();
    let mut expected = Vec::new();
    for level in 1..=4u8 {
        let mut cells = Vec::new();
        for p in policies {
            let outs: Vec<EpisodeSummary> = escape[&(level, p.to_string())].iter().map(summary).collect();
            let (n, k) = (outs.len(), outs.iter().filter(|o| o.success).count());
            let std = ((k * (n - k)) as f64 / (n * (n - 1)) as f64).sqrt();
            cells.push(format!("{:.2} ± {:.2}", k as f64 / n as f64, std));
            rows.push(aggregate(&tasks[level as usize - 1], p, &outs));
            episodes.push(outs);
        }
        expected.push(cells);
    }
    let report = BenchmarkReport::new(tasks.clone(), policies.iter().map(|p| p.to_string()).collect(), rows, episodes);
    let text = render_table(&report);
    let lines: Vec<&str> = text.lines().collect();
    ensure(lines.len() == 2 + tasks.len(), || format!("{} lines:\n{text}", lines.len()))?;
    let split = |l: &str| l.split(" | ").map(str::trim).map(String::from).collect::<Vec<_>>();
    ensure(split(lines[0]) == ["Task", "oracle", "random"], || format!("header {:?}", lines[0]))?;
    ensure(lines[1].chars().all(|c| c == '-' || c == '+') && lines[1].matches("-+-").count() == 2, || format!("rule {:?}", lines[1]))?;
    let bars = |l: &str| l.char_indices().filter(|(_, c)| *c == '|' || *c == '+').map(|(i, _)| l[..i].chars().count()).collect::<Vec<_>>();
    let columns = bars(lines[1]);
    for (i, task) in tasks.iter().enumerate() {
        let cells = split(lines[2 + i]);
        let mut want = vec![task.clone()];
        want.extend(expected[i].iter().cloned());
        ensure(cells == want, || format!("row {cells:?} vs {want:?}"))?;
        ensure(bars(lines[2 + i]) == columns, || format!("row {i} misaligned:\n{text}"))?;
    }
    Ok(format!("closed form to 1e-12 for n <= 60; table layout matches\n{}", text.trim_end()))
}

fn multi_agent() -> Check {
    let oracle = PolicyKind::Oracle;
    let mut ok = 0;
    let mut misses = Vec::new();
    for seed in 0..PAIRED_TASKS {
        let (g, goal) = paired_task(seed).map_err(|e| format!("seed {seed}: {e}"))?;
        let (solo, solo_goal) = single_agent(&g, &goal);
        let team: BTreeMap<NodeId, Box<dyn Policy>> =
            g.agent_ids().enumerate().map(|(i, a)| (a.clone(), policy(&oracle, seed, i))).collect();
        let one: BTreeMap<NodeId, Box<dyn Policy>> = [(NodeId::from("agent_1"), policy(&oracle, seed, 0))].into();
        let (t2, _) = run_episode("paired", &g, &goal, &team, 200, seed).map_err(|e| e.to_string())?;
        let (t1, _) = run_episode("paired solo", &solo, &solo_goal, &one, 200, seed).map_err(|e| e.to_string())?;
        if t2.success() && t2.ticks <= t1.ticks {
            ok += 1;
        } else {
            misses.push(format!("{seed}: team {} ({:?}) vs solo {}", t2.ticks, t2.terminal, t1.ticks));
        }
    }
    let detail = format!("{ok}/{PAIRED_TASKS} paired tasks with team ticks <= solo ticks");
    ensure(ok * 10 >= PAIRED_TASKS * 9, || format!("{detail}; misses {}", misses.join(", ")))?;
    Ok(detail)
}

fn value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap()
}

fn wire(rooms: &[Vec<GeneratedRoom>]) -> Check {
    let srv = common::start(Duration::ZERO);
    let client = Client::new(&srv.base);
    let w = |e: ClientError| e.to_string();
    ensure(client.health().map_err(w)?["status"] == "ok", || "healthz".into())?;
    let mut endpoints = BTreeSet::from(["GET /healthz"]);

    for level_rooms in rooms {
        let r = &level_rooms[11];
        let created = client.create(&json!({ "level": r.level, "seed": r.seed })).map_err(w)?;
        ensure(created.graph == to_document(&r.graph) && value(&created.goal) == value(&Some(&r.goal)), || {
            format!("L{} create differs", r.level)
        })?;
        ensure(value(&created.certificate) == value(&Some(&r.certificate)), || "certificate differs".into())?;
        let id = created.id;
        let mut g = r.graph.clone();
        let mut history = GoalHistory::new(&r.goal);
        history.update(&r.goal, &g, 0, 0, None);
        for (tick, step) in r.certificate.plan.iter().enumerate() {
            let obs = client.observation(&id, step.agent.as_str()).map_err(w)?;
            ensure(obs == observe(&g, &step.agent).unwrap(), || format!("L{} tick {tick} observation differs", r.level))?;
            let req = ActionsRequest { moves: vec![Move { agent: step.agent.clone(), action: step.action.clone() }] };
            let resp = client.actions(&id, &req).map_err(w)?;
            let (next, outcome) = apply(&g, &step.agent, &step.action).unwrap();
            g = next;
            history.update(&r.goal, &g, tick as u64 + 1, 1, Some(&step.agent));
            ensure(resp.outcomes == vec![outcome] && resp.revision == g.revision() && resp.tick == tick as u64 + 1, || {
                format!("L{} tick {tick} actions differ", r.level)
            })?;
            ensure(value(&resp.goal) == value(&Some(goal_check(&g, &r.goal, &history))), || "step goal differs".into())?;
        }
        ensure(client.scene_graph(&id).map_err(w)? == to_document(&g), || "scene graph differs".into())?;
        let report = client.goal_check(&id).map_err(w)?;
        ensure(report.pass && value(&report) == value(&goal_check(&g, &r.goal, &history)), || "goal check differs".into())?;
    }
    endpoints.extend(["POST /sessions", "GET observation", "POST actions", "GET scene-graph", "GET goal-check"]);

    let r = &rooms[0][7];
    let id = client.create(&json!({ "level": 1, "seed": 7 })).map_err(w)?.id;
    let viewpoint = NodeId::from("agent_1");
    let here = r.graph.agent_room(&viewpoint).unwrap().clone();
    let ball = ObjectNode::new("ball_9", "ball", "red ball", &[Affordance::Graspable]);
    let batches = vec![
        vec![],
        vec![Edit::Add { object: ball, relation: RelationKind::InRoom, target: here }],
        vec![Edit::Move { object_id: "ball_9".into(), relation: RelationKind::Inside, target: "nowhere_1".into() }],
    ];
    let mut g = r.graph.clone();
    for edits in batches {
        let resp = client.edits(&id, &EditsRequest { edits: edits.clone(), viewpoint: None }).map_err(w)?;
        let (next, report) = apply_and_check(&g, &edits, &viewpoint).unwrap();
        g = next;
        ensure(resp.report == report && resp.revision == g.revision(), || format!("edits {edits:?} differ"))?;
    }
    let wanted = Solvability::from_result(solve(&g, &r.goal, &SolveOptions::default()))?;
    let got = client.recheck(&id, &RecheckRequest { budget: None }).map_err(w)?;
    ensure(value(&got.result) == value(&wanted) && got.revision == g.revision(), || "recheck differs".into())?;
    let tight = client.recheck(&id, &RecheckRequest { budget: Some(1) }).map_err(w)?;
    let wanted = Solvability::from_result(solve(&g, &r.goal, &SolveOptions::with_budget(1)))?;
    ensure(value(&tight.result) == value(&wanted), || "budgeted recheck differs".into())?;
    endpoints.extend(["POST edits", "POST recheck-solvable"]);

    let slow = common::start(Duration::from_millis(400));
    let id = Client::new(&slow.base).create(&json!({ "level": 1, "seed": 8 })).map_err(w)?.id;
    let url = slow.url(&format!("/sessions/{id}/actions"));
    let gate = Arc::new(Barrier::new(2));
    let racers: Vec<_> = (0..2u64)
        .map(|i| {
            let (url, gate) = (url.clone(), gate.clone());
            std::thread::spawn(move || {
                gate.wait();
                std::thread::sleep(Duration::from_millis(i * 100));
                let body = json!({ "moves": [{ "agent": "agent_1", "action": { "type": "wait" } }] });
                reqwest::blocking::Client::new().post(&url).json(&body).send().map(|r| r.status())
            })
        })
        .collect();
    let statuses: Vec<StatusCode> =
        racers.into_iter().map(|h| h.join().unwrap().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    let conflicts = statuses.iter().filter(|s| **s == StatusCode::CONFLICT).count();
    let oks = statuses.iter().filter(|s| **s == StatusCode::OK).count();
    ensure(conflicts == 1 && oks == 1, || format!("statuses {statuses:?}"))?;
    Ok(format!("{} endpoints match in-process, concurrent writers got exactly one 409", endpoints.len()))
}

fn main() {
    let mut run = Run { lines: Vec::new() };
    let started = Instant::now();

    let mut rooms = Vec::new();
    run.record("solvability sweep", sweep(&mut rooms));
    for (level, rs) in rooms.iter_mut().enumerate() {
        rs.extend((SWEEP_SEEDS..SEPARATION_SEEDS).map(|s| generate(&LevelConfig::new(level as u8 + 1, s)).unwrap()));
    }

    let mut escape: BTreeMap<(u8, String), Vec<Episode>> = BTreeMap::new();
    for rs in &rooms {
        for kind in [PolicyKind::Oracle, PolicyKind::Random] {
            let eps = rs.iter().map(|r| escape_episode(r, &kind)).collect();
            escape.insert((rs[0].level, kind.name()), eps);
        }
    }
    let mut household = Vec::new();
    for task in BenchmarkSuite::standard(HOUSEHOLD_SEEDS).tasks.iter().skip(4) {
        for kind in [PolicyKind::Oracle, PolicyKind::Random] {
            for seed in 0..HOUSEHOLD_SEEDS {
                let start = prepare(task, seed).unwrap().graph;
                let (trace, end) = run_cell(task, &kind, seed).unwrap();
                household.push(Episode { trace, start, end });
            }
        }
    }
    let all: Vec<&Episode> = escape.values().flatten().chain(&household).collect();

    run.record("determinism", determinism(&rooms));
    run.record("oracle/random separation", separation(&escape));
    run.record("difficulty monotonicity", difficulty(&rooms));
    run.record("level-4 deception", deception(&rooms));
    run.record("partial observability", observability(&all));
    run.record("edit-protocol closure", edit_closure(&rooms));
    let (ok, failed): (Vec<&Episode>, Vec<&Episode>) = all.iter().partition(|e| e.trace.success());
    run.record("failure classifier", classifier(&failed, &ok));
    run.record("aggregation exactness", aggregation(&escape));
    run.record("multi-agent non-degradation", multi_agent());
    run.record("wire/in-process equivalence", wire(&rooms));

    let failed: Vec<&str> = run.lines.iter().filter(|(_, r)| r.is_err()).map(|(n, _)| n.as_str()).collect();
    println!(
        "{} of {} criteria passed in {:.1}s",
        run.lines.len() - failed.len(),
        run.lines.len(),
        started.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
