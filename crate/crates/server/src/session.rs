//! In-memory sessions: one world per session, one writer at a time.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use symenv_core::action::{apply, step_multi, ActionError, Outcome};
use symenv_core::escape::{generate, solve, GenerateError, LevelConfig, SolveOptions};
use symenv_core::goal::GoalSpec;
use symenv_core::harness::{goal_check, GoalHistory, GoalReport};
use symenv_core::scene::{check_invariants, from_value, observe, to_document, Observation, SceneDocument, SceneError, SceneGraph, SchemaError};
use symenv_core::task::{apply_and_check, instantiate, validate_task_spec, CheckReport, Edit, TaskError};
use symenv_core::NodeId;

use crate::api::*;

/// What a session has done, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogEntry {
    Actions { tick: u64, moves: Vec<Move>, outcomes: Vec<Outcome>, revision: u64 },
    Edits { edits: Vec<Edit>, passed: bool, revision: u64 },
}

#[derive(Debug, Clone)]
pub struct SessionState {
    pub graph: SceneGraph,
    pub goal: Option<GoalSpec>,
    pub history: GoalHistory,
    pub tick: u64,
    pub log: Vec<LogEntry>,
    pub created: u64,
}

impl SessionState {
    pub fn new(graph: SceneGraph, goal: Option<GoalSpec>) -> Self {
        let mut history = GoalHistory::default();
        if let Some(goal) = &goal {
            history = GoalHistory::new(goal);
            history.update(goal, &graph, 0, 0, None);
        }
        SessionState { graph, goal, history, tick: 0, log: Vec::new(), created: unix_now() }
    }

    pub fn goal_report(&self) -> Option<GoalReport> {
        self.goal.as_ref().map(|goal| goal_check(&self.graph, goal, &self.history))
    }
}

/// Serialized form written on shutdown and read back on start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub id: String,
    pub graph: SceneDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<GoalSpec>,
    pub history: GoalHistory,
    pub tick: u64,
    pub log: Vec<LogEntry>,
    pub created: u64,
}

pub struct Session {
    pub id: String,
    writer: tokio::sync::Mutex<()>,
    state: RwLock<SessionState>,
    touched: Mutex<Instant>,
}

impl Session {
    fn new(id: String, state: SessionState) -> Self {
        Session { id, writer: tokio::sync::Mutex::new(()), state: RwLock::new(state), touched: Mutex::new(Instant::now()) }
    }

    fn touch(&self) {
        *self.touched.lock().expect("touch lock") = Instant::now();
    }

    fn idle(&self) -> Duration {
        self.touched.lock().expect("touch lock").elapsed()
    }

    /// The latest committed state.
    pub fn read(&self) -> SessionState {
        self.touch();
        self.state.read().expect("session state lock").clone()
    }

    /// Runs `f` as the session's single writer. Fails with 409 when another
    /// write is in flight; `hold` keeps the writer slot busy for that long
    /// after the work is done.
    pub async fn write<T: Send + 'static>(
        self: &Arc<Self>,
        hold: Duration,
        f: impl FnOnce(&SessionState) -> Result<(SessionState, T), ApiError> + Send + 'static,
    ) -> Result<T, ApiError> {
        let _guard = self.writer.try_lock().map_err(|_| ApiError::conflict())?;
        self.touch();
        let current = self.read();
        let (next, out) = tokio::task::spawn_blocking(move || f(&current))
            .await
            .map_err(|e| ApiError::internal(e.to_string()))??;
        if !hold.is_zero() {
            tokio::time::sleep(hold).await;
        }
        *self.state.write().expect("session state lock") = next;
        Ok(out)
    }

    pub fn snapshot(&self) -> Snapshot {
        let s = self.read();
        Snapshot {
            id: self.id.clone(),
            graph: to_document(&s.graph),
            goal: s.goal,
            history: s.history,
            tick: s.tick,
            log: s.log,
            created: s.created,
        }
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// 128 random bits, hex encoded.
pub fn new_session_id() -> String {
    format!("{:032x}", rand::random::<u128>())
}

pub struct Store {
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    ttl: Duration,
}

impl Store {
    pub fn new(ttl: Duration) -> Self {
        Store { sessions: RwLock::new(HashMap::new()), ttl }
    }

    pub fn insert(&self, state: SessionState) -> Arc<Session> {
        let mut map = self.sessions.write().expect("store lock");
        let mut id = new_session_id();
        while map.contains_key(&id) {
            id = new_session_id();
        }
        let s = Arc::new(Session::new(id.clone(), state));
        map.insert(id, s.clone());
        s
    }

    pub fn get(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        let s = self.sessions.read().expect("store lock").get(id).cloned();
        match s {
            Some(s) if s.idle() <= self.ttl => Ok(s),
            _ => Err(ApiError::not_found("session", id)),
        }
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drops sessions idle for longer than the TTL; returns how many.
    pub fn sweep(&self) -> usize {
        let mut map = self.sessions.write().expect("store lock");
        let before = map.len();
        map.retain(|_, s| s.idle() <= self.ttl);
        before - map.len()
    }

    pub fn save(&self, dir: &Path) -> std::io::Result<usize> {
        std::fs::create_dir_all(dir)?;
        let sessions: Vec<Arc<Session>> = self.sessions.read().expect("store lock").values().cloned().collect();
        for s in &sessions {
            let body = serde_json::to_string_pretty(&s.snapshot()).map_err(std::io::Error::other)?;
            std::fs::write(dir.join(format!("{}.json", s.id)), body)?;
        }
        Ok(sessions.len())
    }

    /// Restores every `*.json` snapshot in `dir`. Unreadable files are
    /// skipped with a warning.
    pub fn load(&self, dir: &Path) -> std::io::Result<usize> {
        let mut n = 0;
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_none_or(|e| e != "json") {
                continue;
            }
            let snap: Snapshot = match std::fs::read_to_string(&path).map_err(|e| e.to_string()).and_then(|t| {
                serde_json::from_str(&t).map_err(|e| e.to_string())
            }) {
                Ok(s) => s,
                Err(e) => {
                    tracing::warn!(path = %path.display(), "skipping snapshot: {e}");
                    continue;
                }
            };
            let graph = match symenv_core::scene::from_value(serde_json::to_value(&snap.graph).expect("document")) {
                Ok(g) => g,
                Err(e) => {
                    tracing::warn!(path = %path.display(), "skipping snapshot: {e}");
                    continue;
                }
            };
            let state =
                SessionState { graph, goal: snap.goal, history: snap.history, tick: snap.tick, log: snap.log, created: snap.created };
            self.sessions.write().expect("store lock").insert(snap.id.clone(), Arc::new(Session::new(snap.id, state)));
            n += 1;
        }
        Ok(n)
    }
}

// ---- operations ---------------------------------------------------------

fn scene_error(e: SceneError) -> ApiError {
    match e {
        SceneError::Schema(s) => ApiError::schema(s),
        other => ApiError::new(axum::http::StatusCode::BAD_REQUEST, "invalid_scene", other.to_string()),
    }
}

fn document(value: Value, at: &str) -> Result<SceneGraph, ApiError> {
    let g = from_value(value).map_err(|e| ApiError::schema(SchemaError::new(format!("/{at}{}", e.path), e.message)))?;
    let v = check_invariants(&g);
    if !v.is_empty() {
        return Err(scene_error(SceneError::InvariantViolation(v)));
    }
    Ok(g)
}

/// Builds the initial state for a `POST /sessions` body: a level config
/// (`level`, `seed`, ...), a `document` with optional `goal`, or a
/// `task_spec` with its `base` scene.
pub fn create_state(body: Value) -> Result<(SessionState, Option<symenv_core::escape::SolutionCertificate>), ApiError> {
    let Value::Object(map) = &body else {
        return Err(ApiError::schema(SchemaError::new("", "expected a JSON object")));
    };
    if map.contains_key("level") {
        let cfg: LevelConfig = parse_value(body)?;
        let room = generate(&cfg).map_err(|e| match e {
            GenerateError::Config(c) => ApiError::new(axum::http::StatusCode::BAD_REQUEST, "range_error", c.0),
            other => ApiError::unprocessable("generation_failure", other.to_string()),
        })?;
        Ok((SessionState::new(room.graph, Some(room.goal)), Some(room.certificate)))
    } else if map.contains_key("document") {
        let req: FromDocument = parse_value(body)?;
        let g = document(req.document, "document")?;
        if let Some(goal) = &req.goal {
            goal.check().map_err(|e| ApiError::new(axum::http::StatusCode::BAD_REQUEST, "invalid_goal", e.to_string()))?;
        }
        Ok((SessionState::new(g, req.goal), None))
    } else if map.contains_key("task_spec") {
        let req: FromTaskSpec = parse_value(body)?;
        let spec = validate_task_spec(&req.task_spec).map_err(|e| match e {
            TaskError::Schema(s) => ApiError::schema(SchemaError::new(format!("/task_spec{}", s.path), s.message)),
            other => ApiError::new(axum::http::StatusCode::BAD_REQUEST, "invalid_task_spec", other.to_string()),
        })?;
        let base = document(req.base, "base")?;
        let (g, goal) =
            instantiate(&spec, &base, req.seed).map_err(|e| ApiError::unprocessable("instantiation_error", e.to_string()))?;
        Ok((SessionState::new(g, Some(goal)), None))
    } else {
        Err(ApiError::schema(SchemaError::new("", "expected one of `level`, `document`, or `task_spec`")))
    }
}

pub fn observation(s: &SessionState, agent: &str) -> Result<Observation, ApiError> {
    let id = NodeId::from(agent);
    if s.graph.agent(&id).is_none() {
        return Err(ApiError::not_found("agent", agent));
    }
    observe(&s.graph, &id).map_err(|e| ApiError::internal(e.to_string()))
}

/// One tick: the moves run in list order; each one that succeeds is
/// credited in the goal history.
pub fn post_actions(s: &SessionState, req: ActionsRequest) -> Result<(SessionState, ActionsResponse), ApiError> {
    let moves: Vec<(NodeId, symenv_core::action::Action)> = req.moves.iter().map(|m| (m.agent.clone(), m.action.clone())).collect();
    // Rejects duplicate or unknown agents before anything changes.
    step_multi(&s.graph, &moves).map_err(|e| match e {
        ActionError::UnknownAgent(a) => ApiError::not_found("agent", a.as_str()),
        other => ApiError::bad_request(other.to_string()),
    })?;
    let mut next = s.clone();
    next.tick += 1;
    let mut outcomes = Vec::with_capacity(moves.len());
    for (seq, (agent, action)) in moves.iter().enumerate() {
        let (g, outcome) = apply(&next.graph, agent, action).map_err(|e| ApiError::internal(e.to_string()))?;
        next.graph = g;
        if let Some(goal) = &next.goal {
            next.history.update(goal, &next.graph, next.tick, seq as u32 + 1, Some(agent));
        }
        outcomes.push(outcome);
    }
    let revision = next.graph.revision();
    next.log.push(LogEntry::Actions { tick: next.tick, moves: req.moves, outcomes: outcomes.clone(), revision });
    let resp = ActionsResponse { tick: next.tick, outcomes, revision, goal: next.goal_report() };
    Ok((next, resp))
}

pub fn default_viewpoint(g: &SceneGraph) -> Option<NodeId> {
    g.agent_ids().next().cloned().or_else(|| g.rooms().next().map(|r| r.id.clone()))
}

/// Applies the batch and checks it. Goals that now hold are recorded at the
/// current tick with no agent credited.
pub fn post_edits(s: &SessionState, req: EditsRequest) -> Result<(SessionState, EditsResponse), ApiError> {
    let viewpoint = match req.viewpoint.or_else(|| default_viewpoint(&s.graph)) {
        Some(v) => v,
        None => return Err(ApiError::bad_request("the scene has no agent or room to check from")),
    };
    let (g, report): (SceneGraph, CheckReport) =
        apply_and_check(&s.graph, &req.edits, &viewpoint).map_err(|_| ApiError::not_found("viewpoint", viewpoint.as_str()))?;
    let mut next = s.clone();
    next.graph = g;
    if let Some(goal) = &next.goal {
        next.history.update(goal, &next.graph, next.tick, 0, None);
    }
    let revision = next.graph.revision();
    next.log.push(LogEntry::Edits { edits: req.edits, passed: report.passed, revision });
    Ok((next, EditsResponse { report, revision }))
}

pub fn recheck(s: &SessionState, req: &RecheckRequest) -> Result<RecheckResponse, ApiError> {
    let goal = s.goal.as_ref().ok_or_else(|| ApiError::no_goal())?;
    let opts = match req.budget {
        Some(b) => SolveOptions::with_budget(b),
        None => SolveOptions::default(),
    };
    let result = Solvability::from_result(solve(&s.graph, goal, &opts)).map_err(ApiError::internal)?;
    Ok(RecheckResponse { revision: s.graph.revision(), result })
}
