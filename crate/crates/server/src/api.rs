//! Wire types for the REST routes and the error body they share.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use symenv_core::action::{Action, Outcome};
use symenv_core::escape::{PlanStep, SolutionCertificate, SolveError};
use symenv_core::goal::GoalSpec;
use symenv_core::harness::GoalReport;
use symenv_core::scene::{SceneDocument, SchemaError};
use symenv_core::task::{CheckReport, EditList};
use symenv_core::NodeId;

/// Error body: a stable `error` code, a message, and for schema errors a
/// JSON pointer to the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, error: &str, message: impl Into<String>) -> Self {
        ApiError { status, body: ErrorBody { error: error.into(), message: message.into(), path: None } }
    }

    pub fn schema(e: SchemaError) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: ErrorBody { error: "schema_error".into(), message: e.message, path: Some(e.path) },
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {what} {id}"))
    }

    pub fn no_goal() -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "no_goal", "this session has no goal")
    }

    pub fn unprocessable(error: &str, message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, error, message)
    }

    pub fn conflict() -> Self {
        ApiError::new(StatusCode::CONFLICT, "write_conflict", "another write to this session is in flight")
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

/// Parses `bytes` as `T`, reporting the failing field as a JSON pointer.
/// An empty body parses as `{}`.
pub fn parse_body<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, ApiError> {
    let text = if bytes.iter().all(u8::is_ascii_whitespace) { &b"{}"[..] } else { bytes };
    let value: Value = serde_json::from_slice(text)
        .map_err(|e| ApiError::schema(SchemaError::new("", format!("malformed JSON: {e}"))))?;
    parse_value(value)
}

pub fn parse_value<T: DeserializeOwned>(value: Value) -> Result<T, ApiError> {
    use serde_path_to_error::Segment;
    serde_path_to_error::deserialize(value).map_err(|e| {
        let mut pointer = String::new();
        for seg in e.path().iter() {
            match seg {
                Segment::Seq { index } => pointer.push_str(&format!("/{index}")),
                Segment::Map { key } => pointer.push_str(&format!("/{key}")),
                Segment::Enum { variant } => pointer.push_str(&format!("/{variant}")),
                Segment::Unknown => pointer.push_str("/?"),
            }
        }
        ApiError::schema(SchemaError::new(pointer, e.inner().to_string()))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSessionResponse {
    pub id: String,
    pub graph: SceneDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<GoalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<SolutionCertificate>,
}

/// A session built from a scene document, with an optional goal.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FromDocument {
    pub document: Value,
    #[serde(default)]
    pub goal: Option<GoalSpec>,
}

/// A session built by instantiating a task spec on a base scene.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FromTaskSpec {
    pub task_spec: Value,
    pub base: Value,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Move {
    pub agent: NodeId,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionsRequest {
    pub moves: Vec<Move>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionsResponse {
    /// Ticks so far in this session; each request is one tick.
    pub tick: u64,
    pub outcomes: Vec<Outcome>,
    pub revision: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<GoalReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EditsRequest {
    pub edits: EditList,
    /// Agent or room the view-side check observes from. Defaults to the
    /// first agent, else the first room.
    #[serde(default)]
    pub viewpoint: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditsResponse {
    pub report: CheckReport,
    pub revision: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecheckRequest {
    #[serde(default)]
    pub budget: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Solvability {
    Solvable { optimal_length: usize, plan: Vec<PlanStep> },
    Unsolvable { explored: usize },
    BudgetExceeded { explored: usize },
}

impl Solvability {
    pub fn from_result(r: Result<SolutionCertificate, SolveError>) -> Result<Self, String> {
        match r {
            Ok(c) => Ok(Solvability::Solvable { optimal_length: c.optimal_length, plan: c.plan }),
            Err(SolveError::Unsolvable { explored }) => Ok(Solvability::Unsolvable { explored }),
            Err(SolveError::BudgetExceeded { explored }) => Ok(Solvability::BudgetExceeded { explored }),
            Err(e) => Err(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecheckResponse {
    pub revision: u64,
    #[serde(flatten)]
    pub result: Solvability,
}
