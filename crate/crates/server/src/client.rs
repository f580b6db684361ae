//! Blocking HTTP client for the session routes.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use symenv_core::harness::GoalReport;
use symenv_core::scene::{Observation, SceneDocument};

use crate::api::*;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response: {0}")]
    Decode(String),
}

pub struct Client {
    base: String,
    http: reqwest::blocking::Client,
}

impl Client {
    /// `base` is the server root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        Client { base: base.into().trim_end_matches('/').to_string(), http: reqwest::blocking::Client::new() }
    }

    fn finish<T: DeserializeOwned>(resp: reqwest::blocking::Response) -> Result<T, ClientError> {
        let status = resp.status();
        let text = resp.text().map_err(|e| ClientError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(ClientError::Status { status: status.as_u16(), body: text });
        }
        serde_json::from_str(&text).map_err(|e| ClientError::Decode(e.to_string()))
    }

    fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        let resp = self.http.get(format!("{}{path}", self.base)).send().map_err(|e| ClientError::Transport(e.to_string()))?;
        Self::finish(resp)
    }

    fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, ClientError> {
        let resp = self
            .http
            .post(format!("{}{path}", self.base))
            .json(body)
            .send()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Self::finish(resp)
    }

    pub fn health(&self) -> Result<Value, ClientError> {
        self.get("/healthz")
    }

    pub fn create(&self, body: &Value) -> Result<CreateSessionResponse, ClientError> {
        self.post("/sessions", body)
    }

    pub fn scene_graph(&self, id: &str) -> Result<SceneDocument, ClientError> {
        self.get(&format!("/sessions/{id}/scene-graph"))
    }

    pub fn observation(&self, id: &str, agent: &str) -> Result<Observation, ClientError> {
        self.get(&format!("/sessions/{id}/agents/{agent}/observation"))
    }

    pub fn actions(&self, id: &str, req: &ActionsRequest) -> Result<ActionsResponse, ClientError> {
        self.post(&format!("/sessions/{id}/actions"), req)
    }

    pub fn edits(&self, id: &str, req: &EditsRequest) -> Result<EditsResponse, ClientError> {
        self.post(&format!("/sessions/{id}/edits"), req)
    }

    pub fn goal_check(&self, id: &str) -> Result<GoalReport, ClientError> {
        self.get(&format!("/sessions/{id}/goal-check"))
    }

    pub fn recheck(&self, id: &str, req: &RecheckRequest) -> Result<RecheckResponse, ClientError> {
        self.post(&format!("/sessions/{id}/recheck-solvable"), req)
    }
}
