//! Policy backed by an OpenAI-compatible chat-completions endpoint.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::action::Action;
use crate::goal::GoalSpec;
use crate::harness::{ParseFailure, Policy, PolicyError, PolicyMemory, TranscriptEntry, Turn};

/// Prompt/response turns of history sent with each request.
pub const TRANSCRIPT_WINDOW: usize = 8;

pub const SYSTEM_PROMPT: &str = "You are an agent acting in a symbolic household world. \
Each turn you receive a goal, what you can currently perceive, and a menu of actions. \
Answer with exactly one JSON action object and nothing else.";

/// Placeholders: `{agent}`, `{goal}`, `{observation}`, `{actions}`.
pub const DEFAULT_PROMPT_TEMPLATE: &str = "You are {agent}.\n\
Goal: {goal}\n\n\
You perceive (JSON):\n{observation}\n\n\
Legal actions (one JSON object per line):\n{actions}\n\n\
Reply with one action object, for example {\"type\":\"open\",\"object\":\"box_1\"}.";

const FEEDBACK: &str = "Your reply did not contain a valid action object";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmEndpointConfig {
    /// Up to and excluding `/chat/completions`, e.g. `http://localhost:8000/v1`.
    pub base_url: String,
    pub model: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    /// Environment variable holding the bearer token; no header when unset.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
}

fn default_timeout() -> f64 {
    30.0
}

fn default_retries() -> u32 {
    2
}

fn default_max_tokens() -> u32 {
    256
}

fn default_key_env() -> String {
    "OPENAI_API_KEY".into()
}

#[derive(Debug, Error)]
pub enum LlmConfigError {
    #[error("timeout_secs must be a positive number, got {0}")]
    Timeout(f64),
    #[error("cannot build HTTP client: {0}")]
    Client(String),
}

impl LlmEndpointConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        LlmEndpointConfig {
            base_url: base_url.into(),
            model: model.into(),
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            temperature: 0.0,
            max_tokens: default_max_tokens(),
            api_key_env: default_key_env(),
        }
    }
}

pub struct LlmPolicy {
    cfg: LlmEndpointConfig,
    template: String,
    client: reqwest::blocking::Client,
}

/// The endpoint is not contacted until the first decision.
pub fn llm_policy(cfg: LlmEndpointConfig, template: impl Into<String>) -> Result<LlmPolicy, LlmConfigError> {
    if !(cfg.timeout_secs.is_finite() && cfg.timeout_secs > 0.0) {
        return Err(LlmConfigError::Timeout(cfg.timeout_secs));
    }
    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs_f64(cfg.timeout_secs))
        .build()
        .map_err(|e| LlmConfigError::Client(e.to_string()))?;
    Ok(LlmPolicy { cfg, template: template.into(), client })
}

/// The first JSON object in `text` that parses as an action.
pub fn extract_action(text: &str) -> Result<Action, String> {
    for (i, _) in text.match_indices('{') {
        let mut de = serde_json::Deserializer::from_str(&text[i..]);
        if let Ok(v) = Value::deserialize(&mut de) {
            if let Ok(a) = serde_json::from_value::<Action>(v) {
                return Ok(a);
            }
        }
    }
    Err("no well-formed action object in the reply".into())
}

impl LlmPolicy {
    fn render(&self, turn: &Turn<'_>, goal: &GoalSpec) -> String {
        let obs = turn.observation;
        let agent = obs.agent_id.as_ref().map_or("the agent", |a| a.as_str());
        let goal_text = if goal.description.is_empty() {
            goal.conjuncts.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" and ")
        } else {
            goal.description.clone()
        };
        let menu: Vec<String> =
            turn.legal.iter().map(|a| serde_json::to_string(a).expect("actions serialize")).collect();
        self.template
            .replace("{agent}", agent)
            .replace("{goal}", &goal_text)
            .replace("{observation}", &serde_json::to_string(obs).expect("observations serialize"))
            .replace("{actions}", &menu.join("\n"))
    }

    fn complete(&self, messages: &[Value]) -> Result<String, PolicyError> {
        let url = format!("{}/chat/completions", self.cfg.base_url.trim_end_matches('/'));
        let body = json!({
            "model": self.cfg.model,
            "messages": messages,
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_tokens,
        });
        let mut last = String::new();
        for _ in 0..=self.cfg.max_retries {
            let mut req = self.client.post(&url).json(&body);
            if let Ok(key) = std::env::var(&self.cfg.api_key_env) {
                req = req.bearer_auth(key);
            }
            match req.send().and_then(|r| r.error_for_status()).and_then(|r| r.json::<Value>()) {
                Ok(v) => match v.pointer("/choices/0/message/content").and_then(Value::as_str) {
                    Some(text) => return Ok(text.to_string()),
                    None => last = "response has no choices[0].message.content".into(),
                },
                Err(e) => last = e.to_string(),
            }
            tracing::debug!(error = %last, "chat completion failed");
        }
        Err(PolicyError::Endpoint(last))
    }
}

fn message(role: &str, content: &str) -> Value {
    json!({ "role": role, "content": content })
}

impl Policy for LlmPolicy {
    fn name(&self) -> &str {
        "llm"
    }

    fn decide(&self, turn: &Turn<'_>, goal: &GoalSpec, mut mem: PolicyMemory) -> Result<(Action, PolicyMemory), PolicyError> {
        mem.note(turn.observation);
        let prompt = self.render(turn, goal);
        let window = mem.transcript.len().saturating_sub(2 * TRANSCRIPT_WINDOW);
        let mut messages = vec![message("system", SYSTEM_PROMPT)];
        messages.extend(mem.transcript[window..].iter().map(|t| message(&t.role, &t.content)));
        messages.push(message("user", &prompt));
        mem.transcript.push(TranscriptEntry { role: "user".into(), content: prompt });

        let mut attempts = 0;
        loop {
            let reply = self.complete(&messages)?;
            attempts += 1;
            mem.transcript.push(TranscriptEntry { role: "assistant".into(), content: reply.clone() });
            match extract_action(&reply) {
                Ok(action) => return Ok((action, mem)),
                Err(error) if attempts > self.cfg.max_retries => {
                    mem.parse_failures.push(ParseFailure { tick: turn.tick, attempts, error });
                    return Ok((Action::Wait, mem));
                }
                Err(error) => {
                    let feedback = format!("{FEEDBACK}: {error}. Reply with one JSON object from the menu.");
                    messages.push(message("assistant", &reply));
                    messages.push(message("user", &feedback));
                    mem.transcript.push(TranscriptEntry { role: "user".into(), content: feedback });
                }
            }
        }
    }
}
