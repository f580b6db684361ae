//! Optional TOML configuration for `symenv`.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use symenv_core::harness::LlmEndpointConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_port")]
    pub port: u16,
    #[serde(default = "default_ttl")]
    pub session_ttl_secs: u64,
    /// Sessions are written here on shutdown and restored on start.
    #[serde(default)]
    pub snapshot_dir: Option<PathBuf>,
    /// Endpoint used by `bench --policies llm`. API keys come from the
    /// environment variable the endpoint names, never from this file.
    #[serde(default)]
    pub llm: Option<LlmEndpointConfig>,
}

fn default_port() -> u16 {
    8080
}

fn default_ttl() -> u64 {
    3600
}

impl Default for Config {
    fn default() -> Self {
        Config { port: default_port(), session_ttl_secs: default_ttl(), snapshot_dir: None, llm: None }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn ttl(&self) -> Duration {
        Duration::from_secs(self.session_ttl_secs)
    }
}
