use std::time::Duration;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

pub const DEFAULT_TIMEOUT_SECS: u64 = 120;
pub const ENV_URL: &str = "AMR_LLM_URL";
pub const ENV_MODEL: &str = "AMR_LLM_MODEL";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenerationError {
    #[error("generation endpoint unreachable: {0}")]
    EndpointUnreachable(String),
    #[error("generation request timed out")]
    Timeout,
    #[error("malformed generation response: {0}")]
    MalformedResponse(String),
}

/// Anything that turns a prompt into answer text.
pub trait Generator: Send + Sync {
    fn generate(&self, prompt: &str) -> Result<String, GenerationError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    /// Base URL; requests go to `<url>/api/generate`.
    pub url: String,
    pub model: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_SECS
}

impl GenerationConfig {
    /// Applies `AMR_LLM_URL` / `AMR_LLM_MODEL` on top of `base`. Returns
    /// `None` when no URL is configured anywhere.
    pub fn with_env_overrides(base: Option<GenerationConfig>) -> Option<GenerationConfig> {
        let url = std::env::var(ENV_URL).ok().filter(|s| !s.trim().is_empty());
        let model = std::env::var(ENV_MODEL).ok().filter(|s| !s.trim().is_empty());
        match (base, url) {
            (Some(mut c), url) => {
                if let Some(u) = url {
                    c.url = u;
                }
                if let Some(m) = model {
                    c.model = m;
                }
                Some(c)
            }
            (None, Some(url)) => Some(GenerationConfig {
                url,
                model: model.unwrap_or_else(|| "phi3:mini".to_string()),
                timeout_secs: DEFAULT_TIMEOUT_SECS,
            }),
            (None, None) => None,
        }
    }
}

#[derive(Serialize)]
struct GenerateRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    stream: bool,
}

/// Client for a local `/api/generate` endpoint. Requests are serialised so
/// at most one is in flight.
pub struct HttpGenerator {
    endpoint: String,
    model: String,
    agent: ureq::Agent,
    gate: Mutex<()>,
}

impl HttpGenerator {
    pub fn new(config: &GenerationConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint: format!("{}/api/generate", config.url.trim_end_matches('/')),
            model: config.model.clone(),
            agent,
            gate: Mutex::new(()),
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl Generator for HttpGenerator {
    fn generate(&self, prompt: &str) -> Result<String, GenerationError> {
        let _guard = self.gate.lock();
        let result = self.agent.post(&self.endpoint).send_json(GenerateRequest {
            model: &self.model,
            prompt,
            stream: false,
        });
        let mut resp = match result {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Err(GenerationError::Timeout),
            Err(e) => return Err(GenerationError::EndpointUnreachable(e.to_string())),
        };
        if !resp.status().is_success() {
            return Err(GenerationError::EndpointUnreachable(format!("HTTP {}", resp.status())));
        }
        let body: serde_json::Value = match resp.body_mut().read_json() {
            Ok(v) => v,
            Err(ureq::Error::Timeout(_)) => return Err(GenerationError::Timeout),
            Err(e) => return Err(GenerationError::MalformedResponse(e.to_string())),
        };
        body.get("response")
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .ok_or_else(|| GenerationError::MalformedResponse("missing `response` text field".into()))
    }
}
