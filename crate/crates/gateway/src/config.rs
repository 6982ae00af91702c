use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use numprobe_core::prompts::DemoLayout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provider {
    OpenaiCompatible,
    GeminiStyle,
    LocalHttp,
    MockOracle,
}

impl Provider {
    pub fn is_remote(self) -> bool {
        self != Provider::MockOracle
    }
}

impl fmt::Display for Provider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provider::OpenaiCompatible => "openai-compatible",
            Provider::GeminiStyle => "gemini-style",
            Provider::LocalHttp => "local-http",
            Provider::MockOracle => "mock-oracle",
        })
    }
}

pub const DEFAULT_THINKING_BUDGET: u32 = 8192;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Total HTTP attempts for one request, including the first.
    pub max_attempts: u32,
    /// Sleep before retry i is `backoff_ms[min(i, len - 1)]`.
    pub backoff_ms: Vec<u64>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            backoff_ms: vec![500, 1000, 2000, 4000, 8000],
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, retry_index: usize) -> Duration {
        let ms = match self.backoff_ms.as_slice() {
            [] => 0,
            v => v[retry_index.min(v.len() - 1)],
        };
        Duration::from_millis(ms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Name written into run records; defaults to `model_name`.
    pub label: Option<String>,
    pub provider: Provider,
    pub model_name: String,
    pub endpoint: Option<String>,
    /// Environment variable holding the API key.
    pub key_env: Option<String>,
    pub temperature: f64,
    /// Sent as `reasoning_effort` when set; unset means the provider default.
    pub reasoning_effort: Option<String>,
    /// Ask a gemini-style provider for thinking output.
    pub thinking: bool,
    pub thinking_budget: Option<u32>,
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
    pub timeout_secs: u64,
    pub demo_layout: DemoLayout,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            label: None,
            provider: Provider::MockOracle,
            model_name: "mock-oracle".into(),
            endpoint: None,
            key_env: None,
            temperature: 0.0,
            reasoning_effort: None,
            thinking: false,
            thinking_budget: None,
            max_in_flight: 4,
            retry: RetryPolicy::default(),
            timeout_secs: 120,
            demo_layout: DemoLayout::Inline,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("model {model}: temperature must be 0 for experiment runs")]
    Temperature { model: String },
    #[error("model {model}: {provider} needs an endpoint")]
    MissingEndpoint { model: String, provider: Provider },
    #[error("model {model}: {provider} needs key_env")]
    MissingKeyEnv { model: String, provider: Provider },
    #[error("model {model}: environment variable {var} is not set")]
    MissingKey { model: String, var: String },
    #[error("model {model}: max_in_flight must be at least 1")]
    MaxInFlight { model: String },
    #[error("model {model}: retry.max_attempts must be at least 1")]
    Attempts { model: String },
}

impl ModelConfig {
    pub fn mock() -> Self {
        Self::default()
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.model_name)
    }

    pub fn effective_thinking_budget(&self) -> Option<u32> {
        (self.provider == Provider::GeminiStyle && self.thinking)
            .then(|| self.thinking_budget.unwrap_or(DEFAULT_THINKING_BUDGET))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let model = self.label().to_string();
        if self.temperature != 0.0 {
            return Err(ConfigError::Temperature { model });
        }
        if self.max_in_flight == 0 {
            return Err(ConfigError::MaxInFlight { model });
        }
        if self.retry.max_attempts == 0 {
            return Err(ConfigError::Attempts { model });
        }
        match self.provider {
            Provider::MockOracle => {}
            Provider::LocalHttp => {
                if self.endpoint.is_none() {
                    return Err(ConfigError::MissingEndpoint {
                        model,
                        provider: self.provider,
                    });
                }
            }
            Provider::OpenaiCompatible | Provider::GeminiStyle => {
                if self.endpoint.is_none() {
                    return Err(ConfigError::MissingEndpoint {
                        model,
                        provider: self.provider,
                    });
                }
                if self.key_env.is_none() {
                    return Err(ConfigError::MissingKeyEnv {
                        model,
                        provider: self.provider,
                    });
                }
            }
        }
        Ok(())
    }
}

/// An API key that never prints.
#[derive(Clone)]
pub struct Secret(String);

impl Secret {
    pub fn new(s: String) -> Self {
        Self(s)
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Secret(***)")
    }
}
