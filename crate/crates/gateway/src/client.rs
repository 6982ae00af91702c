use std::sync::Arc;
use std::time::{Duration, Instant};

use serde_json::Value;
use thiserror::Error;
use tokio::sync::Semaphore;

use numprobe_core::ledger::ModelVerdict;
use numprobe_core::prompts::{verdict_json, PromptBundle};

use crate::config::{ConfigError, ModelConfig, Provider, Secret};
use crate::oracle::mock_oracle;
use crate::verdict::parse_verdict;
use crate::wire::{estimate_tokens, parse_reply, request_body, request_url, Reply};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
    #[error("provider rejected the request with HTTP {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("unrecognized response body: {0}")]
    Decode(String),
}

/// One model behind a uniform query interface. Cheap to share by reference
/// across tasks; at most `max_in_flight` requests run at once.
#[derive(Debug, Clone)]
pub struct Gateway {
    cfg: ModelConfig,
    http: reqwest::Client,
    key: Option<Secret>,
    limiter: Arc<Semaphore>,
}

impl Gateway {
    /// Validate the config and read the key from its environment variable.
    pub fn new(cfg: ModelConfig) -> Result<Self, ConfigError> {
        let key = match (&cfg.key_env, cfg.provider.is_remote()) {
            (Some(var), true) => match std::env::var(var) {
                Ok(v) if !v.is_empty() => Some(v),
                _ if cfg.provider == Provider::LocalHttp => None,
                _ => {
                    return Err(ConfigError::MissingKey {
                        model: cfg.label().to_string(),
                        var: var.clone(),
                    })
                }
            },
            _ => None,
        };
        Self::with_key(cfg, key)
    }

    pub fn with_key(cfg: ModelConfig, key: Option<String>) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .expect("http client builds");
        Ok(Self {
            limiter: Arc::new(Semaphore::new(cfg.max_in_flight)),
            cfg,
            http,
            key: key.map(Secret::new),
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub async fn query(&self, bundle: &PromptBundle) -> Result<ModelVerdict, GatewayError> {
        if self.cfg.provider == Provider::MockOracle {
            return Ok(self.mock(bundle));
        }
        let _permit = self.limiter.acquire().await.expect("semaphore open");
        let messages = bundle.to_messages(self.cfg.demo_layout);
        let prompt_text: String = messages.iter().map(|m| m.content.as_str()).collect::<Vec<_>>().join("\n");
        let body = request_body(&self.cfg, &messages);
        let started = Instant::now();
        let (mut reply, mut attempts) = self.send(&body).await?;
        let mut label = parse_verdict(&reply.content);
        let raw_invalid = label.is_none();
        if raw_invalid {
            let (r, a) = self.send(&body).await?;
            reply = r;
            attempts += a;
            label = parse_verdict(&reply.content);
        }
        let latency_ms = started.elapsed().as_millis() as u64;
        let (prompt_tokens, completion_tokens, reasoning_tokens, estimated) = match reply.usage {
            Some(u) => {
                let (reasoning, est) = match (u.reasoning_tokens, &reply.reasoning_text) {
                    (Some(n), _) => (n, false),
                    (None, Some(t)) => (estimate_tokens(t), true),
                    (None, None) => (0, false),
                };
                (u.prompt_tokens, u.completion_tokens, reasoning, est)
            }
            None => (
                estimate_tokens(&prompt_text),
                estimate_tokens(&reply.content),
                reply.reasoning_text.as_deref().map_or(0, estimate_tokens),
                true,
            ),
        };
        Ok(ModelVerdict {
            raw: reply.content,
            label,
            invalid: label.is_none(),
            raw_invalid,
            prompt_tokens,
            reasoning_tokens,
            completion_tokens,
            tokens_estimated: estimated,
            latency_ms,
            reasoning_text: reply.reasoning_text,
            attempts,
        })
    }

    fn mock(&self, bundle: &PromptBundle) -> ModelVerdict {
        let label = mock_oracle(&bundle.query_claim, &bundle.query_evidence);
        let raw = verdict_json(label);
        let prompt: String = bundle
            .to_messages(self.cfg.demo_layout)
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n");
        ModelVerdict {
            completion_tokens: estimate_tokens(&raw),
            raw,
            label: Some(label),
            invalid: false,
            raw_invalid: false,
            prompt_tokens: estimate_tokens(&prompt),
            reasoning_tokens: 0,
            tokens_estimated: true,
            latency_ms: 0,
            reasoning_text: None,
            attempts: 1,
        }
    }

    /// POST with retries on 429, 5xx and transport errors.
    async fn send(&self, body: &Value) -> Result<(Reply, u32), GatewayError> {
        let url = request_url(&self.cfg);
        let max = self.cfg.retry.max_attempts;
        let mut last = String::new();
        for attempt in 1..=max {
            let mut req = self.http.post(&url).json(body);
            if let Some(key) = &self.key {
                req = match self.cfg.provider {
                    Provider::GeminiStyle => req.header("x-goog-api-key", key.expose()),
                    _ => req.bearer_auth(key.expose()),
                };
            }
            match req.send().await {
                Ok(resp) if resp.status().is_success() => {
                    let v: Value = resp
                        .json()
                        .await
                        .map_err(|e| GatewayError::Decode(e.without_url().to_string()))?;
                    let reply = parse_reply(self.cfg.provider, &v)
                        .ok_or_else(|| GatewayError::Decode(truncate(&v.to_string())))?;
                    return Ok((reply, attempt));
                }
                Ok(resp) => {
                    let status = resp.status();
                    let text = resp.text().await.unwrap_or_default();
                    if status.as_u16() != 429 && !status.is_server_error() {
                        return Err(GatewayError::Rejected {
                            status: status.as_u16(),
                            body: truncate(&text),
                        });
                    }
                    last = format!("HTTP {}", status.as_u16());
                }
                Err(e) => last = e.without_url().to_string(),
            }
            if attempt < max {
                let delay = self.cfg.retry.delay(attempt as usize - 1);
                tracing::warn!(model = self.cfg.label(), attempt, error = %last, ?delay, "retrying");
                tokio::time::sleep(delay).await;
            }
        }
        Err(GatewayError::Exhausted {
            attempts: max,
            last,
        })
    }
}

fn truncate(s: &str) -> String {
    const MAX: usize = 300;
    match s.char_indices().nth(MAX) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_string(),
    }
}
