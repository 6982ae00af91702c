//! Provider request bodies and response decoding. Pure functions.

use serde_json::{json, Value};

use numprobe_core::prompts::ChatMessage;

use crate::config::{ModelConfig, Provider};

/// What one provider response carried.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Reply {
    pub content: String,
    pub reasoning_text: Option<String>,
    pub usage: Option<Usage>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub reasoning_tokens: Option<u64>,
}

/// Request URL for a provider, without credentials.
pub fn request_url(cfg: &ModelConfig) -> String {
    let base = cfg.endpoint.as_deref().unwrap_or("").trim_end_matches('/');
    match cfg.provider {
        Provider::GeminiStyle => format!("{base}/models/{}:generateContent", cfg.model_name),
        _ => format!("{base}/chat/completions"),
    }
}

pub fn request_body(cfg: &ModelConfig, messages: &[ChatMessage]) -> Value {
    match cfg.provider {
        Provider::GeminiStyle => gemini_body(cfg, messages),
        _ => chat_body(cfg, messages),
    }
}

fn chat_body(cfg: &ModelConfig, messages: &[ChatMessage]) -> Value {
    let mut body = json!({
        "model": cfg.model_name,
        "messages": messages,
        "temperature": cfg.temperature,
        "response_format": {"type": "json_object"},
    });
    if let Some(effort) = &cfg.reasoning_effort {
        body["reasoning_effort"] = json!(effort);
    }
    body
}

fn gemini_body(cfg: &ModelConfig, messages: &[ChatMessage]) -> Value {
    let system: Vec<&str> = messages
        .iter()
        .filter(|m| m.role == "system")
        .map(|m| m.content.as_str())
        .collect();
    let contents: Vec<Value> = messages
        .iter()
        .filter(|m| m.role != "system")
        .map(|m| {
            let role = if m.role == "assistant" { "model" } else { "user" };
            json!({"role": role, "parts": [{"text": m.content}]})
        })
        .collect();
    let mut gen = json!({
        "temperature": cfg.temperature,
        "responseMimeType": "application/json",
    });
    if let Some(budget) = cfg.effective_thinking_budget() {
        gen["thinkingConfig"] = json!({"thinkingBudget": budget, "includeThoughts": true});
    }
    let mut body = json!({"contents": contents, "generationConfig": gen});
    if !system.is_empty() {
        body["systemInstruction"] = json!({"parts": [{"text": system.join("\n\n")}]});
    }
    body
}

fn u64_at(v: &Value, path: &[&str]) -> Option<u64> {
    let mut cur = v;
    for p in path {
        cur = cur.get(p)?;
    }
    cur.as_u64()
}

/// Decode a successful response body. `None` if the shape is unrecognized.
pub fn parse_reply(provider: Provider, body: &Value) -> Option<Reply> {
    match provider {
        Provider::GeminiStyle => parse_gemini(body),
        _ => parse_chat(body),
    }
}

fn parse_chat(body: &Value) -> Option<Reply> {
    let msg = body.get("choices")?.get(0)?.get("message")?;
    let content = msg.get("content").and_then(Value::as_str).unwrap_or("").to_string();
    let reasoning_text = ["reasoning_content", "reasoning"]
        .iter()
        .find_map(|k| msg.get(*k).and_then(Value::as_str))
        .filter(|s| !s.is_empty())
        .map(str::to_string);
    let usage = body.get("usage").and_then(|u| {
        Some(Usage {
            prompt_tokens: u64_at(u, &["prompt_tokens"])?,
            completion_tokens: u64_at(u, &["completion_tokens"]).unwrap_or(0),
            reasoning_tokens: u64_at(u, &["completion_tokens_details", "reasoning_tokens"]),
        })
    });
    Some(Reply {
        content,
        reasoning_text,
        usage,
    })
}

fn parse_gemini(body: &Value) -> Option<Reply> {
    let parts = body
        .get("candidates")?
        .get(0)?
        .get("content")?
        .get("parts")?
        .as_array()?;
    let mut content = String::new();
    let mut thoughts = String::new();
    for p in parts {
        let text = p.get("text").and_then(Value::as_str).unwrap_or("");
        if p.get("thought").and_then(Value::as_bool) == Some(true) {
            thoughts.push_str(text);
        } else {
            content.push_str(text);
        }
    }
    let usage = body.get("usageMetadata").and_then(|u| {
        Some(Usage {
            prompt_tokens: u64_at(u, &["promptTokenCount"])?,
            completion_tokens: u64_at(u, &["candidatesTokenCount"]).unwrap_or(0),
            reasoning_tokens: u64_at(u, &["thoughtsTokenCount"]),
        })
    });
    Some(Reply {
        content,
        reasoning_text: (!thoughts.is_empty()).then_some(thoughts),
        usage,
    })
}

/// Whitespace token count used when a provider reports no usage.
pub fn estimate_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}
