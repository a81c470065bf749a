//! Blocking client for chat-completions endpoints.

use std::thread;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

use super::{Completion, CompletionProvider, GatewayError, ModelConfig};

pub const API_KEY_ENV: &str = "FLOWBENCH_API_KEY";
pub const FALLBACK_API_KEY_ENV: &str = "OPENAI_API_KEY";
pub const BASE_URL_ENV: &str = "FLOWBENCH_BASE_URL";

pub struct HttpProvider {
    client: Client,
    api_key: String,
    base_url: String,
}

impl HttpProvider {
    pub fn new(
        cfg: &ModelConfig,
        api_key: impl Into<String>,
    ) -> Result<HttpProvider, GatewayError> {
        cfg.validate()?;
        let api_key = api_key.into();
        if api_key.trim().is_empty() {
            return Err(GatewayError::Credential("API key is empty".into()));
        }
        let client = Client::builder()
            .timeout(cfg.timeout())
            .build()
            .map_err(|e| GatewayError::InvalidConfig(e.to_string()))?;
        Ok(HttpProvider {
            client,
            api_key,
            base_url: cfg.base_url.trim_end_matches('/').to_string(),
        })
    }

    /// Reads the key from the environment and applies the endpoint override.
    pub fn from_env(cfg: &ModelConfig) -> Result<HttpProvider, GatewayError> {
        let key = std::env::var(API_KEY_ENV)
            .or_else(|_| std::env::var(FALLBACK_API_KEY_ENV))
            .map_err(|_| {
                GatewayError::Credential(format!("set {API_KEY_ENV} (or {FALLBACK_API_KEY_ENV})"))
            })?;
        let mut cfg = cfg.clone();
        if let Ok(url) = std::env::var(BASE_URL_ENV) {
            if !url.trim().is_empty() {
                cfg.base_url = url;
            }
        }
        HttpProvider::new(&cfg, key)
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url)
    }
}

enum Attempt {
    Done(Completion),
    Retry(String),
    Fatal(GatewayError),
}

fn parse_body(body: &str) -> Result<(String, bool), GatewayError> {
    let v: Value = serde_json::from_str(body).map_err(|e| GatewayError::Protocol(e.to_string()))?;
    let choice = v
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| GatewayError::Protocol("response has no choices".into()))?;
    let text = choice
        .pointer("/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| GatewayError::Protocol("choice has no message content".into()))?;
    let truncated = choice.get("finish_reason").and_then(Value::as_str) == Some("length");
    Ok((text.to_string(), truncated))
}

impl HttpProvider {
    fn attempt(&self, prompt: &str, cfg: &ModelConfig, attempts: u32) -> Attempt {
        let body = json!({
            "model": cfg.name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": cfg.temperature,
            "max_tokens": cfg.max_tokens,
        });
        let resp = match self
            .client
            .post(self.endpoint())
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
        {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status();
        let text = match resp.text() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        if status.is_success() {
            return match parse_body(&text) {
                Ok((text, truncated)) => Attempt::Done(Completion {
                    text,
                    truncated,
                    attempts,
                }),
                Err(e) => Attempt::Fatal(e),
            };
        }
        match status {
            StatusCode::UNAUTHORIZED | StatusCode::FORBIDDEN => Attempt::Fatal(
                GatewayError::Credential(format!("HTTP {}: {}", status.as_u16(), text.trim())),
            ),
            StatusCode::TOO_MANY_REQUESTS | StatusCode::REQUEST_TIMEOUT => {
                Attempt::Retry(format!("HTTP {}", status.as_u16()))
            }
            s if s.is_server_error() => Attempt::Retry(format!("HTTP {}", s.as_u16())),
            s => Attempt::Fatal(GatewayError::Rejected {
                status: s.as_u16(),
                body: text.trim().to_string(),
            }),
        }
    }
}

impl CompletionProvider for HttpProvider {
    fn complete(&self, prompt: &str, cfg: &ModelConfig) -> Result<Completion, GatewayError> {
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(prompt, cfg, attempts) {
                Attempt::Done(c) => return Ok(c),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(message) => {
                    if attempts > cfg.max_retries {
                        return Err(GatewayError::Transport { attempts, message });
                    }
                    thread::sleep(cfg.backoff(attempts - 1));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_choice_and_truncation() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"hi"},"finish_reason":"length"}]}"#;
        assert_eq!(parse_body(body).unwrap(), ("hi".to_string(), true));
        let body = r#"{"choices":[{"message":{"content":"ok"},"finish_reason":"stop"}]}"#;
        assert_eq!(parse_body(body).unwrap(), ("ok".to_string(), false));
        assert!(matches!(parse_body("{}"), Err(GatewayError::Protocol(_))));
    }

    #[test]
    fn empty_key_is_a_credential_error() {
        assert!(matches!(
            HttpProvider::new(&ModelConfig::default(), " "),
            Err(GatewayError::Credential(_))
        ));
    }
}
