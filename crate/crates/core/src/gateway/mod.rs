//! Model access: a live chat-completions client, a replay store for offline
//! runs, and a resumable recording session with bounded concurrency.

mod http;
mod session;

use std::collections::HashMap;
use std::fs;
use std::io::{self, BufRead};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use http::{HttpProvider, API_KEY_ENV, BASE_URL_ENV, FALLBACK_API_KEY_ENV};
pub use session::{read_records, record_session, write_records, PromptJob, SessionSummary};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    pub base_url: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: u64,
    pub max_retries: u32,
    /// Delay before the first retry; doubles on each further attempt.
    pub backoff_ms: u64,
    /// Maximum number of requests in flight.
    pub concurrency: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            name: "gpt-4o-mini".into(),
            base_url: "https://api.openai.com/v1".into(),
            temperature: 0.0,
            max_tokens: 2048,
            timeout_secs: 120,
            max_retries: 3,
            backoff_ms: 1000,
            concurrency: 4,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        let bad = |m: &str| Err(GatewayError::InvalidConfig(m.to_string()));
        if self.name.trim().is_empty() {
            return bad("model name is empty");
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return bad("temperature must be a non-negative number");
        }
        if self.concurrency == 0 {
            return bad("concurrency must be at least 1");
        }
        if self.timeout_secs == 0 {
            return bad("timeout must be at least one second");
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    /// Backoff before retry number `retry` (zero-based), capped at one minute.
    pub fn backoff(&self, retry: u32) -> Duration {
        let ms = self.backoff_ms.saturating_mul(1u64 << retry.min(16));
        Duration::from_millis(ms.min(60_000))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("credential error: {0}")]
    Credential(String),
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("request rejected with HTTP {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    Protocol(String),
    #[error("no recorded response for prompt {0}")]
    MissingRecording(String),
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("cannot persist records to {}: {source}", path.display())]
    Persistence { path: PathBuf, source: io::Error },
    #[error("{}:{line}: invalid record: {message}", path.display())]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// One assistant reply.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub truncated: bool,
    pub attempts: u32,
}

pub trait CompletionProvider: Send + Sync {
    fn complete(&self, prompt: &str, cfg: &ModelConfig) -> Result<Completion, GatewayError>;
}

/// Hex SHA-256 of the exact prompt text.
pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub program_id: String,
    pub prompt_hash: String,
    pub model: String,
    pub response: String,
    pub latency_ms: u64,
    pub attempts: u32,
    pub timestamp: String,
    #[serde(default)]
    pub truncated: bool,
}

impl CompletionRecord {
    /// The record with latency and timestamp blanked, for comparisons.
    pub fn without_timing(&self) -> CompletionRecord {
        CompletionRecord {
            latency_ms: 0,
            timestamp: String::new(),
            ..self.clone()
        }
    }
}

/// Serves responses recorded earlier, keyed by prompt hash.
#[derive(Clone, Debug, Default)]
pub struct ReplayProvider {
    responses: HashMap<String, (String, bool)>,
}

impl ReplayProvider {
    pub fn new() -> ReplayProvider {
        ReplayProvider::default()
    }

    pub fn from_records<'a>(
        records: impl IntoIterator<Item = &'a CompletionRecord>,
    ) -> ReplayProvider {
        let mut r = ReplayProvider::new();
        for rec in records {
            r.responses.insert(
                rec.prompt_hash.clone(),
                (rec.response.clone(), rec.truncated),
            );
        }
        r
    }

    pub fn load(path: &Path) -> Result<ReplayProvider, GatewayError> {
        Ok(ReplayProvider::from_records(&read_records(path)?))
    }

    pub fn insert(&mut self, prompt: &str, response: impl Into<String>) {
        self.insert_hash(prompt_hash(prompt), response);
    }

    pub fn insert_hash(&mut self, hash: String, response: impl Into<String>) {
        self.responses.insert(hash, (response.into(), false));
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn contains(&self, prompt: &str) -> bool {
        self.responses.contains_key(&prompt_hash(prompt))
    }
}

impl CompletionProvider for ReplayProvider {
    fn complete(&self, prompt: &str, _cfg: &ModelConfig) -> Result<Completion, GatewayError> {
        let hash = prompt_hash(prompt);
        match self.responses.get(&hash) {
            Some((text, truncated)) => Ok(Completion {
                text: text.clone(),
                truncated: *truncated,
                attempts: 1,
            }),
            None => Err(GatewayError::MissingRecording(hash)),
        }
    }
}

/// Reads a JSONL file. A final line without a trailing newline that fails to
/// parse is treated as an interrupted write and skipped.
pub(crate) fn read_jsonl<T: serde::de::DeserializeOwned>(
    path: &Path,
) -> Result<Vec<T>, GatewayError> {
    let file = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(source) => {
            return Err(GatewayError::Persistence {
                path: path.to_path_buf(),
                source,
            })
        }
    };
    let mut reader = io::BufReader::new(file);
    let mut out = Vec::new();
    let mut line = String::new();
    let mut number = 0;
    loop {
        line.clear();
        let n = reader
            .read_line(&mut line)
            .map_err(|source| GatewayError::Persistence {
                path: path.to_path_buf(),
                source,
            })?;
        if n == 0 {
            break;
        }
        number += 1;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(v) => out.push(v),
            Err(_) if !line.ends_with('\n') => break,
            Err(e) => {
                return Err(GatewayError::Corrupt {
                    path: path.to_path_buf(),
                    line: number,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}
