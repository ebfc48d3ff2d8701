//! Single entry point for every model call the pipeline makes. Three modes:
//! Mock (deterministic fixture table with an echo canary), Replay (disk
//! cache only, misses are errors) and Live (chat-completion HTTP endpoint
//! with retries, responses cached to disk and reused across runs).
//!
//! No other module performs network I/O.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub temperature: f64,
    pub max_output_chars: usize,
}

/// One chat-completion request: system prompt plus alternating messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system_prompt: String,
    pub messages: Vec<ChatMessage>,
    pub sampling: Sampling,
    pub model_tag: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatewayMode {
    Live,
    Mock,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub backoff_ms: Vec<u64>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            backoff_ms: vec![200, 500, 1000],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewayConfig {
    pub endpoint_url: String,
    /// Name of the environment variable holding the API key.
    pub api_key_source: String,
    pub cache_directory: PathBuf,
    pub mode: GatewayMode,
    /// Optional fixture table for Mock mode.
    pub mock_table_path: Option<PathBuf>,
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
    pub model_tag: String,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            endpoint_url: String::new(),
            api_key_source: "CLARIFY_API_KEY".to_string(),
            cache_directory: PathBuf::from("gateway-cache"),
            mode: GatewayMode::Mock,
            mock_table_path: None,
            max_in_flight: 4,
            retry: RetryPolicy::default(),
            model_tag: "mock".to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("replay cache miss for request {0}")]
    CacheMiss(String),
    #[error("api key variable {0} is not set")]
    KeyMissing(String),
    #[error("invalid gateway config: {0}")]
    InvalidConfig(String),
    #[error("gateway io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One fixture table entry: the request digest, a human note describing
/// which prompt it answers, and the canned response body.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MockEntry {
    pub key: String,
    #[serde(default)]
    pub note: String,
    pub response: String,
}

fn frame(hasher: &mut Sha256, tag: &[u8], data: &[u8]) {
    hasher.update(tag);
    hasher.update((data.len() as u64).to_be_bytes());
    hasher.update(data);
}

/// Stable 64-hex-char digest of a request. Fields are framed in a fixed
/// order with length prefixes, so the key does not depend on any map or
/// serialization ordering and is identical across platforms and runs.
pub fn cache_key(request: &ChatRequest) -> String {
    let mut hasher = Sha256::new();
    frame(&mut hasher, b"sys", request.system_prompt.as_bytes());
    hasher.update((request.messages.len() as u64).to_be_bytes());
    for message in &request.messages {
        let tag: &[u8] = match message.role {
            Role::User => b"usr",
            Role::Assistant => b"ast",
        };
        frame(&mut hasher, tag, message.content.as_bytes());
    }
    frame(&mut hasher, b"mdl", request.model_tag.as_bytes());
    hasher.update(request.sampling.temperature.to_bits().to_be_bytes());
    hasher.update((request.sampling.max_output_chars as u64).to_be_bytes());
    hex::encode(hasher.finalize())
}

struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Semaphore {
    fn new(permits: usize) -> Self {
        Semaphore {
            permits: Mutex::new(permits.max(1)),
            available: Condvar::new(),
        }
    }

    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.available.wait(permits).unwrap();
        }
        *permits -= 1;
        SemaphoreGuard { semaphore: self }
    }
}

struct SemaphoreGuard<'a> {
    semaphore: &'a Semaphore,
}

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        *self.semaphore.permits.lock().unwrap() += 1;
        self.semaphore.available.notify_one();
    }
}

#[derive(Serialize)]
struct CacheMeta<'a> {
    request_digest: &'a str,
    model_tag: &'a str,
    unix_time: u64,
}

pub struct Gateway {
    config: GatewayConfig,
    mock_table: HashMap<String, String>,
    /// Pure response synthesizer consulted after the table in Mock mode.
    /// Used when minting fixture tables; the runtime mock is table-only.
    synth: Option<fn(&ChatRequest) -> Option<String>>,
    /// When set, every mock exchange is recorded for fixture export.
    recorder: Option<Mutex<Vec<MockEntry>>>,
    in_flight: Semaphore,
}

impl Gateway {
    pub fn new(config: GatewayConfig) -> Result<Self, GatewayError> {
        if config.mode == GatewayMode::Live && config.endpoint_url.is_empty() {
            return Err(GatewayError::InvalidConfig(
                "live mode requires an endpoint_url".to_string(),
            ));
        }
        let mut mock_table = HashMap::new();
        if let Some(path) = &config.mock_table_path {
            let bytes = std::fs::read(path)?;
            let entries: Vec<MockEntry> = serde_json::from_slice(&bytes)
                .map_err(|e| GatewayError::InvalidConfig(format!("mock table: {}", e)))?;
            for entry in entries {
                mock_table.insert(entry.key, entry.response);
            }
        }
        let in_flight = Semaphore::new(config.max_in_flight);
        Ok(Gateway {
            config,
            mock_table,
            synth: None,
            recorder: None,
            in_flight,
        })
    }

    /// A mock gateway answering from an in-memory table.
    pub fn mock(entries: Vec<(ChatRequest, String)>) -> Self {
        let mock_table = entries
            .into_iter()
            .map(|(req, resp)| (cache_key(&req), resp))
            .collect();
        Gateway {
            config: GatewayConfig::default(),
            mock_table,
            synth: None,
            recorder: None,
            in_flight: Semaphore::new(4),
        }
    }

    /// A mock gateway with no fixtures; every call returns the echo canary.
    pub fn mock_empty() -> Self {
        Gateway::mock(Vec::new())
    }

    /// A recording mock whose responses come from a pure synthesizer; used
    /// to mint fixture tables.
    pub fn mock_with_synth(synth: fn(&ChatRequest) -> Option<String>) -> Self {
        Gateway {
            config: GatewayConfig::default(),
            mock_table: HashMap::new(),
            synth: Some(synth),
            recorder: Some(Mutex::new(Vec::new())),
            in_flight: Semaphore::new(4),
        }
    }

    /// Drains the recorded mock exchanges.
    pub fn take_recorded(&self) -> Vec<MockEntry> {
        match &self.recorder {
            Some(recorder) => std::mem::take(&mut recorder.lock().unwrap()),
            None => Vec::new(),
        }
    }

    pub fn mode(&self) -> GatewayMode {
        self.config.mode
    }

    pub fn model_tag(&self) -> &str {
        &self.config.model_tag
    }

    fn canary(request: &ChatRequest, key: &str) -> String {
        let last_user = request
            .messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
            .unwrap_or("");
        let head: String = last_user.chars().take(96).collect();
        format!("MOCK-ECHO {}: {}", &key[..16], head)
    }

    fn cache_paths(&self, key: &str) -> (PathBuf, PathBuf) {
        let dir = &self.config.cache_directory;
        (
            dir.join(format!("{key}.txt")),
            dir.join(format!("{key}.meta.json")),
        )
    }

    fn read_cache(&self, key: &str) -> Option<String> {
        let (body, _) = self.cache_paths(key);
        std::fs::read_to_string(body).ok()
    }

    fn write_cache(&self, key: &str, response: &str) -> Result<(), GatewayError> {
        static WRITE_SEQ: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);
        std::fs::create_dir_all(&self.config.cache_directory)?;
        let (body, meta) = self.cache_paths(key);
        // Unique temp file plus rename: concurrent writers of one key each
        // publish a complete body, readers never see a partial one.
        let tag = format!(
            "{}-{}",
            std::process::id(),
            WRITE_SEQ.fetch_add(1, std::sync::atomic::Ordering::Relaxed)
        );
        let tmp = body.with_extension(format!("txt.{tag}.tmp"));
        std::fs::write(&tmp, response)?;
        std::fs::rename(&tmp, &body)?;
        let meta_json = serde_json::to_string_pretty(&CacheMeta {
            request_digest: key,
            model_tag: &self.config.model_tag,
            unix_time: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        })
        .expect("meta serializes");
        let tmp_meta = meta.with_extension(format!("json.{tag}.tmp"));
        std::fs::write(&tmp_meta, meta_json)?;
        std::fs::rename(&tmp_meta, &meta)?;
        Ok(())
    }

    /// Issues one completion. Safe for concurrent invocation; live calls
    /// are bounded by `max_in_flight`.
    pub fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let key = cache_key(request);
        match self.config.mode {
            GatewayMode::Mock => {
                let response = self
                    .mock_table
                    .get(&key)
                    .cloned()
                    .or_else(|| self.synth.and_then(|f| f(request)))
                    .unwrap_or_else(|| Self::canary(request, &key));
                if let Some(recorder) = &self.recorder {
                    let note: String = request
                        .messages
                        .first()
                        .map(|m| m.content.chars().take(80).collect())
                        .unwrap_or_default();
                    recorder.lock().unwrap().push(MockEntry {
                        key: key.clone(),
                        note,
                        response: response.clone(),
                    });
                }
                Ok(response)
            }
            GatewayMode::Replay => self.read_cache(&key).ok_or(GatewayError::CacheMiss(key)),
            GatewayMode::Live => {
                if let Some(cached) = self.read_cache(&key) {
                    return Ok(cached);
                }
                let _permit = self.in_flight.acquire();
                let response = self.post_with_retries(request)?;
                let response = truncate_chars(&response, request.sampling.max_output_chars);
                self.write_cache(&key, &response)?;
                Ok(response)
            }
        }
    }

    /// Embeds texts via the configured endpoint. Mock mode derives stable
    /// pseudo-embeddings from a content hash so similarity is well-defined
    /// in tests; identical texts always embed identically.
    pub fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, GatewayError> {
        match self.config.mode {
            GatewayMode::Mock => Ok(texts.iter().map(|t| hash_embedding(t)).collect()),
            GatewayMode::Replay | GatewayMode::Live => {
                let key = embed_key(texts);
                if let Some(cached) = self.read_cache(&key) {
                    return serde_json::from_str(&cached).map_err(|e| {
                        GatewayError::InvalidConfig(format!("corrupt embed cache {key}: {e}"))
                    });
                }
                if self.config.mode == GatewayMode::Replay {
                    return Err(GatewayError::CacheMiss(key));
                }
                let _permit = self.in_flight.acquire();
                let vectors = self.post_embed(texts)?;
                self.write_cache(&key, &serde_json::to_string(&vectors).unwrap())?;
                Ok(vectors)
            }
        }
    }

    fn post_embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, GatewayError> {
        let key_var = &self.config.api_key_source;
        let api_key =
            std::env::var(key_var).map_err(|_| GatewayError::KeyMissing(key_var.clone()))?;
        let body = serde_json::json!({"input": texts, "model": self.config.model_tag});
        let mut last_error = String::new();
        for attempt in 0..self.config.retry.max_attempts {
            if attempt > 0 {
                let idx = (attempt as usize - 1)
                    .min(self.config.retry.backoff_ms.len().saturating_sub(1));
                let ms = self
                    .config
                    .retry
                    .backoff_ms
                    .get(idx)
                    .copied()
                    .unwrap_or(500);
                std::thread::sleep(std::time::Duration::from_millis(ms));
            }
            let result = ureq::post(&self.config.endpoint_url)
                .header("authorization", &format!("Bearer {api_key}"))
                .header("content-type", "application/json")
                .send_json(&body)
                .map_err(|e| e.to_string())
                .and_then(|mut r| {
                    r.body_mut()
                        .read_json::<serde_json::Value>()
                        .map_err(|e| e.to_string())
                })
                .and_then(|v| {
                    let arr = v.get("embeddings").or_else(|| v.get("data")).cloned();
                    arr.and_then(|a| serde_json::from_value::<Vec<Vec<f64>>>(a).ok())
                        .ok_or_else(|| "no embeddings in response".to_string())
                });
            match result {
                Ok(vectors) => return Ok(vectors),
                Err(message) => last_error = message,
            }
        }
        Err(GatewayError::Transport {
            attempts: self.config.retry.max_attempts,
            message: last_error,
        })
    }

    fn post_with_retries(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let key_var = &self.config.api_key_source;
        let api_key =
            std::env::var(key_var).map_err(|_| GatewayError::KeyMissing(key_var.clone()))?;
        let mut messages = Vec::with_capacity(request.messages.len() + 1);
        messages.push(serde_json::json!({
            "role": "system",
            "content": request.system_prompt,
        }));
        for m in &request.messages {
            let role = match m.role {
                Role::User => "user",
                Role::Assistant => "assistant",
            };
            messages.push(serde_json::json!({"role": role, "content": m.content}));
        }
        let body = serde_json::json!({
            "model": request.model_tag,
            "messages": messages,
            "temperature": request.sampling.temperature,
        });

        let mut last_error = String::new();
        for attempt in 0..self.config.retry.max_attempts {
            if attempt > 0 {
                let idx = (attempt as usize - 1)
                    .min(self.config.retry.backoff_ms.len().saturating_sub(1));
                let ms = self
                    .config
                    .retry
                    .backoff_ms
                    .get(idx)
                    .copied()
                    .unwrap_or(500);
                std::thread::sleep(std::time::Duration::from_millis(ms));
            }
            match self.post_once(&api_key, &body) {
                Ok(text) => return Ok(text),
                Err(message) => last_error = message,
            }
        }
        Err(GatewayError::Transport {
            attempts: self.config.retry.max_attempts,
            message: last_error,
        })
    }

    fn post_once(&self, api_key: &str, body: &serde_json::Value) -> Result<String, String> {
        let mut response = ureq::post(&self.config.endpoint_url)
            .header("authorization", &format!("Bearer {api_key}"))
            .header("content-type", "application/json")
            .send_json(body)
            .map_err(|e| e.to_string())?;
        let value: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| format!("decode response: {e}"))?;
        extract_completion_text(&value).ok_or_else(|| "no completion text in response".to_string())
    }
}

fn embed_key(texts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"emb");
    hasher.update((texts.len() as u64).to_be_bytes());
    for t in texts {
        frame(&mut hasher, b"txt", t.as_bytes());
    }
    hex::encode(hasher.finalize())
}

fn hash_embedding(text: &str) -> Vec<f64> {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|&b| (b as f64 - 127.5) / 127.5).collect()
}

fn truncate_chars(text: &str, max_chars: usize) -> String {
    if text.chars().count() <= max_chars {
        text.to_string()
    } else {
        text.chars().take(max_chars).collect()
    }
}

fn extract_completion_text(value: &serde_json::Value) -> Option<String> {
    if let Some(text) = value
        .get("choices")
        .and_then(|c| c.get(0))
        .and_then(|c| c.get("message"))
        .and_then(|m| m.get("content"))
        .and_then(|c| c.as_str())
    {
        return Some(text.to_string());
    }
    value
        .get("content")
        .or_else(|| value.get("text"))
        .and_then(|c| c.as_str())
        .map(|s| s.to_string())
}

/// Writes a fixture table to disk as pretty JSON.
pub fn write_mock_table(path: &Path, entries: &[MockEntry]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let json = serde_json::to_string_pretty(entries).expect("mock table serializes");
    std::fs::write(path, json)
}
