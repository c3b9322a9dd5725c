//! Chat-completion clients: live HTTP, record (live + persist) and replay.

use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self { role: "user".into(), content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: "assistant".into(), content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: Option<u32>,
    /// Repetition index of an otherwise identical request (run index,
    /// reviewer slot). Never sent to the provider.
    pub sample: u32,
}

impl ChatRequest {
    /// Fixture key: SHA-256 over the model id and the serialized messages.
    pub fn digest(&self) -> String {
        #[derive(Serialize)]
        struct Key<'a> {
            model: &'a str,
            messages: &'a [ChatMessage],
        }
        let bytes = serde_json::to_vec(&Key { model: &self.model, messages: &self.messages }).expect("serializable");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    #[serde(default)]
    pub usage: Option<Usage>,
    /// Wall-clock seconds; zero for replayed responses.
    #[serde(skip)]
    pub latency: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClientError {
    #[error("provider returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("no replay fixture for request digest {digest}")]
    FixtureMiss { digest: String },
    #[error("fixture store: {0}")]
    Store(String),
    #[error("client config: {0}")]
    Config(String),
}

pub trait ChatClient: Send + Sync {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, ClientError>;
}

/// Token bucket: bursts up to the per-minute budget, refilled continuously.
#[derive(Debug)]
pub struct RateLimiter {
    per_second: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn per_minute(requests: u32) -> Self {
        let capacity = f64::from(requests.max(1));
        Self { per_second: capacity / 60.0, capacity, state: Mutex::new((capacity, Instant::now())) }
    }

    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut s = self.state.lock().unwrap();
                let now = Instant::now();
                s.0 = (s.0 + now.duration_since(s.1).as_secs_f64() * self.per_second).min(self.capacity);
                s.1 = now;
                if s.0 >= 1.0 {
                    s.0 -= 1.0;
                    return;
                }
                (1.0 - s.0) / self.per_second
            };
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

#[derive(Debug, Clone)]
pub struct LiveConfig {
    /// Chat-completions URL, e.g. `https://api.openai.com/v1/chat/completions`.
    pub endpoint: String,
    pub api_key: String,
    pub attempts: u32,
    pub backoff: Duration,
    pub request_timeout: Duration,
    pub requests_per_minute: u32,
}

impl LiveConfig {
    /// Reads the key from `key_var`; a missing key is a config error.
    pub fn from_env(endpoint: &str, key_var: &str) -> Result<Self, ClientError> {
        let api_key = std::env::var(key_var)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| ClientError::Config(format!("environment variable {key_var} is not set")))?;
        Ok(Self {
            endpoint: endpoint.to_string(),
            api_key,
            attempts: 3,
            backoff: Duration::from_secs(2),
            request_timeout: Duration::from_secs(300),
            requests_per_minute: 60,
        })
    }
}

pub struct LiveClient {
    cfg: LiveConfig,
    agent: ureq::Agent,
    limiter: RateLimiter,
}

impl LiveClient {
    pub fn new(cfg: LiveConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.request_timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let limiter = RateLimiter::per_minute(cfg.requests_per_minute);
        Self { cfg, agent, limiter }
    }

    fn attempt(&self, req: &ChatRequest) -> Result<ChatResponse, ClientError> {
        let mut body = serde_json::json!({
            "model": req.model,
            "messages": req.messages,
            "temperature": req.temperature,
        });
        if let Some(n) = req.max_tokens {
            body["max_tokens"] = n.into();
        }
        self.limiter.acquire();
        let start = Instant::now();
        let mut resp = self
            .agent
            .post(&self.cfg.endpoint)
            .header("Authorization", &format!("Bearer {}", self.cfg.api_key))
            .send_json(&body)
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| ClientError::Transport(e.to_string()))?;
        if status != 200 {
            return Err(ClientError::Status { status, body: text });
        }
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| ClientError::Malformed(e.to_string()))?;
        let content = v["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| ClientError::Malformed("missing choices[0].message.content".into()))?;
        let usage = v.get("usage").map(|u| Usage {
            prompt_tokens: u["prompt_tokens"].as_u64().unwrap_or(0),
            completion_tokens: u["completion_tokens"].as_u64().unwrap_or(0),
        });
        Ok(ChatResponse { text: content.to_string(), usage, latency: start.elapsed().as_secs_f64() })
    }
}

fn retryable(e: &ClientError) -> bool {
    match e {
        ClientError::Transport(_) => true,
        ClientError::Status { status, .. } => *status == 429 || *status >= 500,
        _ => false,
    }
}

impl ChatClient for LiveClient {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, ClientError> {
        let mut delay = self.cfg.backoff;
        let mut attempt = 1;
        loop {
            match self.attempt(req) {
                Err(e) if retryable(&e) && attempt < self.cfg.attempts => {
                    std::thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

/// One fixture file: every recorded response to one (model, messages) key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub responses: Vec<ChatResponse>,
}

/// Directory of `<digest>.json` fixture files.
#[derive(Debug, Clone)]
pub struct FixtureStore {
    dir: PathBuf,
}

impl FixtureStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, digest: &str) -> PathBuf {
        self.dir.join(format!("{digest}.json"))
    }

    pub fn load(&self, digest: &str) -> Result<Option<Fixture>, ClientError> {
        let path = self.path(digest);
        match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| ClientError::Store(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(ClientError::Store(format!("{}: {e}", path.display()))),
        }
    }

    pub fn save(&self, fixture: &Fixture) -> Result<PathBuf, ClientError> {
        let digest = ChatRequest {
            model: fixture.model.clone(),
            messages: fixture.messages.clone(),
            temperature: 0.0,
            max_tokens: None,
            sample: 0,
        }
        .digest();
        std::fs::create_dir_all(&self.dir).map_err(|e| ClientError::Store(e.to_string()))?;
        let path = self.path(&digest);
        let mut text = serde_json::to_string_pretty(fixture).expect("serializable");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| ClientError::Store(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    /// Response for `req`: sample `k` of a fixture with `n` responses is `k mod n`.
    pub fn lookup(&self, req: &ChatRequest) -> Result<ChatResponse, ClientError> {
        let digest = req.digest();
        match self.load(&digest)? {
            Some(f) if !f.responses.is_empty() => Ok(f.responses[req.sample as usize % f.responses.len()].clone()),
            _ => Err(ClientError::FixtureMiss { digest }),
        }
    }
}

pub struct ReplayClient {
    store: FixtureStore,
}

impl ReplayClient {
    pub fn new(store: FixtureStore) -> Self {
        Self { store }
    }
}

impl ChatClient for ReplayClient {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, ClientError> {
        self.store.lookup(req)
    }
}

/// Forwards to an inner client and stores each response at its sample slot.
pub struct RecordingClient<C> {
    inner: C,
    store: FixtureStore,
    write_lock: Mutex<()>,
}

impl<C: ChatClient> RecordingClient<C> {
    pub fn new(inner: C, store: FixtureStore) -> Self {
        Self { inner, store, write_lock: Mutex::new(()) }
    }
}

impl<C: ChatClient> ChatClient for RecordingClient<C> {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, ClientError> {
        let resp = self.inner.complete(req)?;
        let _guard = self.write_lock.lock().unwrap();
        let mut fixture = self.store.load(&req.digest())?.unwrap_or_else(|| Fixture {
            model: req.model.clone(),
            messages: req.messages.clone(),
            responses: Vec::new(),
        });
        let slot = req.sample as usize;
        if slot < fixture.responses.len() {
            fixture.responses[slot] = resp.clone();
        } else {
            fixture.responses.push(resp.clone());
        }
        self.store.save(&fixture)?;
        Ok(resp)
    }
}
