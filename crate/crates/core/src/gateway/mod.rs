//! Pluggable completion backend with real-HTTP, record, and replay modes.
//!
//! Every request is content-addressed by [`request_digest`]; record mode
//! persists one JSON fixture per digest and replay mode serves completions
//! from those fixtures with zero network activity, failing loudly on a
//! miss. This is what makes every model-backed pipeline stage
//! reproducible offline.

mod transport;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use transport::{HttpTransport, Transport, TransportError, TransportResponse};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("request timed out")]
    Timeout,
    #[error("rate limited; gave up after {retries} retries")]
    RateLimited { retries: u32 },
    #[error("no fixture for digest {digest} ({purpose:?}); record the session first")]
    FixtureMiss { digest: String, purpose: PurposeTag },
    #[error("api key environment variable {var} is not set")]
    AuthMissing { var: String },
    #[error("invalid backend config: {0}")]
    InvalidConfig(String),
    #[error("backend returned http {status}: {detail}")]
    Http { status: u16, detail: String },
    #[error("could not parse backend response: {0}")]
    MalformedResponse(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("fixture io error at {path}: {source}")]
    FixtureIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("call budget of {limit} exhausted")]
    CallBudgetExceeded { limit: u64 },
    #[error("prompt user text is empty")]
    EmptyUserText,
}

impl GatewayError {
    /// Configuration-class errors abort a run; everything else degrades to
    /// a per-row failure.
    pub fn is_fatal_config(&self) -> bool {
        matches!(
            self,
            GatewayError::AuthMissing { .. } | GatewayError::InvalidConfig(_)
        )
    }
}

/// What a prompt is for. Part of the request digest, and the unit the
/// per-purpose call counters track.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PurposeTag {
    Classify,
    StringGen,
    RelTag,
    AlgoGen,
    TypeDetect,
    Lookup,
}

impl PurposeTag {
    pub const ALL: [PurposeTag; 6] = [
        PurposeTag::Classify,
        PurposeTag::StringGen,
        PurposeTag::RelTag,
        PurposeTag::AlgoGen,
        PurposeTag::TypeDetect,
        PurposeTag::Lookup,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PurposeTag::Classify => "Classify",
            PurposeTag::StringGen => "StringGen",
            PurposeTag::RelTag => "RelTag",
            PurposeTag::AlgoGen => "AlgoGen",
            PurposeTag::TypeDetect => "TypeDetect",
            PurposeTag::Lookup => "Lookup",
        }
    }

    /// Purposes that synthesize transformations (as opposed to classifying
    /// or looking up values).
    pub fn is_synthesis(self) -> bool {
        matches!(self, PurposeTag::StringGen | PurposeTag::RelTag | PurposeTag::AlgoGen)
    }
}

/// One completion request.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PromptRequest {
    pub system_text: String,
    pub user_text: String,
    pub temperature: f64,
    pub max_output_chars: usize,
    pub purpose: PurposeTag,
}

impl PromptRequest {
    /// Temperature 0 and a generous output budget by default.
    pub fn new(purpose: PurposeTag, system_text: impl Into<String>, user_text: impl Into<String>) -> Self {
        PromptRequest {
            system_text: system_text.into(),
            user_text: user_text.into(),
            temperature: 0.0,
            max_output_chars: 16_384,
            purpose,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Completion {
    /// May be empty: an empty completion signals model refusal and callers
    /// must handle it.
    pub text: String,
    pub backend_id: String,
    pub cached: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendMode {
    Http,
    Replay,
    Record,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendConfig {
    pub mode: BackendMode,
    pub endpoint: String,
    pub model_name: String,
    /// Name of the environment variable holding the API key. Empty means
    /// the endpoint needs no key (local model servers).
    pub api_key_env: String,
    pub fixture_dir: Option<PathBuf>,
    pub timeout: Duration,
    pub max_retries: u32,
    /// Backoff base for rate-limit retries (doubles per attempt).
    pub backoff: Duration,
    /// Per-run cap on total gateway calls; guards per-row lookup loops.
    pub max_total_calls: Option<u64>,
}

impl BackendConfig {
    pub fn replay(fixture_dir: impl Into<PathBuf>) -> Self {
        BackendConfig {
            mode: BackendMode::Replay,
            fixture_dir: Some(fixture_dir.into()),
            ..BackendConfig::default()
        }
    }

    pub fn record(
        endpoint: impl Into<String>,
        model_name: impl Into<String>,
        fixture_dir: impl Into<PathBuf>,
    ) -> Self {
        BackendConfig {
            mode: BackendMode::Record,
            endpoint: endpoint.into(),
            model_name: model_name.into(),
            fixture_dir: Some(fixture_dir.into()),
            ..BackendConfig::default()
        }
    }

    pub fn http(endpoint: impl Into<String>, model_name: impl Into<String>) -> Self {
        BackendConfig {
            mode: BackendMode::Http,
            endpoint: endpoint.into(),
            model_name: model_name.into(),
            ..BackendConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        match self.mode {
            BackendMode::Http | BackendMode::Record => {
                if self.endpoint.is_empty() {
                    return Err(GatewayError::InvalidConfig(
                        "http/record mode needs an endpoint".into(),
                    ));
                }
                if self.model_name.is_empty() {
                    return Err(GatewayError::InvalidConfig(
                        "http/record mode needs a model name".into(),
                    ));
                }
            }
            BackendMode::Replay => {}
        }
        if matches!(self.mode, BackendMode::Replay | BackendMode::Record)
            && self.fixture_dir.is_none()
        {
            return Err(GatewayError::InvalidConfig(
                "replay/record mode needs a fixture directory".into(),
            ));
        }
        Ok(())
    }
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            mode: BackendMode::Replay,
            endpoint: String::new(),
            model_name: String::new(),
            api_key_env: "OPENAI_API_KEY".into(),
            fixture_dir: None,
            timeout: Duration::from_secs(60),
            max_retries: 3,
            backoff: Duration::from_millis(500),
            max_total_calls: None,
        }
    }
}

/// Stable content hash over (system text, user text, temperature, purpose).
/// Independent of `max_output_chars` and of the backend config, so a
/// recorded fixture stays valid across models and output budgets.
pub fn request_digest(request: &PromptRequest) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"colcast-prompt-v1");
    for field in [&request.system_text, &request.user_text] {
        hasher.update((field.len() as u64).to_le_bytes());
        hasher.update(field.as_bytes());
    }
    hasher.update(request.temperature.to_bits().to_le_bytes());
    hasher.update(request.purpose.name().as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// On-disk fixture: the request fields plus the recorded response, one JSON
/// object per file, named `<digest>.json`.
#[derive(Debug, Serialize, Deserialize)]
struct Fixture {
    digest: String,
    purpose: PurposeTag,
    system_text: String,
    user_text: String,
    temperature: f64,
    model: String,
    response_text: String,
}

/// The completion backend. Cheap to share behind a reference; all methods
/// take `&self` and are safe to call from multiple threads.
pub struct Gateway {
    config: BackendConfig,
    transport: Box<dyn Transport>,
    calls: AtomicU64,
    purpose_calls: [AtomicU64; PurposeTag::ALL.len()],
    // Record mode serializes fixture writes.
    write_lock: Mutex<()>,
}

impl Gateway {
    pub fn new(config: BackendConfig) -> Result<Self, GatewayError> {
        Gateway::with_transport(config, Box::new(HttpTransport))
    }

    pub fn with_transport(
        config: BackendConfig,
        transport: Box<dyn Transport>,
    ) -> Result<Self, GatewayError> {
        config.validate()?;
        Ok(Gateway {
            config,
            transport,
            calls: AtomicU64::new(0),
            purpose_calls: std::array::from_fn(|_| AtomicU64::new(0)),
            write_lock: Mutex::new(()),
        })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    pub fn calls_made(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn calls_for(&self, purpose: PurposeTag) -> u64 {
        self.purpose_calls[purpose as usize].load(Ordering::Relaxed)
    }

    /// Total calls across the synthesis purposes (StringGen, RelTag,
    /// AlgoGen).
    pub fn synthesis_calls(&self) -> u64 {
        PurposeTag::ALL
            .iter()
            .filter(|p| p.is_synthesis())
            .map(|&p| self.calls_for(p))
            .sum()
    }

    /// Resolves one request according to the backend mode.
    pub fn complete(&self, request: &PromptRequest) -> Result<Completion, GatewayError> {
        if request.user_text.is_empty() {
            return Err(GatewayError::EmptyUserText);
        }
        if let Some(limit) = self.config.max_total_calls {
            let admitted = self
                .calls
                .fetch_update(Ordering::Relaxed, Ordering::Relaxed, |used| {
                    (used < limit).then_some(used + 1)
                })
                .is_ok();
            if !admitted {
                return Err(GatewayError::CallBudgetExceeded { limit });
            }
        } else {
            self.calls.fetch_add(1, Ordering::Relaxed);
        }
        self.purpose_calls[request.purpose as usize].fetch_add(1, Ordering::Relaxed);

        match self.config.mode {
            BackendMode::Replay => self.replay(request),
            BackendMode::Http => {
                let text = self.post_with_retries(request)?;
                Ok(Completion {
                    text,
                    backend_id: self.config.model_name.clone(),
                    cached: false,
                })
            }
            BackendMode::Record => {
                let text = self.post_with_retries(request)?;
                self.persist_fixture(request, &text)?;
                Ok(Completion {
                    text,
                    backend_id: self.config.model_name.clone(),
                    cached: false,
                })
            }
        }
    }

    fn fixture_path(&self, digest: &str) -> PathBuf {
        let dir = self.config.fixture_dir.as_deref().unwrap_or(Path::new("."));
        dir.join(format!("{digest}.json"))
    }

    fn replay(&self, request: &PromptRequest) -> Result<Completion, GatewayError> {
        let digest = request_digest(request);
        let path = self.fixture_path(&digest);
        let contents = match std::fs::read_to_string(&path) {
            Ok(contents) => contents,
            Err(err) if err.kind() == std::io::ErrorKind::NotFound => {
                return Err(GatewayError::FixtureMiss { digest, purpose: request.purpose });
            }
            Err(err) => {
                return Err(GatewayError::FixtureIo {
                    path: path.display().to_string(),
                    source: err,
                })
            }
        };
        let fixture: Fixture = serde_json::from_str(&contents)
            .map_err(|e| GatewayError::MalformedResponse(format!("fixture {digest}: {e}")))?;
        Ok(Completion { text: fixture.response_text, backend_id: fixture.model, cached: true })
    }

    fn persist_fixture(&self, request: &PromptRequest, text: &str) -> Result<(), GatewayError> {
        let digest = request_digest(request);
        let path = self.fixture_path(&digest);
        let fixture = Fixture {
            digest: digest.clone(),
            purpose: request.purpose,
            system_text: request.system_text.clone(),
            user_text: request.user_text.clone(),
            temperature: request.temperature,
            model: self.config.model_name.clone(),
            response_text: text.to_string(),
        };
        let io = |source: std::io::Error| GatewayError::FixtureIo {
            path: path.display().to_string(),
            source,
        };

        let _guard = self.write_lock.lock().expect("fixture write lock");
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        // Write-then-rename: retried or concurrent recordings of the same
        // digest collapse into one identical fixture instead of duplicates.
        let tmp = path.with_extension("json.tmp");
        let body = serde_json::to_string_pretty(&fixture).expect("fixture serializes");
        std::fs::write(&tmp, body).map_err(io)?;
        std::fs::rename(&tmp, &path).map_err(io)?;
        Ok(())
    }

    fn post_with_retries(&self, request: &PromptRequest) -> Result<String, GatewayError> {
        let api_key = self.api_key()?;
        let body = chat_body(&self.config.model_name, request);

        let mut attempt = 0u32;
        loop {
            let response = self.transport.post_json(
                &self.config.endpoint,
                api_key.as_deref(),
                &body,
                self.config.timeout,
            );
            match response {
                Ok(response) if response.status == 429 => {
                    if attempt >= self.config.max_retries {
                        return Err(GatewayError::RateLimited { retries: attempt });
                    }
                    std::thread::sleep(self.config.backoff * 2u32.pow(attempt));
                    attempt += 1;
                }
                Ok(response) if !(200..300).contains(&response.status) => {
                    return Err(GatewayError::Http {
                        status: response.status,
                        detail: truncate(&response.body, 300),
                    });
                }
                Ok(response) => return parse_chat_response(&response.body),
                Err(TransportError::Timeout) => return Err(GatewayError::Timeout),
                Err(TransportError::Network(detail)) => {
                    return Err(GatewayError::Network(detail))
                }
            }
        }
    }

    fn api_key(&self) -> Result<Option<String>, GatewayError> {
        if self.config.api_key_env.is_empty() {
            return Ok(None);
        }
        match std::env::var(&self.config.api_key_env) {
            Ok(key) if !key.is_empty() => Ok(Some(key)),
            _ => Err(GatewayError::AuthMissing { var: self.config.api_key_env.clone() }),
        }
    }
}

fn chat_body(model: &str, request: &PromptRequest) -> serde_json::Value {
    let mut messages = Vec::new();
    if !request.system_text.is_empty() {
        messages.push(serde_json::json!({"role": "system", "content": request.system_text}));
    }
    messages.push(serde_json::json!({"role": "user", "content": request.user_text}));
    serde_json::json!({
        "model": model,
        "messages": messages,
        "temperature": request.temperature,
        // Rough chars-to-tokens conversion; backends treat this as a cap.
        "max_tokens": (request.max_output_chars / 4).max(16),
    })
}

fn parse_chat_response(body: &str) -> Result<String, GatewayError> {
    let value: serde_json::Value = serde_json::from_str(body)
        .map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
    value["choices"][0]["message"]["content"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| {
            GatewayError::MalformedResponse(format!(
                "no choices[0].message.content in {}",
                truncate(body, 200)
            ))
        })
}

fn truncate(text: &str, max: usize) -> String {
    if text.len() <= max {
        text.to_string()
    } else {
        let mut end = max;
        while !text.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}…", &text[..end])
    }
}
