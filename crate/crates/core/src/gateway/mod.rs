//! Backends that answer prompt bundles.
//!
//! Two backends share one [`Gateway`] front: an OpenAI-compatible
//! chat-completions client and an offline heuristic that reads the same
//! bundle and answers from OpenAPI keywords and description cues. Every
//! completion, successful or not, is appended to an optional JSON-Lines
//! audit log.

mod heuristic;
mod openai;

pub use heuristic::{heuristic_answers, render_answers, HEURISTIC_RULES};

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::path::JsonPath;
use crate::prompt::PromptBundle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    OpenaiCompatible,
    Heuristic,
}

/// Exponential backoff between retries: `base * factor^attempt`, scaled by
/// a uniform factor in `1 ± jitter`, never above `cap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct BackoffConfig {
    pub base_ms: u64,
    pub factor: f64,
    pub jitter: f64,
    pub cap_ms: u64,
}

impl Default for BackoffConfig {
    fn default() -> Self {
        Self { base_ms: 1000, factor: 2.0, jitter: 0.2, cap_ms: 30_000 }
    }
}

impl BackoffConfig {
    /// Delay before retry number `retry` (0-based).
    pub fn delay(&self, retry: u32) -> Duration {
        use rand::Rng;
        let raw = self.base_ms as f64 * self.factor.powi(retry as i32);
        let scale = if self.jitter > 0.0 { rand::thread_rng().gen_range(1.0 - self.jitter..=1.0 + self.jitter) } else { 1.0 };
        Duration::from_millis((raw * scale).min(self.cap_ms as f64).max(0.0) as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Endpoint root; `/chat/completions` is appended.
    pub base_url: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub max_in_flight: usize,
    pub api_key_env_var: String,
    /// Ask for `response_format: json_object`; dropped automatically when
    /// the endpoint rejects it.
    pub json_mode: bool,
    pub backoff: BackoffConfig,
    pub audit_log: Option<PathBuf>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Heuristic,
            base_url: None,
            model: "gpt-4o".into(),
            temperature: 0.0,
            max_output_tokens: 1024,
            timeout_ms: 60_000,
            max_retries: 5,
            max_in_flight: 4,
            api_key_env_var: "OPENAI_API_KEY".into(),
            json_mode: true,
            backoff: BackoffConfig::default(),
            audit_log: None,
        }
    }
}

impl BackendConfig {
    pub fn heuristic() -> Self {
        Self::default()
    }

    pub fn openai(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            kind: BackendKind::OpenaiCompatible,
            base_url: Some(base_url.into()),
            model: model.into(),
            ..Self::default()
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.max_in_flight == 0 {
            return Err(GatewayError::Config("maxInFlight must be at least 1".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(GatewayError::Config(format!("temperature {} is outside [0, 2]", self.temperature)));
        }
        if self.backoff.factor < 1.0 || !(0.0..1.0).contains(&self.backoff.jitter) {
            return Err(GatewayError::Config("backoff needs factor >= 1 and jitter in [0, 1)".into()));
        }
        Ok(())
    }

    /// Read a config from a YAML or JSON file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self = serde_yaml::from_str(&text).map_err(|e| GatewayError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Usage {
    pub input_tokens: u64,
    pub output_tokens: u64,
}

impl std::ops::AddAssign for Usage {
    fn add_assign(&mut self, rhs: Self) {
        self.input_tokens += rhs.input_tokens;
        self.output_tokens += rhs.output_tokens;
    }
}

/// Verbatim model output for one bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RawCompletion {
    pub field_path: JsonPath,
    pub text: String,
    pub usage: Usage,
    pub latency_ms: u64,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GatewayError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("transport error after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("backend returned HTTP {status}: {body}")]
    Backend { status: u16, body: String },
    #[error("invalid backend configuration: {0}")]
    Config(String),
}

/// Per-item results of [`Gateway::complete_batch`], in input order.
#[derive(Debug, Clone)]
pub struct BatchReport {
    pub items: Vec<Result<RawCompletion, GatewayError>>,
    /// Sum of usage over successful items.
    pub usage: Usage,
}

impl BatchReport {
    pub fn failures(&self) -> usize {
        self.items.iter().filter(|r| r.is_err()).count()
    }
}

enum Backend {
    Heuristic,
    OpenAi(openai::Client),
}

/// A configured backend plus its audit log.
pub struct Gateway {
    config: BackendConfig,
    backend: Backend,
    audit: Option<Mutex<File>>,
}

impl Gateway {
    pub fn new(config: BackendConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        let backend = match config.kind {
            BackendKind::Heuristic => Backend::Heuristic,
            BackendKind::OpenaiCompatible => Backend::OpenAi(openai::Client::new(&config)?),
        };
        let audit = match &config.audit_log {
            Some(p) => Some(Mutex::new(
                OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(p)
                    .map_err(|e| GatewayError::Config(format!("cannot open audit log {}: {e}", p.display())))?,
            )),
            None => None,
        };
        Ok(Self { config, backend, audit })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    /// Answer one bundle, retrying transient failures.
    pub fn complete(&self, bundle: &PromptBundle) -> Result<RawCompletion, GatewayError> {
        let started = Instant::now();
        let result = match &self.backend {
            Backend::Heuristic => Ok(RawCompletion {
                field_path: bundle.field_path.clone(),
                text: render_answers(bundle, &heuristic_answers(bundle)),
                usage: Usage::default(),
                latency_ms: started.elapsed().as_millis() as u64,
                attempts: 1,
            }),
            Backend::OpenAi(client) => client.complete(bundle, &self.config).map(|(text, usage, attempts)| RawCompletion {
                field_path: bundle.field_path.clone(),
                text,
                usage,
                latency_ms: started.elapsed().as_millis() as u64,
                attempts,
            }),
        };
        self.audit(bundle, &result);
        result
    }

    /// Answer every bundle with at most `maxInFlight` requests outstanding.
    /// Failures are reported per item and never stop the other items.
    pub fn complete_batch(&self, bundles: &[PromptBundle]) -> BatchReport {
        let next = AtomicUsize::new(0);
        let workers = self.config.max_in_flight.min(bundles.len());
        let mut slots: Vec<(usize, Result<RawCompletion, GatewayError>)> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|_| {
                    s.spawn(|| {
                        let mut done = Vec::new();
                        loop {
                            let i = next.fetch_add(1, Ordering::SeqCst);
                            let Some(bundle) = bundles.get(i) else { break };
                            done.push((i, self.complete(bundle)));
                        }
                        done
                    })
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("batch worker panicked")).collect()
        });
        slots.sort_by_key(|(i, _)| *i);
        let items: Vec<_> = slots.into_iter().map(|(_, r)| r).collect();
        let mut usage = Usage::default();
        for c in items.iter().flatten() {
            usage += c.usage;
        }
        BatchReport { items, usage }
    }

    fn audit(&self, bundle: &PromptBundle, result: &Result<RawCompletion, GatewayError>) {
        let Some(file) = &self.audit else { return };
        let mut record = json!({
            "timestamp": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            "operationId": bundle.operation_id,
            "fieldPath": bundle.field_path,
            "backend": self.config.kind,
            "model": self.config.model,
        });
        match result {
            Ok(c) => {
                record["attempts"] = c.attempts.into();
                record["latencyMs"] = c.latency_ms.into();
                record["usage"] = serde_json::to_value(c.usage).expect("usage serializes");
                record["text"] = c.text.clone().into();
            }
            Err(e) => record["error"] = e.to_string().into(),
        }
        let mut line = record.to_string();
        line.push('\n');
        let mut f = file.lock().expect("audit log lock");
        if let Err(e) = f.write_all(line.as_bytes()) {
            tracing::warn!("audit log write failed: {e}");
        }
    }
}

/// One-shot form of [`Gateway::complete`].
pub fn complete(bundle: &PromptBundle, config: &BackendConfig) -> Result<RawCompletion, GatewayError> {
    Gateway::new(config.clone())?.complete(bundle)
}

/// One-shot form of [`Gateway::complete_batch`]. A bad config fails every item.
pub fn complete_batch(bundles: &[PromptBundle], config: &BackendConfig) -> BatchReport {
    match Gateway::new(config.clone()) {
        Ok(g) => g.complete_batch(bundles),
        Err(e) => BatchReport { items: bundles.iter().map(|_| Err(e.clone())).collect(), usage: Usage::default() },
    }
}
