use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Duration;

use serde_json::{json, Value};

use super::{BackendConfig, GatewayError, Usage};
use crate::prompt::PromptBundle;

const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
const MAX_BODY_IN_ERROR: usize = 2000;

pub(super) struct Client {
    agent: ureq::Agent,
    url: String,
    api_key: Option<String>,
    json_mode: AtomicBool,
}

enum Outcome {
    Done(String, Usage),
    Retry(GatewayError, Option<Duration>),
    Fatal(GatewayError),
}

impl Client {
    pub(super) fn new(config: &BackendConfig) -> Result<Self, GatewayError> {
        let base = config.base_url.as_deref().unwrap_or(DEFAULT_BASE_URL).trim_end_matches('/');
        let api_key = if config.api_key_env_var.is_empty() {
            None
        } else {
            match std::env::var(&config.api_key_env_var) {
                Ok(k) if !k.is_empty() => Some(k),
                _ => {
                    return Err(GatewayError::Auth(format!(
                        "environment variable {} is not set",
                        config.api_key_env_var
                    )))
                }
            }
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout()))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            agent,
            url: format!("{base}/chat/completions"),
            api_key,
            json_mode: AtomicBool::new(config.json_mode),
        })
    }

    /// Text, usage and number of attempts of the first successful call.
    pub(super) fn complete(&self, bundle: &PromptBundle, config: &BackendConfig) -> Result<(String, Usage, u32), GatewayError> {
        let mut attempts = 0;
        let mut retries = 0;
        loop {
            attempts += 1;
            match self.attempt(bundle, config) {
                Outcome::Done(text, usage) => return Ok((text, usage, attempts)),
                Outcome::Fatal(e) => return Err(e),
                Outcome::Retry(e, hint) => {
                    if retries >= config.max_retries {
                        return Err(match e {
                            GatewayError::RateLimited { .. } => GatewayError::RateLimited { attempts },
                            GatewayError::Transport { message, .. } => GatewayError::Transport { attempts, message },
                            other => other,
                        });
                    }
                    let delay = config.backoff.delay(retries);
                    let delay = hint.map_or(delay, |h| h.min(Duration::from_millis(config.backoff.cap_ms)));
                    tracing::debug!(field = %bundle.field_path, attempt = attempts, ?delay, "retrying: {e}");
                    std::thread::sleep(delay);
                    retries += 1;
                }
            }
        }
    }

    fn attempt(&self, bundle: &PromptBundle, config: &BackendConfig) -> Outcome {
        let json_mode = self.json_mode.load(Ordering::Relaxed);
        let mut body = json!({
            "model": config.model,
            "temperature": config.temperature,
            "max_tokens": config.max_output_tokens,
            "messages": [
                {"role": "system", "content": bundle.system_prompt},
                {"role": "user", "content": bundle.user_prompt},
            ],
        });
        if json_mode {
            body["response_format"] = json!({"type": "json_object"});
        }
        let mut req = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = match req.send_json(&body) {
            Ok(r) => r,
            Err(e) => {
                let message = e.to_string();
                return Outcome::Retry(GatewayError::Transport { attempts: 0, message }, None);
            }
        };
        let status = resp.status().as_u16();
        let retry_after = resp
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<f64>().ok())
            .map(|s| Duration::from_millis((s * 1000.0) as u64));
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Outcome::Retry(GatewayError::Transport { attempts: 0, message: e.to_string() }, None),
        };
        match status {
            200..=299 => match parse_completion(&text) {
                Some((content, usage)) => Outcome::Done(content, usage),
                None => Outcome::Fatal(GatewayError::Backend { status, body: truncate(&text) }),
            },
            401 | 403 => Outcome::Fatal(GatewayError::Auth(truncate(&text))),
            429 => Outcome::Retry(GatewayError::RateLimited { attempts: 0 }, retry_after),
            400 if json_mode && text.contains("response_format") => {
                // The endpoint does not support JSON mode; ask again in plain text.
                self.json_mode.store(false, Ordering::Relaxed);
                Outcome::Retry(GatewayError::Backend { status, body: truncate(&text) }, Some(Duration::ZERO))
            }
            500..=599 => Outcome::Retry(GatewayError::Backend { status, body: truncate(&text) }, retry_after),
            _ => Outcome::Fatal(GatewayError::Backend { status, body: truncate(&text) }),
        }
    }
}

fn parse_completion(body: &str) -> Option<(String, Usage)> {
    let v: Value = serde_json::from_str(body).ok()?;
    let content = v.pointer("/choices/0/message/content")?.as_str()?.to_string();
    let usage = Usage {
        input_tokens: v.pointer("/usage/prompt_tokens").and_then(Value::as_u64).unwrap_or(0),
        output_tokens: v.pointer("/usage/completion_tokens").and_then(Value::as_u64).unwrap_or(0),
    };
    Some((content, usage))
}

fn truncate(s: &str) -> String {
    match s.char_indices().nth(MAX_BODY_IN_ERROR) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_string(),
    }
}
