//! HTTP chat-completions backend.
//!
//! Transient failures (timeouts, 429, 5xx) are retried with exponential
//! backoff up to the per-request budget; a process-wide semaphore keeps the
//! number of in-flight requests at or below the configured limit.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use base64::Engine;
use serde_json::{json, Value};

use super::{validate_messages, ChatClient, ChatMessage, ClientError, ContentPart, GenerationParams};

#[derive(Debug, Clone)]
pub struct EndpointConfig {
    /// Full chat-completions URL, e.g. `http://host:8000/v1/chat/completions`.
    pub url: String,
    pub model: String,
    pub api_key: Option<String>,
    /// Global cap on concurrent in-flight requests.
    pub max_concurrency: usize,
    /// Base delay of the exponential backoff between retries.
    pub backoff_base: Duration,
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>, model: impl Into<String>) -> Self {
        EndpointConfig {
            url: url.into(),
            model: model.into(),
            api_key: None,
            max_concurrency: 8,
            backoff_base: Duration::from_millis(200),
        }
    }
}

/// Counting semaphore; no fairness guarantees, which is fine for a cap.
pub(crate) struct Semaphore {
    permits: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    pub(crate) fn new(permits: usize) -> Self {
        Semaphore { permits: Mutex::new(permits.max(1)), cv: Condvar::new() }
    }

    pub(crate) fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut permits = self.permits.lock().expect("semaphore lock");
        while *permits == 0 {
            permits = self.cv.wait(permits).expect("semaphore wait");
        }
        *permits -= 1;
        SemaphoreGuard { sem: self }
    }
}

pub(crate) struct SemaphoreGuard<'a> {
    sem: &'a Semaphore,
}

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        let mut permits = self.sem.permits.lock().expect("semaphore lock");
        *permits += 1;
        self.sem.cv.notify_one();
    }
}

fn media_type_for(path: &std::path::Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("jpg") | Some("jpeg") => "image/jpeg",
        _ => "image/png",
    }
}

fn render_part(part: &ContentPart) -> Result<Value, ClientError> {
    Ok(match part {
        ContentPart::Text { text } => json!({"type": "text", "text": text}),
        ContentPart::Image { path } => {
            let bytes = std::fs::read(path).map_err(|e| {
                ClientError::InvalidRequest(format!("failed to read image {}: {e}", path.display()))
            })?;
            let encoded = base64::engine::general_purpose::STANDARD.encode(bytes);
            let url = format!("data:{};base64,{encoded}", media_type_for(path));
            json!({"type": "image_url", "image_url": {"url": url}})
        }
        ContentPart::ImageUrl { url } => json!({"type": "image_url", "image_url": {"url": url}}),
    })
}

/// The exact JSON body sent to the endpoint; parts keep their message order.
pub fn build_request_body(
    model: &str,
    messages: &[ChatMessage],
    params: &GenerationParams,
) -> Result<Value, ClientError> {
    let rendered: Result<Vec<Value>, ClientError> = messages
        .iter()
        .map(|m| {
            let parts: Result<Vec<Value>, ClientError> = m.content.iter().map(render_part).collect();
            Ok(json!({"role": m.role.as_str(), "content": parts?}))
        })
        .collect();
    let mut body = json!({
        "model": model,
        "messages": rendered?,
        "temperature": params.temperature,
        "max_tokens": params.max_tokens,
    });
    if !params.stop.is_empty() {
        body["stop"] = json!(params.stop);
    }
    Ok(body)
}

pub struct HttpChatClient {
    cfg: EndpointConfig,
    client: reqwest::blocking::Client,
    limiter: Semaphore,
}

impl HttpChatClient {
    pub fn new(cfg: EndpointConfig) -> Self {
        let limiter = Semaphore::new(cfg.max_concurrency);
        HttpChatClient { cfg, client: reqwest::blocking::Client::new(), limiter }
    }

    fn attempt(
        &self,
        body: &Value,
        params: &GenerationParams,
    ) -> Result<String, (bool, ClientError)> {
        // (retryable, error)
        let _permit = self.limiter.acquire();
        let mut req = self.client.post(&self.cfg.url).timeout(params.timeout).json(body);
        if let Some(key) = &self.cfg.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                (true, ClientError::Timeout(params.timeout))
            } else {
                (true, ClientError::Transport(e.to_string()))
            }
        })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| (true, ClientError::Transport(e.to_string())))?;
        if status.as_u16() == 429 || status.is_server_error() {
            return Err((true, endpoint_error(status.as_u16(), &text)));
        }
        if !status.is_success() {
            return Err((false, endpoint_error(status.as_u16(), &text)));
        }
        let parsed: Value = serde_json::from_str(&text)
            .map_err(|e| (false, ClientError::Transport(format!("bad response body: {e}"))))?;
        extract_content(&parsed).map_err(|e| (false, e))
    }
}

fn endpoint_error(status: u16, body: &str) -> ClientError {
    let excerpt: String = body.chars().take(200).collect();
    ClientError::Endpoint { status, body: excerpt }
}

fn extract_content(body: &Value) -> Result<String, ClientError> {
    let content = &body["choices"][0]["message"]["content"];
    if let Some(s) = content.as_str() {
        return Ok(s.to_string());
    }
    // Some servers answer with content parts; concatenate the text ones.
    if let Some(parts) = content.as_array() {
        let text: String =
            parts.iter().filter_map(|p| p["text"].as_str()).collect::<Vec<_>>().join("");
        return Ok(text);
    }
    Err(ClientError::Transport("response carries no message content".into()))
}

impl ChatClient for HttpChatClient {
    fn complete(
        &self,
        messages: &[ChatMessage],
        params: &GenerationParams,
    ) -> Result<String, ClientError> {
        validate_messages(messages)?;
        let body = build_request_body(&self.cfg.model, messages, params)?;
        let mut last: Option<ClientError> = None;
        let attempts = params.retry_budget + 1;
        for attempt in 0..attempts {
            if attempt > 0 {
                let backoff = self.cfg.backoff_base * 2u32.saturating_pow(attempt - 1);
                std::thread::sleep(backoff);
            }
            match self.attempt(&body, params) {
                Ok(text) => return Ok(text),
                Err((retryable, err)) => {
                    if !retryable {
                        return Err(err);
                    }
                    last = Some(err);
                }
            }
        }
        Err(ClientError::BudgetExhausted {
            attempts,
            last: last.map(|e| e.to_string()).unwrap_or_default(),
        })
    }
}
