//! Chat-completion client abstraction.
//!
//! Episodes talk to a [`ChatClient`]: either the HTTP backend for real
//! endpoints or the deterministic scripted mock used by tests and `--mock`
//! runs. Requests carry multimodal content parts; the wire contract is the
//! widely used chat-completions JSON shape.

pub mod http;
pub mod scripted;

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{build_request_body, EndpointConfig, HttpChatClient};
pub use scripted::{RecordedRequest, ScriptedClient};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
            Role::Tool => "tool",
        }
    }
}

/// One ordered piece of message content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ContentPart {
    Text { text: String },
    /// Local image sent base64-inline (works without shared filesystems).
    Image { path: PathBuf },
    /// Pre-hosted image sent by URL.
    ImageUrl { url: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: Vec<ContentPart>,
}

impl ChatMessage {
    pub fn text(role: Role, text: impl Into<String>) -> Self {
        ChatMessage { role, content: vec![ContentPart::Text { text: text.into() }] }
    }

    pub fn system(text: impl Into<String>) -> Self {
        Self::text(Role::System, text)
    }

    pub fn user(text: impl Into<String>) -> Self {
        Self::text(Role::User, text)
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        Self::text(Role::Assistant, text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: f64,
    pub max_tokens: u32,
    pub stop: Vec<String>,
    pub timeout: Duration,
    /// Number of retries after the first attempt.
    pub retry_budget: u32,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            temperature: 0.0,
            max_tokens: 2048,
            stop: Vec::new(),
            timeout: Duration::from_secs(120),
            retry_budget: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClientError {
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("endpoint returned {status}: {body}")]
    Endpoint { status: u16, body: String },
    #[error("retry budget exhausted after {attempts} attempts; last error: {last}")]
    BudgetExhausted { attempts: u32, last: String },
    #[error("scripted client has no responses left")]
    ScriptExhausted,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

/// A turn-complete chat backend, shareable across concurrent episodes.
pub trait ChatClient: Send + Sync {
    /// Returns one assistant turn's raw text.
    fn complete(
        &self,
        messages: &[ChatMessage],
        params: &GenerationParams,
    ) -> Result<String, ClientError>;
}

pub(crate) fn validate_messages(messages: &[ChatMessage]) -> Result<(), ClientError> {
    let first = messages
        .first()
        .ok_or_else(|| ClientError::InvalidRequest("messages must not be empty".into()))?;
    if first.role != Role::System {
        return Err(ClientError::InvalidRequest("first message must be the system prompt".into()));
    }
    if messages.iter().any(|m| m.content.is_empty()) {
        return Err(ClientError::InvalidRequest("messages must have at least one part".into()));
    }
    Ok(())
}
