//! Deterministic scripted client.
//!
//! Replays a fixed queue of assistant turns and records every request it
//! receives, which makes end-to-end episode behavior bit-deterministic and
//! assertable in golden-file tests.

use std::sync::Mutex;

use super::{validate_messages, ChatClient, ChatMessage, ClientError, GenerationParams};

#[derive(Debug, Clone, PartialEq)]
pub struct RecordedRequest {
    pub messages: Vec<ChatMessage>,
    pub params: GenerationParams,
}

#[derive(Debug, Default)]
pub struct ScriptedClient {
    queue: Mutex<Vec<String>>,
    log: Mutex<Vec<RecordedRequest>>,
}

impl ScriptedClient {
    pub fn new(responses: Vec<String>) -> Self {
        ScriptedClient { queue: Mutex::new(responses), log: Mutex::new(Vec::new()) }
    }

    pub fn from_strs(responses: &[&str]) -> Self {
        Self::new(responses.iter().map(|s| s.to_string()).collect())
    }

    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.log.lock().expect("request log lock").clone()
    }

    pub fn remaining(&self) -> usize {
        self.queue.lock().expect("script queue lock").len()
    }
}

impl ChatClient for ScriptedClient {
    fn complete(
        &self,
        messages: &[ChatMessage],
        params: &GenerationParams,
    ) -> Result<String, ClientError> {
        validate_messages(messages)?;
        self.log
            .lock()
            .expect("request log lock")
            .push(RecordedRequest { messages: messages.to_vec(), params: params.clone() });
        let mut queue = self.queue.lock().expect("script queue lock");
        if queue.is_empty() {
            return Err(ClientError::ScriptExhausted);
        }
        Ok(queue.remove(0))
    }
}
