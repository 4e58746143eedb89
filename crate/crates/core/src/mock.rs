//! Scripted-mock run scripts.
//!
//! A mock script file maps task ids to the assistant turns an episode should
//! replay, with an optional default used by tasks without an entry. Entries
//! are either one list of turns (used for every rollout) or a list of
//! per-rollout turn lists. Every episode gets its own scripted client, so
//! mock runs are byte-deterministic regardless of worker scheduling.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modelclient::ScriptedClient;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptEntry {
    /// One script, replayed for every rollout of the task.
    Turns(Vec<String>),
    /// One script per rollout index (wraps around when exceeded).
    Rollouts(Vec<Vec<String>>),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockScript {
    #[serde(default)]
    pub default: Vec<String>,
    #[serde(default)]
    pub tasks: BTreeMap<String, ScriptEntry>,
}

#[derive(Debug, Error)]
pub enum MockError {
    #[error("failed to read mock script {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid mock script: {0}")]
    Parse(#[from] serde_json::Error),
}

impl MockScript {
    pub fn load(path: &Path) -> Result<Self, MockError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| MockError::Io { path: path.display().to_string(), source: e })?;
        Ok(serde_json::from_str(&raw)?)
    }

    /// A single shared script for every task and rollout.
    pub fn uniform(turns: Vec<String>) -> Self {
        MockScript { default: turns, tasks: BTreeMap::new() }
    }

    fn turns_for(&self, task_id: &str, rollout: usize) -> Vec<String> {
        // Counterbalanced presentations ("id#swap") fall back to the base id.
        let entry = self
            .tasks
            .get(task_id)
            .or_else(|| task_id.split_once('#').and_then(|(base, _)| self.tasks.get(base)));
        match entry {
            Some(ScriptEntry::Turns(turns)) => turns.clone(),
            Some(ScriptEntry::Rollouts(rollouts)) if !rollouts.is_empty() => {
                rollouts[rollout % rollouts.len()].clone()
            }
            _ => self.default.clone(),
        }
    }

    /// Fresh scripted client for one episode.
    pub fn client_for(&self, task_id: &str, rollout: usize) -> ScriptedClient {
        ScriptedClient::new(self.turns_for(task_id, rollout))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelclient::ChatClient;
    use serde_json::json;

    #[test]
    fn parses_both_entry_shapes() {
        let script: MockScript = serde_json::from_value(json!({
            "default": ["<think>d</think><answer>x</answer>"],
            "tasks": {
                "a": ["turn1", "turn2"],
                "b": [["r0"], ["r1"]],
            }
        }))
        .unwrap();
        assert_eq!(script.turns_for("a", 0), vec!["turn1", "turn2"]);
        assert_eq!(script.turns_for("a", 3), vec!["turn1", "turn2"]);
        assert_eq!(script.turns_for("b", 0), vec!["r0"]);
        assert_eq!(script.turns_for("b", 1), vec!["r1"]);
        assert_eq!(script.turns_for("b", 2), vec!["r0"]);
        assert_eq!(script.turns_for("missing", 0), vec!["<think>d</think><answer>x</answer>"]);
    }

    #[test]
    fn counterbalanced_ids_fall_back_to_the_base_entry() {
        let script: MockScript = serde_json::from_value(json!({
            "tasks": {"t1": ["only"]}
        }))
        .unwrap();
        assert_eq!(script.turns_for("t1#swap", 0), vec!["only"]);
    }

    #[test]
    fn clients_are_independent_per_episode() {
        let script = MockScript::uniform(vec!["a".into(), "b".into()]);
        let c1 = script.client_for("x", 0);
        let c2 = script.client_for("x", 0);
        let msgs = vec![
            crate::modelclient::ChatMessage::system("s"),
            crate::modelclient::ChatMessage::user("u"),
        ];
        let params = Default::default();
        assert_eq!(c1.complete(&msgs, &params).unwrap(), "a");
        assert_eq!(c2.complete(&msgs, &params).unwrap(), "a");
    }
}
