//! Harness configuration.
//!
//! One TOML file with env-var overrides for the secrets and endpoint
//! settings (`RMHARNESS_API_KEY`, `RMHARNESS_ENDPOINT_URL`,
//! `RMHARNESS_MODEL`). Unknown keys are rejected on load.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agentloop::EpisodeConfig;
use crate::docretrieval::embed::DEFAULT_EMBED_DIM;
use crate::modelclient::{EndpointConfig, GenerationParams};
use crate::reward::RewardConstants;

pub const ENV_API_KEY: &str = "RMHARNESS_API_KEY";
pub const ENV_ENDPOINT_URL: &str = "RMHARNESS_ENDPOINT_URL";
pub const ENV_MODEL: &str = "RMHARNESS_MODEL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointSection {
    pub url: String,
    pub model: String,
    /// Prefer the env var; the file field exists for throwaway setups.
    pub api_key: Option<String>,
    pub max_concurrency: usize,
}

impl Default for EndpointSection {
    fn default() -> Self {
        EndpointSection {
            url: String::new(),
            model: String::new(),
            api_key: None,
            max_concurrency: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSection {
    /// Empty url selects the deterministic hash embedder.
    pub url: String,
    pub model: String,
    pub dim: usize,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        EmbeddingSection { url: String::new(), model: String::new(), dim: DEFAULT_EMBED_DIM }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeSection {
    pub max_cycles: usize,
    pub max_consecutive_errors: usize,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: f64,
    pub retry_budget: u32,
}

impl Default for EpisodeSection {
    fn default() -> Self {
        EpisodeSection {
            max_cycles: 8,
            max_consecutive_errors: 3,
            temperature: 0.0,
            max_tokens: 2048,
            timeout_secs: 120.0,
            retry_budget: 3,
        }
    }
}

impl EpisodeSection {
    pub fn to_episode_config(&self) -> EpisodeConfig {
        EpisodeConfig {
            max_cycles: self.max_cycles,
            max_consecutive_errors: self.max_consecutive_errors,
            params: GenerationParams {
                temperature: self.temperature,
                max_tokens: self.max_tokens,
                stop: Vec::new(),
                timeout: Duration::from_secs_f64(self.timeout_secs),
                retry_budget: self.retry_budget,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    /// Root of the pre-rendered document page images.
    pub image_root: PathBuf,
    /// Vector-index persistence file; rebuilt from image_root when absent.
    pub index: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub workers: usize,
    pub seed: u64,
    pub counterbalance: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { workers: 4, seed: 0, counterbalance: false }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub endpoint: EndpointSection,
    pub embedding: EmbeddingSection,
    pub reward: RewardConstants,
    pub episode: EpisodeSection,
    pub paths: PathsSection,
    pub run: RunSection,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl HarnessConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), source: e })?;
        Self::from_toml(&raw)
    }

    pub fn from_toml(raw: &str) -> Result<Self, ConfigError> {
        let mut cfg: HarnessConfig = toml::from_str(raw)?;
        cfg.apply_env_overrides();
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_env_overrides(&mut self) {
        if let Ok(key) = std::env::var(ENV_API_KEY) {
            self.endpoint.api_key = Some(key);
        }
        if let Ok(url) = std::env::var(ENV_ENDPOINT_URL) {
            self.endpoint.url = url;
        }
        if let Ok(model) = std::env::var(ENV_MODEL) {
            self.endpoint.model = model;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.reward.validate().map_err(ConfigError::Invalid)?;
        if self.run.workers == 0 {
            return Err(ConfigError::Invalid("run.workers must be at least 1".into()));
        }
        if self.episode.max_cycles == 0 {
            return Err(ConfigError::Invalid("episode.max_cycles must be at least 1".into()));
        }
        if self.episode.timeout_secs <= 0.0 {
            return Err(ConfigError::Invalid("episode.timeout_secs must be positive".into()));
        }
        if self.embedding.dim == 0 {
            return Err(ConfigError::Invalid("embedding.dim must be positive".into()));
        }
        Ok(())
    }

    pub fn endpoint_config(&self) -> EndpointConfig {
        EndpointConfig {
            url: self.endpoint.url.clone(),
            model: self.endpoint.model.clone(),
            api_key: self.endpoint.api_key.clone(),
            max_concurrency: self.endpoint.max_concurrency,
            backoff_base: Duration::from_millis(200),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        HarnessConfig::default().validate().unwrap();
    }

    #[test]
    fn parses_a_full_file() {
        let cfg = HarnessConfig::from_toml(
            r#"
            [endpoint]
            url = "http://localhost:8000/v1/chat/completions"
            model = "judge"

            [reward]
            r_f = 0.25

            [episode]
            max_cycles = 4

            [run]
            workers = 2
            seed = 42
            "#,
        )
        .unwrap();
        assert_eq!(cfg.endpoint.model, "judge");
        assert_eq!(cfg.reward.r_f, 0.25);
        assert_eq!(cfg.reward.r_a, 1.0);
        assert_eq!(cfg.episode.to_episode_config().max_cycles, 4);
        assert_eq!(cfg.run.seed, 42);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = HarnessConfig::from_toml("[endpoint]\nurll = \"typo\"\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
        let err = HarnessConfig::from_toml("[surprise]\nx = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(HarnessConfig::from_toml("[run]\nworkers = 0\n").is_err());
        assert!(HarnessConfig::from_toml("[episode]\ntimeout_secs = 0.0\n").is_err());
        assert!(HarnessConfig::from_toml("[reward]\nr_f = -1.0\n").is_err());
    }
}
