//! Runtime and evaluation harness for agentic reward modeling.
//!
//! The harness drives think–act–observe episodes against any chat-completion
//! endpoint, executes three multimodal tool families (instruction-following
//! validators, image crop/zoom, document page retrieval), computes two-stage
//! rollout rewards with group-relative advantages, runs the preference-data
//! filtration pipelines, and scores judgment tasks across three tracks
//! (fine-grained perception, long-document QA, instruction following).
//!
//! Module map:
//!
//! - [`trajectory`]: tagged output grammar, parsing, serialization, format checks
//! - [`memory`]: episode-scoped indexed store for candidate texts and images
//! - [`toolkit`]: tool schemas, registry, dispatch, tool-response contract
//! - [`ifcheck`]: the 19 instruction-following validators
//! - [`imagetool`]: bbox-driven crop and zoom-in tool
//! - [`docretrieval`]: page store, embedder, flat cosine index, retrieval tools
//! - [`modelclient`]: chat-completion client plus a deterministic scripted mock
//! - [`agentloop`]: one episode driver (prompt rendering, turn loop, dispatch)
//! - [`reward`]: stage-1/stage-2 rewards, answer grading, group advantages
//! - [`datapipe`]: preference-pair generation and the filtration pipelines
//! - [`bench`]: judgment-task schema, prompt construction, verdict scoring
//! - [`runner`]: concurrent eval/rollout orchestration shared by CLI and tests
//! - [`config`]: harness configuration file with env-var overrides

pub mod agentloop;
pub mod bench;
pub mod config;
pub mod datapipe;
pub mod docretrieval;
pub mod ifcheck;
pub mod imagetool;
pub mod memory;
pub mod mock;
pub mod modelclient;
pub mod reward;
pub mod runner;
pub mod toolkit;
pub mod trajectory;
