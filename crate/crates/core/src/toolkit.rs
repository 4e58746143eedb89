//! Uniform tool abstraction.
//!
//! Every tool declares an OpenAI-style function-calling schema, is dispatched
//! through a read-only registry, and answers with a [`ToolResponse`] carrying
//! textual feedback plus any produced images. Dispatch never raises past the
//! boundary: unknown tools and bad arguments come back as error responses so
//! the episode can retry or stop.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::memory::{MapKind, MemoryMap};
use crate::trajectory::ToolCall;

/// Declared parameter types, rendered into the JSON-schema manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamType {
    String,
    Integer,
    Number,
    Boolean,
    Array,
    Object,
}

impl ParamType {
    fn json_name(self) -> &'static str {
        match self {
            ParamType::String => "string",
            ParamType::Integer => "integer",
            ParamType::Number => "number",
            ParamType::Boolean => "boolean",
            ParamType::Array => "array",
            ParamType::Object => "object",
        }
    }

    fn matches(self, value: &Value) -> bool {
        match self {
            ParamType::String => value.is_string(),
            // Accept integral floats the way lenient JSON emitters produce them.
            ParamType::Integer => {
                value.is_i64() || value.is_u64() || value.as_f64().is_some_and(|f| f.fract() == 0.0)
            }
            ParamType::Number => value.is_number(),
            ParamType::Boolean => value.is_boolean(),
            ParamType::Array => value.is_array(),
            ParamType::Object => value.is_object(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: ParamType,
    pub required: bool,
    pub description: &'static str,
}

impl ParamSpec {
    pub fn required(name: &'static str, kind: ParamType, description: &'static str) -> Self {
        ParamSpec { name, kind, required: true, description }
    }

    pub fn optional(name: &'static str, kind: ParamType, description: &'static str) -> Self {
        ParamSpec { name, kind, required: false, description }
    }
}

/// Unified function-calling schema for one tool.
#[derive(Debug, Clone)]
pub struct ToolSchema {
    pub name: &'static str,
    pub description: &'static str,
    pub parameters: Vec<ParamSpec>,
}

impl ToolSchema {
    /// The `{"type":"function", ...}` declaration embedded in system prompts.
    pub fn render(&self) -> Value {
        let mut properties = Map::new();
        let mut required = Vec::new();
        for p in &self.parameters {
            properties.insert(
                p.name.to_string(),
                json!({"type": p.kind.json_name(), "description": p.description}),
            );
            if p.required {
                required.push(Value::String(p.name.to_string()));
            }
        }
        json!({
            "type": "function",
            "function": {
                "name": self.name,
                "description": self.description,
                "parameters": {
                    "type": "object",
                    "properties": properties,
                    "required": required,
                }
            }
        })
    }
}

/// Textual feedback plus any image keys bound into the episode memory.
/// Errors never carry images.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolResponse {
    pub text: String,
    pub images: Vec<String>,
    pub is_error: bool,
}

impl ToolResponse {
    pub fn ok(text: impl Into<String>) -> Self {
        ToolResponse { text: text.into(), images: Vec::new(), is_error: false }
    }

    pub fn with_image(text: impl Into<String>, key: impl Into<String>) -> Self {
        ToolResponse { text: text.into(), images: vec![key.into()], is_error: false }
    }

    pub fn error(text: impl Into<String>) -> Self {
        let text = text.into();
        debug_assert!(!text.is_empty(), "error responses carry a message");
        ToolResponse { text, images: Vec::new(), is_error: true }
    }
}

/// Per-episode execution context handed to tools: the episode memory, a
/// directory for produced image files, and the running observation counter.
pub struct ToolCtx<'a> {
    pub memory: &'a mut MemoryMap,
    pub scratch_dir: &'a Path,
    observations: usize,
}

impl<'a> ToolCtx<'a> {
    pub fn new(memory: &'a mut MemoryMap, scratch_dir: &'a Path) -> Self {
        Self::resume(memory, scratch_dir, 0)
    }

    /// Rebuilds the ctx mid-episode with the observation counter carried over.
    pub fn resume(memory: &'a mut MemoryMap, scratch_dir: &'a Path, observations: usize) -> Self {
        ToolCtx { memory, scratch_dir, observations }
    }

    pub fn observations(&self) -> usize {
        self.observations
    }

    /// Names the next observation; numbering runs across the whole episode.
    pub fn next_observation_name(&mut self) -> String {
        let name = format!("observation_{}", self.observations);
        self.observations += 1;
        name
    }

    pub fn fresh_image_key(&self) -> String {
        self.memory.next_key(MapKind::Imgs, "img")
    }

    pub fn scratch_path(&self, file_name: &str) -> PathBuf {
        self.scratch_dir.join(file_name)
    }
}

/// A dispatchable tool. Implementations return error responses instead of
/// failing; per-episode state lives in the ctx, never in the tool.
pub trait Tool: Send + Sync {
    fn schema(&self) -> &ToolSchema;
    fn execute(&self, args: &Map<String, Value>, ctx: &mut ToolCtx<'_>) -> ToolResponse;
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegistryError {
    #[error("tool {0:?} is already registered")]
    DuplicateTool(String),
}

/// Built once, then read-only; shared across concurrent episodes.
#[derive(Default, Clone)]
pub struct ToolRegistry {
    tools: Vec<Arc<dyn Tool>>,
    by_name: HashMap<String, usize>,
}

impl ToolRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, tool: Arc<dyn Tool>) -> Result<(), RegistryError> {
        let name = tool.schema().name.to_string();
        if self.by_name.contains_key(&name) {
            return Err(RegistryError::DuplicateTool(name));
        }
        self.by_name.insert(name, self.tools.len());
        self.tools.push(tool);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.tools.iter().map(|t| t.schema().name).collect()
    }

    /// Schemas in registration order.
    pub fn schema_manifest(&self) -> Vec<&ToolSchema> {
        self.tools.iter().map(|t| t.schema()).collect()
    }

    /// The function-declaration block embedded in the system prompt,
    /// one JSON declaration per line. Bit-stable for golden tests.
    pub fn render_manifest(&self) -> String {
        self.schema_manifest()
            .iter()
            .map(|s| serde_json::to_string(&s.render()).expect("schema renders"))
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Executes a call against the registry. All failure modes come back as
    /// error responses; on success any produced image has already been bound
    /// into `ctx.memory` under a fresh key.
    pub fn dispatch(&self, call: &ToolCall, ctx: &mut ToolCtx<'_>) -> ToolResponse {
        let Some(&idx) = self.by_name.get(call.name.as_str()) else {
            return ToolResponse::error(format!(
                "unknown tool {:?}; registered tools: [{}]",
                call.name,
                self.names().join(", ")
            ));
        };
        let tool = &self.tools[idx];
        if let Err(detail) = validate_args(tool.schema(), &call.arguments) {
            return ToolResponse::error(format!(
                "invalid arguments for {}: {detail}",
                call.name
            ));
        }
        tool.execute(&call.arguments, ctx)
    }
}

/// Schema-driven validation, applied before any tool logic runs.
fn validate_args(schema: &ToolSchema, args: &Map<String, Value>) -> Result<(), String> {
    for p in &schema.parameters {
        match args.get(p.name) {
            None if p.required => return Err(format!("missing required parameter {:?}", p.name)),
            None => {}
            Some(v) if !p.kind.matches(v) => {
                return Err(format!(
                    "parameter {:?} must be of type {}",
                    p.name,
                    p.kind.json_name()
                ))
            }
            Some(_) => {}
        }
    }
    for key in args.keys() {
        if !schema.parameters.iter().any(|p| p.name == key) {
            return Err(format!("unexpected parameter {key:?}"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct EchoTool {
        schema: ToolSchema,
    }

    impl EchoTool {
        fn new() -> Self {
            EchoTool {
                schema: ToolSchema {
                    name: "echo",
                    description: "Echoes the given text back.",
                    parameters: vec![ParamSpec::required(
                        "text",
                        ParamType::String,
                        "Text to echo.",
                    )],
                },
            }
        }
    }

    impl Tool for EchoTool {
        fn schema(&self) -> &ToolSchema {
            &self.schema
        }

        fn execute(&self, args: &Map<String, Value>, _ctx: &mut ToolCtx<'_>) -> ToolResponse {
            ToolResponse::ok(args["text"].as_str().unwrap_or_default().to_string())
        }
    }

    fn call(name: &str, args: Value) -> ToolCall {
        let Value::Object(arguments) = args else { panic!() };
        ToolCall { name: name.into(), arguments }
    }

    #[test]
    fn registry_rejects_duplicate_names() {
        let mut reg = ToolRegistry::new();
        reg.register(Arc::new(EchoTool::new())).unwrap();
        let err = reg.register(Arc::new(EchoTool::new())).unwrap_err();
        assert_eq!(err, RegistryError::DuplicateTool("echo".into()));
    }

    #[test]
    fn empty_registry_has_empty_manifest() {
        let reg = ToolRegistry::new();
        assert!(reg.schema_manifest().is_empty());
        assert_eq!(reg.render_manifest(), "");
    }

    #[test]
    fn manifest_is_stable_across_calls() {
        let mut reg = ToolRegistry::new();
        reg.register(Arc::new(EchoTool::new())).unwrap();
        assert_eq!(reg.render_manifest(), reg.render_manifest());
        assert!(reg.render_manifest().contains("\"name\":\"echo\""));
    }

    #[test]
    fn unknown_tool_becomes_error_response() {
        let mut reg = ToolRegistry::new();
        reg.register(Arc::new(EchoTool::new())).unwrap();
        let mut mem = MemoryMap::new();
        let mut ctx = ToolCtx::new(&mut mem, Path::new("/tmp"));
        let resp = reg.dispatch(&call("foo", serde_json::json!({})), &mut ctx);
        assert!(resp.is_error);
        assert_eq!(resp.text, "unknown tool \"foo\"; registered tools: [echo]");
    }

    #[test]
    fn argument_validation_runs_before_tool_logic() {
        let mut reg = ToolRegistry::new();
        reg.register(Arc::new(EchoTool::new())).unwrap();
        let mut mem = MemoryMap::new();
        let mut ctx = ToolCtx::new(&mut mem, Path::new("/tmp"));

        let missing = reg.dispatch(&call("echo", serde_json::json!({})), &mut ctx);
        assert!(missing.is_error);
        assert_eq!(missing.text, "invalid arguments for echo: missing required parameter \"text\"");

        let extra = reg.dispatch(&call("echo", serde_json::json!({"text":"x","n":1})), &mut ctx);
        assert!(extra.is_error);
        assert_eq!(extra.text, "invalid arguments for echo: unexpected parameter \"n\"");

        let ill_typed = reg.dispatch(&call("echo", serde_json::json!({"text":3})), &mut ctx);
        assert!(ill_typed.is_error);
        assert_eq!(ill_typed.text, "invalid arguments for echo: parameter \"text\" must be of type string");

        let ok = reg.dispatch(&call("echo", serde_json::json!({"text":"hi"})), &mut ctx);
        assert!(!ok.is_error);
        assert_eq!(ok.text, "hi");
    }

    #[test]
    fn observation_names_run_across_the_episode() {
        let mut mem = MemoryMap::new();
        let mut ctx = ToolCtx::new(&mut mem, Path::new("/tmp"));
        assert_eq!(ctx.next_observation_name(), "observation_0");
        assert_eq!(ctx.next_observation_name(), "observation_1");
        assert_eq!(ctx.next_observation_name(), "observation_2");
    }
}
