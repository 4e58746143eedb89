//! One-episode driver.
//!
//! Renders the system prompt (tool manifest plus the fixed reasoning
//! instructions), then alternates model turns and tool dispatch: a parsed
//! tool call is executed and its observation injected back as a user-role
//! `<tool_response>` message (text first, image parts after); an answer
//! terminates. Turn-rule breaches (extra actions, stray text, bad payloads)
//! are answered with an error observation and recorded as format violations
//! so the episode can recover, and the loop is bounded by `max_cycles`.

use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::Track;
use crate::memory::MemoryMap;
use crate::modelclient::{ChatClient, ChatMessage, ClientError, ContentPart, GenerationParams, Role};
use crate::toolkit::{ToolCtx, ToolRegistry};
use crate::trajectory::{
    assemble, parse_turn, rules, validate_format, Action, FormatVerdict, Observation, ParseError,
    ParsedTurn, Trajectory, Violation,
};

#[derive(Debug, Clone)]
pub struct EpisodeConfig {
    /// Upper bound on think-act-observe cycles (assistant turns).
    pub max_cycles: usize,
    /// After this many consecutive error observations the injected message
    /// asks the model to finalize; the same number of consecutive
    /// unparseable turns aborts the episode as a format failure.
    pub max_consecutive_errors: usize,
    pub params: GenerationParams,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            max_cycles: 8,
            max_consecutive_errors: 3,
            params: GenerationParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Answered,
    MaxCyclesExceeded,
    FormatFailure,
}

/// One transcript line: what was exchanged, with images by memory key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub turn: usize,
    pub role: Role,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub images: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct EpisodeResult {
    pub trajectory: Trajectory,
    pub termination: Termination,
    /// Structural verdict merged with turn-level violations; this is what
    /// the format reward sees.
    pub format: FormatVerdict,
    pub transcript: Vec<TranscriptRecord>,
    pub cycles: usize,
    pub duration: Duration,
}

impl EpisodeResult {
    pub fn answered(&self) -> bool {
        self.termination == Termination::Answered
    }
}

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error("episode aborted: {0}")]
    Client(#[from] ClientError),
}

/// Task-side inputs to an episode. Image keys refer to entries the caller
/// has already seeded into the episode memory.
#[derive(Debug, Clone)]
pub struct EpisodeSetup {
    pub system_prompt: String,
    pub user_text: String,
    pub user_image_keys: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PromptError {
    #[error("document track requires a doc_id")]
    MissingDocId,
}

/// The fixed reasoning-and-format instructions appended to every system
/// prompt.
const FIXED_COT_RULES: &str = "You must output your reasoning inside <think>...</think>. After \
reasoning, either output the final answer within <answer>...</answer> or call a tool within \
<tool_call>...</tool_call>. You may call tools multiple times across turns to assist with \
judgment or verification, but only one tool per turn. If a tool call fails, you may retry or \
stop and give your final answer. Once no more tool calls are needed, provide your final answer \
or judgment within <answer>...</answer>.";

const FINALIZE_HINT: &str = "Please stop calling tools now and provide your final answer or \
judgment within <answer>...</answer>.";

/// Renders the deterministic system prompt for a track: tool declarations
/// first, then the track preamble and the fixed reasoning rules.
pub fn render_system_prompt(
    track: Track,
    doc_id: Option<&str>,
    registry: &ToolRegistry,
) -> Result<String, PromptError> {
    let preamble = match track {
        Track::Fg => "The given image is `original_image`.".to_string(),
        Track::Doc => {
            let doc_id = doc_id.ok_or(PromptError::MissingDocId)?;
            format!(
                "The given document is named `{doc_id}`. The page indices in the combined image \
                 start from 1 at the top-left corner and increase horizontally from left to \
                 right, then continue to the next row from top to bottom."
            )
        }
        Track::If => "The candidate response text is stored as `text_0`.".to_string(),
    };
    let mut out = String::from(
        "You are a meticulous judge. Gather evidence with the available tools before deciding.\n\n# Tools\n\nYou may invoke one tool per turn by emitting a JSON object with fields \"name\" and \"arguments\" inside <tool_call></tool_call> tags. Available tools:\n<tools>\n",
    );
    out.push_str(&registry.render_manifest());
    out.push_str("\n</tools>\n\n# Important Requirement\n\n");
    out.push_str(&preamble);
    out.push_str("\n\n");
    out.push_str(FIXED_COT_RULES);
    Ok(out)
}

fn violation_rule(err: &ParseError) -> &'static str {
    match err {
        ParseError::MultipleActions => rules::MULTIPLE_ACTIONS,
        ParseError::StrayText(_) => rules::STRAY_TEXT,
        _ => rules::BAD_TURN,
    }
}

fn format_error_text(err: &ParseError) -> String {
    match err {
        ParseError::MultipleActions => "Format error: only one tool per turn. Each turn must \
             contain exactly one <tool_call> or one <answer>. Please retry with a single action."
            .to_string(),
        other => format!(
            "Format error: {other}. Every turn must contain your reasoning in \
             <think></think> followed by exactly one <tool_call></tool_call> or \
             <answer></answer>."
        ),
    }
}

/// Wraps observation text for injection; the wrapped form is what both the
/// model and the transcript see. Image parts ride after the text.
fn observation_message(
    memory: &MemoryMap,
    text: &str,
    image_keys: &[String],
) -> (ChatMessage, String, Vec<String>) {
    let wrapped = format!("<tool_response>\n{text}\n</tool_response>");
    let mut content = vec![ContentPart::Text { text: wrapped.clone() }];
    let mut attached = Vec::new();
    for key in image_keys {
        if let Ok(artifact) = memory.resolve_image(key) {
            content.push(ContentPart::Image { path: artifact.path.clone() });
            attached.push(key.clone());
        }
    }
    (ChatMessage { role: Role::User, content }, wrapped, attached)
}

/// Drives one episode to completion. The memory must be pre-seeded with the
/// task's texts and images; the scratch dir receives tool-produced files.
pub fn run_episode(
    setup: &EpisodeSetup,
    client: &dyn ChatClient,
    registry: &ToolRegistry,
    memory: &mut MemoryMap,
    scratch_dir: &Path,
    config: &EpisodeConfig,
) -> Result<EpisodeResult, EpisodeError> {
    let started = Instant::now();
    let mut transcript = Vec::new();
    let mut messages = vec![ChatMessage::system(setup.system_prompt.clone())];
    transcript.push(TranscriptRecord {
        turn: 0,
        role: Role::System,
        text: setup.system_prompt.clone(),
        images: Vec::new(),
    });

    let mut user_content = vec![ContentPart::Text { text: setup.user_text.clone() }];
    for key in &setup.user_image_keys {
        if let Ok(artifact) = memory.resolve_image(key) {
            user_content.push(ContentPart::Image { path: artifact.path.clone() });
        }
    }
    messages.push(ChatMessage { role: Role::User, content: user_content });
    transcript.push(TranscriptRecord {
        turn: 0,
        role: Role::User,
        text: setup.user_text.clone(),
        images: setup.user_image_keys.clone(),
    });

    let mut turns: Vec<(ParsedTurn, Option<Observation>)> = Vec::new();
    let mut violations: Vec<Violation> = Vec::new();
    let mut observation_count = 0usize;
    let mut error_streak = 0usize;
    let mut format_streak = 0usize;
    let mut cycles = 0usize;
    let mut termination = Termination::MaxCyclesExceeded;

    while cycles < config.max_cycles {
        let raw = client.complete(&messages, &config.params)?;
        cycles += 1;
        messages.push(ChatMessage::assistant(raw.clone()));
        transcript.push(TranscriptRecord {
            turn: cycles,
            role: Role::Assistant,
            text: raw.clone(),
            images: Vec::new(),
        });

        match parse_turn(&raw) {
            Err(err) => {
                violations.push(Violation::new(cycles - 1, violation_rule(&err), err.to_string()));
                format_streak += 1;
                error_streak += 1;
                if format_streak > config.max_consecutive_errors {
                    termination = Termination::FormatFailure;
                    break;
                }
                let mut text = format_error_text(&err);
                if error_streak >= config.max_consecutive_errors {
                    text.push(' ');
                    text.push_str(FINALIZE_HINT);
                }
                let (msg, wrapped, _) = observation_message(memory, &text, &[]);
                messages.push(msg);
                transcript.push(TranscriptRecord {
                    turn: cycles,
                    role: Role::User,
                    text: wrapped,
                    images: Vec::new(),
                });
            }
            Ok(turn) => {
                format_streak = 0;
                match &turn.action {
                    Action::Answer { .. } => {
                        turns.push((turn, None));
                        termination = Termination::Answered;
                        break;
                    }
                    Action::ToolCall(call) => {
                        let mut ctx = ToolCtx::resume(memory, scratch_dir, observation_count);
                        let response = registry.dispatch(call, &mut ctx);
                        observation_count = ctx.observations();
                        if response.is_error {
                            error_streak += 1;
                        } else {
                            error_streak = 0;
                        }
                        let mut text = response.text.clone();
                        if error_streak >= config.max_consecutive_errors {
                            text.push(' ');
                            text.push_str(FINALIZE_HINT);
                        }
                        let (msg, wrapped, attached) =
                            observation_message(memory, &text, &response.images);
                        messages.push(msg);
                        transcript.push(TranscriptRecord {
                            turn: cycles,
                            role: Role::User,
                            text: wrapped,
                            images: attached,
                        });
                        let observation = Observation {
                            text: response.text,
                            images: response.images,
                            is_error: response.is_error,
                        };
                        turns.push((turn, Some(observation)));
                    }
                }
            }
        }
    }

    let trajectory = assemble(turns).expect("loop only pairs observations with tool calls");
    let mut format = FormatVerdict { violations };
    format = format.merge(validate_format(&trajectory));
    Ok(EpisodeResult {
        trajectory,
        termination,
        format,
        transcript,
        cycles,
        duration: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifcheck;
    use crate::modelclient::ScriptedClient;
    use crate::trajectory::TAG_TOOL_RESPONSE;

    fn registry() -> ToolRegistry {
        let mut reg = ToolRegistry::new();
        ifcheck::register_all(&mut reg).unwrap();
        reg
    }

    fn setup() -> EpisodeSetup {
        EpisodeSetup {
            system_prompt: render_system_prompt(Track::If, None, &registry()).unwrap(),
            user_text: "judge text_0".into(),
            user_image_keys: vec![],
        }
    }

    fn run(script: &[&str]) -> EpisodeResult {
        let client = ScriptedClient::from_strs(script);
        let reg = registry();
        let mut memory = MemoryMap::new();
        memory.bind_text("text_0", "one two three four five").unwrap();
        let scratch = tempfile::tempdir().unwrap();
        run_episode(&setup(), &client, &reg, &mut memory, scratch.path(), &EpisodeConfig::default())
            .unwrap()
    }

    #[test]
    fn immediate_answer_terminates_in_one_cycle() {
        let result = run(&["<think>easy</think><answer>Overall Judgment: True</answer>"]);
        assert_eq!(result.termination, Termination::Answered);
        assert_eq!(result.trajectory.len(), 1);
        assert_eq!(result.trajectory.tool_calls(), 0);
        assert!(result.format.valid());
    }

    #[test]
    fn tool_call_injects_an_observation_then_answer_terminates() {
        let result = run(&[
            "<think>check words</think><tool_call>{\"name\":\"word_count_in_range\",\"arguments\":{\"text\":\"text_0\",\"min\":3,\"max\":6}}</tool_call>",
            "<think>ok</think><answer>Overall Judgment: True</answer>",
        ]);
        assert_eq!(result.termination, Termination::Answered);
        assert_eq!(result.trajectory.len(), 2);
        assert_eq!(result.trajectory.tool_calls(), 1);
        assert_eq!(result.trajectory.succ_tool_calls(), 1);
        let obs = result.trajectory.steps[0].observation.as_ref().unwrap();
        assert_eq!(obs.text, "Check result: True");
        // The injected user message wraps the text in tool_response tags.
        let injected = &result.transcript[3];
        assert_eq!(injected.role, Role::User);
        assert!(injected.text.starts_with(&format!("<{TAG_TOOL_RESPONSE}>")));
        assert!(result.format.valid());
    }

    #[test]
    fn two_actions_in_a_turn_get_an_error_observation_and_continue() {
        let result = run(&[
            "<think>greedy</think><tool_call>{\"name\":\"a\",\"arguments\":{}}</tool_call><tool_call>{\"name\":\"b\",\"arguments\":{}}</tool_call>",
            "<think>fine</think><answer>Overall Judgment: True</answer>",
        ]);
        assert_eq!(result.termination, Termination::Answered);
        assert!(!result.format.valid());
        assert_eq!(result.format.violations[0].rule, rules::MULTIPLE_ACTIONS);
        let err_msg = &result.transcript[3];
        assert!(err_msg.text.contains("only one tool per turn"), "{}", err_msg.text);
        // The unparseable turn contributed no trajectory step.
        assert_eq!(result.trajectory.len(), 1);
    }

    #[test]
    fn unknown_tools_error_but_the_episode_continues() {
        let result = run(&[
            "<think>try</think><tool_call>{\"name\":\"foo\",\"arguments\":{}}</tool_call>",
            "<think>stop</think><answer>Overall Judgment: False</answer>",
        ]);
        assert_eq!(result.termination, Termination::Answered);
        assert_eq!(result.trajectory.succ_tool_calls(), 0);
        assert_eq!(result.trajectory.tool_calls(), 1);
        assert!(result.format.valid());
    }

    #[test]
    fn cycle_budget_bounds_the_loop() {
        let call =
            "<think>again</think><tool_call>{\"name\":\"no_arabic_number\",\"arguments\":{\"text\":\"text_0\"}}</tool_call>";
        let script: Vec<&str> = std::iter::repeat(call).take(20).collect();
        let result = run(&script);
        assert_eq!(result.termination, Termination::MaxCyclesExceeded);
        assert_eq!(result.cycles, EpisodeConfig::default().max_cycles);
        assert!(!result.format.valid()); // no terminal answer
    }

    #[test]
    fn repeated_unparseable_turns_abort_as_format_failure() {
        let script: Vec<&str> = std::iter::repeat("no tags at all").take(8).collect();
        let result = run(&script);
        assert_eq!(result.termination, Termination::FormatFailure);
        assert_eq!(result.cycles, EpisodeConfig::default().max_consecutive_errors + 1);
    }

    #[test]
    fn consecutive_tool_errors_append_the_finalize_hint() {
        let bad = "<think>x</think><tool_call>{\"name\":\"foo\",\"arguments\":{}}</tool_call>";
        let result = run(&[
            bad,
            bad,
            bad,
            "<think>ok</think><answer>Overall Judgment: True</answer>",
        ]);
        assert_eq!(result.termination, Termination::Answered);
        let hint_count = result
            .transcript
            .iter()
            .filter(|r| r.role == Role::User && r.text.contains("stop calling tools"))
            .count();
        assert_eq!(hint_count, 1);
    }

    #[test]
    fn system_prompts_are_deterministic_and_track_specific() {
        let reg = registry();
        let image = render_system_prompt(Track::Fg, None, &reg).unwrap();
        assert!(image.contains("The given image is `original_image`"));
        let doc = render_system_prompt(Track::Doc, Some("report"), &reg).unwrap();
        assert!(doc.contains("`report`"));
        assert!(doc.contains("start from 1"));
        assert_eq!(doc, render_system_prompt(Track::Doc, Some("report"), &reg).unwrap());
        assert_eq!(
            render_system_prompt(Track::Doc, None, &reg).unwrap_err(),
            PromptError::MissingDocId
        );
        assert!(image.contains("only one tool per turn"));
        assert!(image.contains("\"name\":\"word_count_in_range\""));
    }

    #[test]
    fn scripted_episodes_are_reproducible() {
        let script = &[
            "<think>check words</think><tool_call>{\"name\":\"word_count_in_range\",\"arguments\":{\"text\":\"text_0\",\"min\":3,\"max\":6}}</tool_call>",
            "<think>ok</think><answer>Overall Judgment: True</answer>",
        ];
        let a = run(script);
        let b = run(script);
        assert_eq!(a.trajectory, b.trajectory);
        assert_eq!(a.transcript, b.transcript);
        assert_eq!(a.format, b.format);
    }
}
