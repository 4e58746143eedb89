//! The tagged trajectory grammar.
//!
//! Model turns are flat sequences of tag blocks: `<think>`, `<tool_call>`,
//! `<answer>`, with environment observations injected as `<tool_response>`.
//! This module parses raw model output into structured steps, serializes
//! trajectories back to the canonical text form, and validates the structure
//! for the format reward.
//!
//! Grammar rules:
//! - whitespace between tags is ignored, content inside tags is preserved
//!   byte-exact
//! - non-whitespace text outside any recognized tag is rejected (`stray-text`)
//! - the grammar is flat: a recognized opener inside another block is an error
//! - a turn carries exactly one `<think>` and exactly one action
//!   (`<tool_call>` or `<answer>`)
//! - `<tool_call>` bodies are JSON objects with fields `name` and `arguments`

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

/// Tag names are the wire format between model and harness; bit-exact.
pub const TAG_THINK: &str = "think";
pub const TAG_TOOL_CALL: &str = "tool_call";
pub const TAG_TOOL_RESPONSE: &str = "tool_response";
pub const TAG_ANSWER: &str = "answer";

const TAGS: [&str; 4] = [TAG_THINK, TAG_TOOL_CALL, TAG_TOOL_RESPONSE, TAG_ANSWER];

/// A structured tool invocation decoded from a `<tool_call>` body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub name: String,
    #[serde(default)]
    pub arguments: Map<String, Value>,
}

/// What a tool returned: feedback text, keys of any images bound into the
/// episode memory, and whether the call failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub text: String,
    #[serde(default)]
    pub images: Vec<String>,
    #[serde(default)]
    pub is_error: bool,
}

impl Observation {
    pub fn text(text: impl Into<String>) -> Self {
        Observation { text: text.into(), images: Vec::new(), is_error: false }
    }

    pub fn error(text: impl Into<String>) -> Self {
        Observation { text: text.into(), images: Vec::new(), is_error: true }
    }
}

/// The action half of a cycle: invoke a tool or terminate with an answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    ToolCall(ToolCall),
    Answer { payload: String },
}

impl Action {
    pub fn answer(payload: impl Into<String>) -> Self {
        Action::Answer { payload: payload.into() }
    }

    pub fn is_answer(&self) -> bool {
        matches!(self, Action::Answer { .. })
    }
}

/// One think–act–observe cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub thought: String,
    pub action: Action,
    pub observation: Option<Observation>,
}

/// An ordered record of cycles, terminated by an answer when complete.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<Step>,
}

impl Trajectory {
    /// Trajectory length L: the number of cycles.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The terminal answer, if the last step carries one.
    pub fn final_answer(&self) -> Option<&str> {
        match self.steps.last()?.action {
            Action::Answer { ref payload } => Some(payload),
            Action::ToolCall(_) => None,
        }
    }

    /// Steps whose action is a tool call.
    pub fn tool_calls(&self) -> usize {
        self.steps.iter().filter(|s| !s.action.is_answer()).count()
    }

    /// Tool calls whose dispatch returned a non-error observation.
    pub fn succ_tool_calls(&self) -> usize {
        self.steps
            .iter()
            .filter_map(|s| s.observation.as_ref())
            .filter(|o| !o.is_error)
            .count()
    }
}

/// One parsed assistant turn: the thought plus exactly one action.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTurn {
    pub thought: String,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("no <think> block in turn")]
    MissingThink,
    #[error("no <tool_call> or <answer> action in turn")]
    MissingAction,
    #[error("more than one <think> block in turn")]
    MultipleThinks,
    #[error("more than one action in turn; only one tool call or answer per turn")]
    MultipleActions,
    #[error("tag <{0}> is never closed")]
    UnclosedTag(String),
    #[error("tag <{inner}> is nested inside <{outer}>; the grammar is flat")]
    NestedTag { outer: String, inner: String },
    #[error("unexpected <{0}> block in an assistant turn")]
    UnexpectedTag(String),
    #[error("text outside of recognized tags: {0:?}")]
    StrayText(String),
    #[error("tool_call body is not a {{\"name\", \"arguments\"}} object: {0}")]
    MalformedToolPayload(String),
    #[error("tool_response body does not decode as an observation: {0}")]
    MalformedObservation(String),
    #[error("observation at block {0} has no preceding tool call")]
    DanglingObservation(usize),
    #[error("thought at block {0} is not followed by an action")]
    ThoughtWithoutAction(usize),
    #[error("action at block {0} has no preceding thought")]
    ActionWithoutThought(usize),
}

/// One violated format rule: (step or cycle position, rule id, message).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub position: usize,
    pub rule: String,
    pub message: String,
}

impl Violation {
    pub fn new(position: usize, rule: &str, message: impl Into<String>) -> Self {
        Violation { position, rule: rule.to_string(), message: message.into() }
    }
}

/// Outcome of format validation; valid iff no rule was violated.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FormatVerdict {
    pub violations: Vec<Violation>,
}

impl FormatVerdict {
    pub fn valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(mut self, other: FormatVerdict) -> FormatVerdict {
        self.violations.extend(other.violations);
        self
    }
}

#[derive(Debug)]
struct Block<'a> {
    tag: &'static str,
    content: &'a str,
}

/// Splits raw text into tag blocks, rejecting stray text, unclosed openers,
/// and nested recognized tags. Total: never panics on arbitrary input.
fn scan_blocks(raw: &str) -> Result<Vec<Block<'_>>, ParseError> {
    let mut blocks = Vec::new();
    let mut rest = raw;
    loop {
        rest = rest.trim_start();
        if rest.is_empty() {
            return Ok(blocks);
        }
        let Some(tag) = TAGS.iter().find(|t| rest.starts_with(&format!("<{t}>"))) else {
            // Not at a recognized opener: everything up to the next opener is stray.
            let end = next_opener(rest, 1).unwrap_or(rest.len());
            let stray = rest[..end].trim();
            return Err(ParseError::StrayText(excerpt(stray)));
        };
        let open_len = tag.len() + 2;
        let body = &rest[open_len..];
        let closer = format!("</{tag}>");
        let Some(close_at) = body.find(&closer) else {
            return Err(ParseError::UnclosedTag(tag.to_string()));
        };
        let content = &body[..close_at];
        if let Some(inner_at) = next_opener(content, 0) {
            let inner = TAGS
                .iter()
                .find(|t| content[inner_at..].starts_with(&format!("<{t}>")))
                .expect("next_opener only stops at recognized openers");
            return Err(ParseError::NestedTag {
                outer: tag.to_string(),
                inner: inner.to_string(),
            });
        }
        blocks.push(Block { tag, content });
        let consumed = open_len + close_at + closer.len();
        rest = &rest[consumed..];
    }
}

/// Byte offset of the first recognized opener at or after `from`, if any.
fn next_opener(s: &str, from: usize) -> Option<usize> {
    if from > s.len() {
        return None;
    }
    let mut best: Option<usize> = None;
    for tag in TAGS {
        let pat = format!("<{tag}>");
        if let Some(i) = s[from..].find(&pat) {
            let at = from + i;
            best = Some(best.map_or(at, |b: usize| b.min(at)));
        }
    }
    best
}

fn excerpt(s: &str) -> String {
    const MAX: usize = 80;
    if s.len() <= MAX {
        return s.to_string();
    }
    let mut end = MAX;
    while !s.is_char_boundary(end) {
        end -= 1;
    }
    format!("{}…", &s[..end])
}

fn decode_tool_call(body: &str) -> Result<ToolCall, ParseError> {
    let value: Value = serde_json::from_str(body)
        .map_err(|e| ParseError::MalformedToolPayload(e.to_string()))?;
    let Value::Object(obj) = value else {
        return Err(ParseError::MalformedToolPayload("body is not a JSON object".into()));
    };
    let mut name = None;
    let mut arguments = Map::new();
    for (key, val) in obj {
        match key.as_str() {
            "name" => match val {
                Value::String(s) if !s.is_empty() => name = Some(s),
                Value::String(_) => {
                    return Err(ParseError::MalformedToolPayload("\"name\" is empty".into()))
                }
                _ => {
                    return Err(ParseError::MalformedToolPayload(
                        "\"name\" is not a string".into(),
                    ))
                }
            },
            "arguments" => match val {
                Value::Object(map) => arguments = map,
                _ => {
                    return Err(ParseError::MalformedToolPayload(
                        "\"arguments\" is not an object".into(),
                    ))
                }
            },
            other => {
                return Err(ParseError::MalformedToolPayload(format!(
                    "unexpected field {other:?}"
                )))
            }
        }
    }
    let name = name.ok_or_else(|| ParseError::MalformedToolPayload("missing \"name\"".into()))?;
    Ok(ToolCall { name, arguments })
}

/// Parses one assistant turn into its thought and single action.
pub fn parse_turn(raw: &str) -> Result<ParsedTurn, ParseError> {
    let blocks = scan_blocks(raw)?;
    let mut thought: Option<&str> = None;
    let mut action: Option<Action> = None;
    for block in &blocks {
        match block.tag {
            TAG_THINK => {
                if thought.is_some() {
                    return Err(ParseError::MultipleThinks);
                }
                thought = Some(block.content);
            }
            TAG_TOOL_CALL => {
                if action.is_some() {
                    return Err(ParseError::MultipleActions);
                }
                action = Some(Action::ToolCall(decode_tool_call(block.content)?));
            }
            TAG_ANSWER => {
                if action.is_some() {
                    return Err(ParseError::MultipleActions);
                }
                action = Some(Action::answer(block.content));
            }
            other => return Err(ParseError::UnexpectedTag(other.to_string())),
        }
    }
    let thought = thought.ok_or(ParseError::MissingThink)?;
    let action = action.ok_or(ParseError::MissingAction)?;
    Ok(ParsedTurn { thought: thought.to_string(), action })
}

/// Assembles parsed turns and their injected observations into a trajectory.
pub fn assemble(
    turns: Vec<(ParsedTurn, Option<Observation>)>,
) -> Result<Trajectory, ParseError> {
    let mut steps = Vec::with_capacity(turns.len());
    for (i, (turn, observation)) in turns.into_iter().enumerate() {
        if observation.is_some() && turn.action.is_answer() {
            return Err(ParseError::DanglingObservation(i));
        }
        steps.push(Step { thought: turn.thought, action: turn.action, observation });
    }
    Ok(Trajectory { steps })
}

/// Parses a full serialized trajectory (the harness record format, where
/// `<tool_response>` bodies are observation JSON).
pub fn parse_trajectory(text: &str) -> Result<Trajectory, ParseError> {
    let blocks = scan_blocks(text)?;
    let mut steps: Vec<Step> = Vec::new();
    let mut pending_thought: Option<(usize, String)> = None;
    // Whether the last pushed step may still accept an observation.
    let mut open_call = false;
    for (i, block) in blocks.iter().enumerate() {
        match block.tag {
            TAG_THINK => {
                if let Some((at, _)) = pending_thought {
                    return Err(ParseError::ThoughtWithoutAction(at));
                }
                pending_thought = Some((i, block.content.to_string()));
                open_call = false;
            }
            TAG_TOOL_CALL | TAG_ANSWER => {
                let Some((_, thought)) = pending_thought.take() else {
                    return Err(ParseError::ActionWithoutThought(i));
                };
                let action = if block.tag == TAG_TOOL_CALL {
                    Action::ToolCall(decode_tool_call(block.content)?)
                } else {
                    Action::answer(block.content)
                };
                open_call = !action.is_answer();
                steps.push(Step { thought, action, observation: None });
            }
            TAG_TOOL_RESPONSE => {
                if !open_call || pending_thought.is_some() {
                    return Err(ParseError::DanglingObservation(i));
                }
                let obs: Observation = serde_json::from_str(block.content)
                    .map_err(|e| ParseError::MalformedObservation(e.to_string()))?;
                steps
                    .last_mut()
                    .expect("open_call implies a prior step")
                    .observation = Some(obs);
                open_call = false;
            }
            _ => unreachable!("scan_blocks only yields recognized tags"),
        }
    }
    if let Some((at, _)) = pending_thought {
        return Err(ParseError::ThoughtWithoutAction(at));
    }
    Ok(Trajectory { steps })
}

/// Serializes a trajectory to the canonical tag text. Re-parses to an equal
/// trajectory provided thought/answer/observation texts do not themselves
/// contain the reserved tag markers.
pub fn serialize(traj: &Trajectory) -> String {
    let mut out = Vec::new();
    for step in &traj.steps {
        out.push(format!("<{TAG_THINK}>{}</{TAG_THINK}>", step.thought));
        match &step.action {
            Action::ToolCall(call) => {
                let body = serde_json::to_string(call).expect("tool call serializes");
                out.push(format!("<{TAG_TOOL_CALL}>{body}</{TAG_TOOL_CALL}>"));
            }
            Action::Answer { payload } => {
                out.push(format!("<{TAG_ANSWER}>{payload}</{TAG_ANSWER}>"));
            }
        }
        if let Some(obs) = &step.observation {
            let body = serde_json::to_string(obs).expect("observation serializes");
            out.push(format!("<{TAG_TOOL_RESPONSE}>{body}</{TAG_TOOL_RESPONSE}>"));
        }
    }
    out.join("\n")
}

/// Rule ids emitted by [`validate_format`].
pub mod rules {
    pub const EMPTY_TRAJECTORY: &str = "empty-trajectory";
    pub const NO_TERMINAL_ANSWER: &str = "no-terminal-answer";
    pub const ANSWER_NOT_LAST: &str = "answer-not-last";
    pub const MISSING_OBSERVATION: &str = "missing-observation";
    pub const OBSERVATION_ON_ANSWER: &str = "observation-on-answer";
    /// Turn-level rules recorded by the episode driver.
    pub const STRAY_TEXT: &str = "stray-text";
    pub const BAD_TURN: &str = "bad-turn";
    pub const MULTIPLE_ACTIONS: &str = "multiple-actions";
}

/// Checks the structural rules of an assembled trajectory. Violations are
/// data, not failures; the verdict is deterministic.
pub fn validate_format(traj: &Trajectory) -> FormatVerdict {
    let mut violations = Vec::new();
    if traj.steps.is_empty() {
        violations.push(Violation::new(
            0,
            rules::EMPTY_TRAJECTORY,
            "trajectory has no steps",
        ));
        return FormatVerdict { violations };
    }
    let last = traj.steps.len() - 1;
    for (i, step) in traj.steps.iter().enumerate() {
        match &step.action {
            Action::Answer { .. } => {
                if i != last {
                    violations.push(Violation::new(
                        i,
                        rules::ANSWER_NOT_LAST,
                        format!("answer at step {i} precedes later steps"),
                    ));
                }
                if step.observation.is_some() {
                    violations.push(Violation::new(
                        i,
                        rules::OBSERVATION_ON_ANSWER,
                        format!("answer step {i} carries an observation"),
                    ));
                }
            }
            Action::ToolCall(_) => {
                if step.observation.is_none() {
                    violations.push(Violation::new(
                        i,
                        rules::MISSING_OBSERVATION,
                        format!("tool call at step {i} was never answered"),
                    ));
                }
            }
        }
    }
    if !traj.steps[last].action.is_answer() {
        violations.push(Violation::new(
            last,
            rules::NO_TERMINAL_ANSWER,
            "last step does not provide an answer",
        ));
    }
    FormatVerdict { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn call(name: &str, args: Value) -> ToolCall {
        let Value::Object(arguments) = args else { panic!("args must be an object") };
        ToolCall { name: name.to_string(), arguments }
    }

    #[test]
    fn parses_smallest_valid_turn() {
        let turn = parse_turn("<think>x</think><answer>Done</answer>").unwrap();
        assert_eq!(turn.thought, "x");
        assert_eq!(turn.action, Action::answer("Done"));
    }

    #[test]
    fn parses_tool_call_turn() {
        let raw = r#"<think>a</think><tool_call>{"name":"image_crop_and_zoom_in","arguments":{"image":"original_image","bbox_2d":[100,200,600,700]}}</tool_call>"#;
        let turn = parse_turn(raw).unwrap();
        assert_eq!(turn.thought, "a");
        assert_eq!(
            turn.action,
            Action::ToolCall(call(
                "image_crop_and_zoom_in",
                json!({"image": "original_image", "bbox_2d": [100, 200, 600, 700]})
            ))
        );
    }

    #[test]
    fn rejects_unclosed_tag() {
        let err = parse_turn("<think>a").unwrap_err();
        assert_eq!(err, ParseError::UnclosedTag("think".into()));
    }

    #[test]
    fn rejects_two_actions_in_one_turn() {
        let raw = "<think>t</think><tool_call>{\"name\":\"a\",\"arguments\":{}}</tool_call><tool_call>{\"name\":\"b\",\"arguments\":{}}</tool_call>";
        assert_eq!(parse_turn(raw).unwrap_err(), ParseError::MultipleActions);
        let mixed = "<think>t</think><answer>x</answer><tool_call>{\"name\":\"a\",\"arguments\":{}}</tool_call>";
        assert_eq!(parse_turn(mixed).unwrap_err(), ParseError::MultipleActions);
    }

    #[test]
    fn rejects_stray_text_between_tags() {
        let err = parse_turn("<think>a</think>oops<answer>x</answer>").unwrap_err();
        assert_eq!(err, ParseError::StrayText("oops".into()));
    }

    #[test]
    fn whitespace_between_tags_is_ignored() {
        let turn = parse_turn("  <think>a</think>\n\n  <answer>x</answer>\n").unwrap();
        assert_eq!(turn.thought, "a");
    }

    #[test]
    fn content_is_preserved_byte_exact() {
        let turn = parse_turn("<think>  a\nb </think><answer> x </answer>").unwrap();
        assert_eq!(turn.thought, "  a\nb ");
        assert_eq!(turn.action, Action::answer(" x "));
    }

    #[test]
    fn rejects_nested_tags() {
        let err = parse_turn("<think>a<answer>x</answer></think>").unwrap_err();
        assert_eq!(err, ParseError::NestedTag { outer: "think".into(), inner: "answer".into() });
    }

    #[test]
    fn rejects_malformed_payloads() {
        for body in [
            "not json",
            "[1,2]",
            r#"{"arguments":{}}"#,
            r#"{"name":"","arguments":{}}"#,
            r#"{"name":"t","arguments":[]}"#,
            r#"{"name":"t","arguments":{},"extra":1}"#,
        ] {
            let raw = format!("<think>a</think><tool_call>{body}</tool_call>");
            assert!(
                matches!(parse_turn(&raw), Err(ParseError::MalformedToolPayload(_))),
                "accepted {body}"
            );
        }
    }

    #[test]
    fn rejects_missing_think_and_missing_action() {
        assert_eq!(parse_turn("<answer>x</answer>").unwrap_err(), ParseError::MissingThink);
        assert_eq!(parse_turn("<think>a</think>").unwrap_err(), ParseError::MissingAction);
        assert_eq!(parse_turn("").unwrap_err(), ParseError::MissingThink);
    }

    #[test]
    fn rejects_tool_response_in_assistant_turn() {
        let raw = "<think>a</think><tool_response>r</tool_response><answer>x</answer>";
        assert_eq!(parse_turn(raw).unwrap_err(), ParseError::UnexpectedTag("tool_response".into()));
    }

    fn answer_turn(thought: &str, payload: &str) -> ParsedTurn {
        ParsedTurn { thought: thought.into(), action: Action::answer(payload) }
    }

    fn tool_turn(thought: &str, name: &str) -> ParsedTurn {
        ParsedTurn { thought: thought.into(), action: Action::ToolCall(call(name, json!({}))) }
    }

    #[test]
    fn assembles_single_cycle() {
        let traj = assemble(vec![(answer_turn("t", "a"), None)]).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.tool_calls(), 0);
        assert_eq!(traj.final_answer(), Some("a"));
    }

    #[test]
    fn assembles_two_cycles_with_observation() {
        let traj = assemble(vec![
            (tool_turn("look", "word_count_in_range"), Some(Observation::text("Check result: True"))),
            (answer_turn("done", "Overall Judgment: True"), None),
        ])
        .unwrap();
        assert_eq!(traj.len(), 2);
        assert_eq!(traj.tool_calls(), 1);
        assert!(validate_format(&traj).valid());
    }

    #[test]
    fn rejects_observation_on_answer_turn() {
        let err =
            assemble(vec![(answer_turn("t", "a"), Some(Observation::text("r")))]).unwrap_err();
        assert_eq!(err, ParseError::DanglingObservation(0));
    }

    #[test]
    fn validate_flags_missing_terminal_answer() {
        let traj = assemble(vec![(
            tool_turn("t", "x"),
            Some(Observation::text("ok")),
        )])
        .unwrap();
        let verdict = validate_format(&traj);
        assert!(!verdict.valid());
        assert!(verdict.violations.iter().any(|v| v.rule == rules::NO_TERMINAL_ANSWER));
    }

    #[test]
    fn validate_flags_mid_sequence_answer() {
        // Mutate a valid two-cycle fixture: swap the steps.
        let mut traj = assemble(vec![
            (tool_turn("look", "x"), Some(Observation::text("ok"))),
            (answer_turn("done", "a"), None),
        ])
        .unwrap();
        traj.steps.swap(0, 1);
        let verdict = validate_format(&traj);
        let rules_hit: Vec<&str> = verdict.violations.iter().map(|v| v.rule.as_str()).collect();
        assert!(rules_hit.contains(&rules::ANSWER_NOT_LAST));
        assert!(rules_hit.contains(&rules::NO_TERMINAL_ANSWER));
    }

    #[test]
    fn serialize_single_cycle_is_inverse_of_parse() {
        let traj = assemble(vec![(answer_turn("x", "Done"), None)]).unwrap();
        assert_eq!(serialize(&traj), "<think>x</think>\n<answer>Done</answer>");
        assert_eq!(parse_trajectory(&serialize(&traj)).unwrap(), traj);
    }

    #[test]
    fn serialize_two_cycle_golden() {
        let traj = assemble(vec![
            (
                ParsedTurn {
                    thought: "inspect".into(),
                    action: Action::ToolCall(call(
                        "image_crop_and_zoom_in",
                        json!({"image":"original_image","bbox_2d":[100,200,600,700]}),
                    )),
                },
                Some(Observation {
                    text: "cropped".into(),
                    images: vec!["img_1".into()],
                    is_error: false,
                }),
            ),
            (answer_turn("done", "Overall Judgment: True"), None),
        ])
        .unwrap();
        let golden = "<think>inspect</think>\n\
             <tool_call>{\"name\":\"image_crop_and_zoom_in\",\"arguments\":{\"image\":\"original_image\",\"bbox_2d\":[100,200,600,700]}}</tool_call>\n\
             <tool_response>{\"text\":\"cropped\",\"images\":[\"img_1\"],\"is_error\":false}</tool_response>\n\
             <think>done</think>\n\
             <answer>Overall Judgment: True</answer>";
        assert_eq!(serialize(&traj), golden);
        assert_eq!(parse_trajectory(golden).unwrap(), traj);
    }

    #[test]
    fn parse_trajectory_rejects_dangling_observation() {
        let text = "<tool_response>{\"text\":\"r\"}</tool_response>";
        assert_eq!(parse_trajectory(text).unwrap_err(), ParseError::DanglingObservation(0));
        let after_answer = "<think>t</think>\n<answer>a</answer>\n<tool_response>{\"text\":\"r\"}</tool_response>";
        assert_eq!(
            parse_trajectory(after_answer).unwrap_err(),
            ParseError::DanglingObservation(2)
        );
    }

    #[test]
    fn parse_is_deterministic() {
        let raw = "<think>a</think><answer>b</answer>";
        assert_eq!(parse_turn(raw), parse_turn(raw));
    }
}
