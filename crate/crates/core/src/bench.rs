//! Judgment-task schema, prompt construction, verdict parsing, and scoring.
//!
//! Tasks come in three tracks (FG: fine-grained perception, Doc: long
//! document QA, IF: instruction following) and three modes (single_rm,
//! pair_2way, pair_4way). Task files are line-delimited JSON records with a
//! schema version field; every record is validated on load and rejected
//! with a line-accurate error.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ifcheck::CheckSpec;

pub const TASK_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Track {
    #[serde(rename = "FG")]
    Fg,
    #[serde(rename = "Doc")]
    Doc,
    #[serde(rename = "IF")]
    If,
}

impl Track {
    pub fn as_str(&self) -> &'static str {
        match self {
            Track::Fg => "FG",
            Track::Doc => "Doc",
            Track::If => "IF",
        }
    }
}

impl fmt::Display for Track {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "single_rm")]
    SingleRm,
    #[serde(rename = "pair_2way")]
    Pair2way,
    #[serde(rename = "pair_4way")]
    Pair4way,
}

impl Mode {
    pub fn candidate_count(&self) -> usize {
        match self {
            Mode::SingleRm => 1,
            Mode::Pair2way => 2,
            Mode::Pair4way => 4,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::SingleRm => "single_rm",
            Mode::Pair2way => "pair_2way",
            Mode::Pair4way => "pair_4way",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The task's multimodal context: image paths or a document id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TaskContext {
    Images { images: Vec<PathBuf> },
    Doc { doc_id: String },
}

/// Gold label: a boolean for single_rm, a 1-based preferred index otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gold {
    Bool(bool),
    Index(u8),
}

impl Gold {
    pub fn matches(&self, verdict: &Verdict) -> bool {
        match (self, verdict) {
            (Gold::Bool(g), Verdict::Bool(v)) => g == v,
            (Gold::Index(g), Verdict::Index(v)) => g == v,
            _ => false,
        }
    }
}

/// One judgment item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTask {
    pub schema: u32,
    pub id: String,
    pub track: Track,
    pub mode: Mode,
    /// Source sub-label carried through from upstream data (e.g. the plain
    /// `pair_rm` FG items, recorded as 2-way).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_label: Option<String>,
    pub instruction: String,
    pub context: TaskContext,
    pub candidates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<CheckSpec>,
    pub gold: Gold,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("task file line {line}, field {field:?}: {detail}")]
pub struct SchemaError {
    pub line: usize,
    pub field: String,
    pub detail: String,
}

impl BenchTask {
    pub fn validate(&self, line: usize) -> Result<(), SchemaError> {
        let err = |field: &str, detail: String| {
            Err(SchemaError { line, field: field.to_string(), detail })
        };
        if self.schema != TASK_SCHEMA_VERSION {
            return err("schema", format!("unsupported schema version {}", self.schema));
        }
        if self.id.is_empty() {
            return err("id", "task id must not be empty".into());
        }
        let expected = self.mode.candidate_count();
        if self.candidates.len() != expected {
            return err(
                "candidates",
                format!("{} requires {expected} candidates, found {}", self.mode, self.candidates.len()),
            );
        }
        if self.candidates.iter().any(String::is_empty) {
            return err("candidates", "candidates must not be empty strings".into());
        }
        match (self.mode, &self.gold) {
            (Mode::SingleRm, Gold::Bool(_)) => {}
            (Mode::SingleRm, Gold::Index(_)) => {
                return err("gold", "single_rm requires a boolean gold".into());
            }
            (_, Gold::Index(i)) => {
                if *i < 1 || *i as usize > expected {
                    return err("gold", format!("index {i} outside 1..={expected}"));
                }
            }
            (_, Gold::Bool(_)) => {
                return err("gold", "pairwise modes require a preferred index gold".into());
            }
        }
        match self.track {
            Track::If => {
                if self.mode == Mode::SingleRm && self.constraint.is_none() {
                    return err("constraint", "IF single_rm tasks require a constraint".into());
                }
            }
            _ => {
                if self.constraint.is_some() {
                    return err("constraint", "only IF tasks may carry a constraint".into());
                }
            }
        }
        if matches!(self.track, Track::Doc) && !matches!(self.context, TaskContext::Doc { .. }) {
            return err("context", "Doc tasks require a doc_id context".into());
        }
        Ok(())
    }

    pub fn doc_id(&self) -> Option<&str> {
        match &self.context {
            TaskContext::Doc { doc_id } => Some(doc_id),
            TaskContext::Images { .. } => None,
        }
    }
}

/// Parses one task per line, validating every invariant.
pub fn load_tasks_str(content: &str) -> Result<Vec<BenchTask>, SchemaError> {
    let mut tasks = Vec::new();
    for (i, raw) in content.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let task: BenchTask = serde_json::from_str(raw).map_err(|e| SchemaError {
            line,
            field: "record".to_string(),
            detail: e.to_string(),
        })?;
        task.validate(line)?;
        tasks.push(task);
    }
    Ok(tasks)
}

pub fn load_tasks(path: &std::path::Path) -> Result<Vec<BenchTask>, SchemaError> {
    let content = std::fs::read_to_string(path).map_err(|e| SchemaError {
        line: 0,
        field: "file".to_string(),
        detail: format!("{}: {e}", path.display()),
    })?;
    load_tasks_str(&content)
}

/// Per-track / per-mode tallies, reported after loading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskCounts {
    pub total: usize,
    pub per_track: BTreeMap<String, usize>,
    pub per_track_mode: BTreeMap<String, BTreeMap<String, usize>>,
}

pub fn count_tasks(tasks: &[BenchTask]) -> TaskCounts {
    let mut per_track = BTreeMap::new();
    let mut per_track_mode: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for t in tasks {
        *per_track.entry(t.track.to_string()).or_insert(0) += 1;
        *per_track_mode
            .entry(t.track.to_string())
            .or_default()
            .entry(t.mode.to_string())
            .or_insert(0) += 1;
    }
    TaskCounts { total: tasks.len(), per_track, per_track_mode }
}

/// The user-message half of an episode prompt plus the memory seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskPrompt {
    pub user_text: String,
    /// (key, text) pairs bound into texts_map before the episode starts.
    pub seed_texts: Vec<(String, String)>,
    /// (key, path) pairs bound into imgs_map before the episode starts.
    pub seed_images: Vec<(String, PathBuf)>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PromptError {
    #[error("unknown mode for track {0}")]
    UnknownMode(String),
}

fn block(name: &str, body: &str) -> String {
    format!("<start_of_{name}>\n{body}\n<end_of_{name}>\n")
}

/// Builds the deterministic user message for a task; same task, same bytes.
pub fn build_prompt(task: &BenchTask) -> Result<TaskPrompt, PromptError> {
    let mut seed_texts = Vec::new();
    let mut seed_images = Vec::new();
    if let TaskContext::Images { images } = &task.context {
        for (i, path) in images.iter().enumerate() {
            if i == 0 {
                // The task image is addressable both by its prompt name and
                // by its imgs_map slot.
                seed_images.push(("original_image".to_string(), path.clone()));
                seed_images.push(("img_0".to_string(), path.clone()));
            } else {
                seed_images.push((format!("img_{i}"), path.clone()));
            }
        }
    }

    let mut text = String::new();
    match task.mode {
        Mode::SingleRm => {
            let subject = match task.track {
                Track::Doc => "the provided document",
                _ => "the provided image",
            };
            text.push_str(&format!(
                "You will receive a response (named as 'text_0') which follows the user's \
                 instruction or requirement to {subject}. Your task is to judge whether the \
                 response satisfies the {}. If it does, you should mark it as 'True', otherwise \
                 'False' if you think the response does not satisfy it.\n\n",
                if task.constraint.is_some() { "constraint" } else { "instruction" }
            ));
            text.push_str(&block("instruction", &task.instruction));
            text.push('\n');
            text.push_str(&block("text_0", &task.candidates[0]));
            seed_texts.push(("text_0".to_string(), task.candidates[0].clone()));
            if let Some(constraint) = &task.constraint {
                let rendered =
                    serde_json::to_string(constraint).expect("check spec serializes");
                text.push('\n');
                text.push_str(&block("constraint", &rendered));
            }
            text.push_str(
                "\n## Output Format (strict)\n\nYou should make the final judgment wrapped in \
                 <answer></answer> XML tags: <answer>Overall Judgment: True (or False)</answer>",
            );
        }
        Mode::Pair2way | Mode::Pair4way => {
            let n = task.mode.candidate_count();
            let names: Vec<String> = (1..=n).map(|i| format!("'resp_{i}'")).collect();
            let (count_word, name_list) = match n {
                2 => ("two", names.join(" and ")),
                _ => ("four", format!("{}, and {}", names[..3].join(", "), names[3])),
            };
            text.push_str(&format!(
                "You will receive {count_word} responses (named as {name_list}) which follow the \
                 user's instruction or requirement to the provided {}. Your task is to judge \
                 which response is better. Note that correctness is most important. If none are \
                 correct, you should choose the one that is better from other aspects.\n\n",
                if task.track == Track::Doc { "document" } else { "image" }
            ));
            text.push_str(&block("instruction", &task.instruction));
            for (i, candidate) in task.candidates.iter().enumerate() {
                let key = format!("resp_{}", i + 1);
                text.push('\n');
                text.push_str(&block(&key, candidate));
                seed_texts.push((key, candidate.clone()));
            }
            let choices = match n {
                2 => "either 1 or 2".to_string(),
                _ => "one of 1, 2, 3 or 4".to_string(),
            };
            text.push_str(&format!(
                "\n## Output Format (strict)\n\nYou should make the final judgment wrapped in \
                 <answer></answer> XML tags: <answer>Overall Judgment: Answer X is better \
                 (X must be {choices}).</answer>",
            ));
        }
    }
    Ok(TaskPrompt { user_text: text, seed_texts, seed_images })
}

/// A parsed judgment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Verdict {
    Bool(bool),
    Index(u8),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("no parseable judgment in answer: {excerpt:?}")]
pub struct ParseFailure {
    pub excerpt: String,
}

fn parse_failure(text: &str) -> ParseFailure {
    ParseFailure { excerpt: text.chars().take(80).collect() }
}

fn answer_block_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?is)<answer>(.*?)</answer>").expect("static regex"))
}

fn bool_verdict_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(true|false)\b").expect("static regex"))
}

fn index_verdict_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)answer\s*(\d+)\s*is\s*better").expect("static regex"))
}

/// Extracts the verdict from a final answer. Scans the last `<answer>` block
/// when tags are present, otherwise the whole text (trajectory answers
/// arrive already unwrapped); matching is case-insensitive.
pub fn parse_judgment(answer: &str, mode: Mode) -> Result<Verdict, ParseFailure> {
    let region: &str = answer_block_regex()
        .captures_iter(answer)
        .last()
        .and_then(|c| c.get(1))
        .map_or(answer, |m| m.as_str());
    match mode {
        Mode::SingleRm => {
            let last = bool_verdict_regex()
                .find_iter(region)
                .last()
                .ok_or_else(|| parse_failure(region))?;
            Ok(Verdict::Bool(last.as_str().eq_ignore_ascii_case("true")))
        }
        Mode::Pair2way | Mode::Pair4way => {
            let n = mode.candidate_count() as u8;
            if let Some(cap) = index_verdict_regex().captures_iter(region).last() {
                let idx: u8 = cap[1].parse().map_err(|_| parse_failure(region))?;
                if (1..=n).contains(&idx) {
                    return Ok(Verdict::Index(idx));
                }
                return Err(parse_failure(region));
            }
            // Bare-digit fallback for terse but unambiguous answers.
            let trimmed = region.trim();
            if let Ok(idx) = trimmed.parse::<u8>() {
                if (1..=n).contains(&idx) {
                    return Ok(Verdict::Index(idx));
                }
            }
            Err(parse_failure(region))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureClass {
    Parse,
    Wrong,
    EpisodeAbort,
}

/// One graded outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub task_id: String,
    pub track: Track,
    pub mode: Mode,
    pub verdict: Option<Verdict>,
    pub correct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureClass>,
    /// Where this task's transcript was written, relative to the run dir.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrackStats {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

impl TrackStats {
    fn add(&mut self, correct: bool) {
        self.total += 1;
        if correct {
            self.correct += 1;
        }
        self.accuracy = self.correct as f64 / self.total as f64;
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub per_track: BTreeMap<String, TrackStats>,
    pub per_mode: BTreeMap<String, TrackStats>,
    /// Macro average of per-track accuracies: the headline number.
    pub overall: f64,
    pub failures: BTreeMap<String, usize>,
    pub total: usize,
    pub correct: usize,
}

/// Single-pass reduction over results; permutation-invariant.
pub fn score(results: &[EvalResult]) -> Report {
    let mut report = Report::default();
    for r in results {
        report.per_track.entry(r.track.to_string()).or_default().add(r.correct);
        report.per_mode.entry(r.mode.to_string()).or_default().add(r.correct);
        report.total += 1;
        if r.correct {
            report.correct += 1;
        }
        if let Some(failure) = &r.failure {
            let name = match failure {
                FailureClass::Parse => "parse",
                FailureClass::Wrong => "wrong",
                FailureClass::EpisodeAbort => "episode-abort",
            };
            *report.failures.entry(name.to_string()).or_insert(0) += 1;
        }
    }
    if !report.per_track.is_empty() {
        report.overall = report.per_track.values().map(|s| s.accuracy).sum::<f64>()
            / report.per_track.len() as f64;
    }
    report
}

/// Counterbalancing: pairwise tasks judged twice with the candidate order
/// reversed and the gold remapped, to expose position bias. Single-response
/// tasks pass through unchanged.
pub fn counterbalanced_views(task: &BenchTask) -> Vec<BenchTask> {
    match task.mode {
        Mode::SingleRm => vec![task.clone()],
        Mode::Pair2way | Mode::Pair4way => {
            let mut swapped = task.clone();
            swapped.id = format!("{}#swap", task.id);
            swapped.candidates.reverse();
            if let Gold::Index(i) = task.gold {
                swapped.gold = Gold::Index(task.mode.candidate_count() as u8 + 1 - i);
            }
            vec![task.clone(), swapped]
        }
    }
}
