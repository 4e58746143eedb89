//! Preference-pair generation and the filtration pipelines.
//!
//! Stages compose through line-delimited JSON files so long runs are
//! resumable: generate negatives for (question, context, positive) seeds,
//! drop near-duplicate pairs by character-trigram Jaccard similarity, drop
//! samples the model already solves in all of five rollouts, and keep only
//! trajectories that are well-formatted, correct, and actually used a tool.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modelclient::{ChatClient, ChatMessage, ClientError, GenerationParams};

/// Input seed for pair generation: a task with its ground-truth response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSeed {
    pub id: String,
    pub question: String,
    /// Image path or document id the question refers to.
    pub context: String,
    pub positive: String,
}

/// One preference pair: the positive is preferred over the negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub id: String,
    pub question: String,
    pub context: String,
    pub positive: String,
    pub negative: String,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl PreferencePair {
    pub fn validate(&self) -> Result<(), PipeError> {
        if self.positive.is_empty() || self.negative.is_empty() {
            return Err(PipeError::EmptyGeneration);
        }
        if self.positive == self.negative {
            return Err(PipeError::DegeneratePair);
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PipeError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("generator returned an empty response")]
    EmptyGeneration,
    #[error("positive and negative responses are identical")]
    DegeneratePair,
}

/// Prompt asking the generator for one faithful and three subtly flawed
/// responses in the `response_1..response_4` layout. The flawed ones must
/// stay plausible and no response may reveal which is correct.
pub fn generation_prompt(question: &str, solution: &str) -> String {
    format!(
        "You are given a question and its correct solution. Write four candidate responses to \
         the question.\n\nFor response_1, explain the approach concisely and conclude with the \
         correct solution.\n\nFor response_2, response_3 and response_4, follow a similar \
         structure and a varied language style, but conclude each with a different incorrect \
         solution. Each mistake should seem plausible and mislead the reader.\n\nAll four \
         responses must sound confident and must not provide any information about which \
         solution is correct.\n\n<start_of_question>\n{question}\n<end_of_question>\n\n\
         <start_of_solution>\n{solution}\n<end_of_solution>\n\nDirectly give back four \
         responses in the following format:\nresponse_1: ...\nresponse_2: ...\nresponse_3: ...\n\
         response_4: ..."
    )
}

const GENERATOR_SYSTEM_PROMPT: &str =
    "You write candidate answers for building response-quality comparisons.";

/// Parsed `response_k:` layout; markers may be bolded and case varies.
pub fn parse_response_layout(text: &str) -> Vec<String> {
    let marker = regex::Regex::new(r"(?mi)^\s*\**response_(\d+)\**\s*:\s*").expect("static regex");
    let mut sections: Vec<(usize, usize)> = Vec::new(); // (start of body, end of marker match)
    let mut starts: Vec<usize> = Vec::new();
    for m in marker.find_iter(text) {
        starts.push(m.start());
        sections.push((m.end(), m.start()));
    }
    let mut out = Vec::new();
    for (i, (body_start, _)) in sections.iter().enumerate() {
        let end = starts.get(i + 1).copied().unwrap_or(text.len());
        let body = text[*body_start..end].trim();
        if !body.is_empty() {
            out.push(body.to_string());
        }
    }
    out
}

/// Asks the generator for candidate responses: the first parsed response is
/// the faithful one, the rest are flawed. Output without the layout is
/// treated as a single flawed response.
pub fn generate_responses(
    seed: &PairSeed,
    client: &dyn ChatClient,
    params: &GenerationParams,
) -> Result<(Option<String>, Vec<String>), PipeError> {
    let messages = vec![
        ChatMessage::system(GENERATOR_SYSTEM_PROMPT),
        ChatMessage::user(generation_prompt(&seed.question, &seed.positive)),
    ];
    let raw = client.complete(&messages, params)?;
    if raw.trim().is_empty() {
        return Err(PipeError::EmptyGeneration);
    }
    let mut parsed = parse_response_layout(&raw);
    if parsed.is_empty() {
        return Ok((None, vec![raw.trim().to_string()]));
    }
    let correct = parsed.remove(0);
    Ok((Some(correct), parsed))
}

/// Produces one flawed response for the seed. A generation identical to the
/// positive is rejected and retried once; a second identical generation
/// drops the sample (returns None).
pub fn generate_negative(
    seed: &PairSeed,
    client: &dyn ChatClient,
    params: &GenerationParams,
) -> Result<Option<String>, PipeError> {
    for _attempt in 0..2 {
        let (_, flawed) = generate_responses(seed, client, params)?;
        if let Some(negative) = flawed.into_iter().find(|f| f != &seed.positive) {
            return Ok(Some(negative));
        }
    }
    Ok(None)
}

/// Character-trigram Jaccard similarity in [0, 1]. Texts shorter than three
/// characters contribute themselves as a single gram; two empty texts are
/// identical (similarity 1).
pub fn trigram_similarity(a: &str, b: &str) -> f64 {
    let grams = |s: &str| -> BTreeSet<String> {
        let chars: Vec<char> = s.chars().collect();
        if chars.len() < 3 {
            return std::iter::once(s.to_string()).collect();
        }
        chars.windows(3).map(|w| w.iter().collect()).collect()
    };
    let (ga, gb) = (grams(a), grams(b));
    let intersection = ga.intersection(&gb).count();
    let union = ga.union(&gb).count();
    if union == 0 {
        return 1.0;
    }
    intersection as f64 / union as f64
}

pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.9;

/// Drops pairs whose positive and negative are too similar to provide a
/// useful contrast. Idempotent.
pub fn similarity_filter(pairs: Vec<PreferencePair>, threshold: f64) -> Vec<PreferencePair> {
    pairs
        .into_iter()
        .filter(|p| trigram_similarity(&p.positive, &p.negative) <= threshold)
        .collect()
}

/// Per-sample record of a difficulty-filtration pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyRecord {
    pub id: String,
    pub correct_rollouts: usize,
    pub rollouts: usize,
    pub kept: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub const DEFAULT_DIFFICULTY_ROLLOUTS: usize = 5;

/// Removes samples the model solves in every one of `rollouts` attempts.
/// `judge(sample, rollout_index)` grades one attempt; a judging error skips
/// (excludes) the sample and records why.
pub fn difficulty_filter<S, F>(
    samples: Vec<S>,
    rollouts: usize,
    mut judge: F,
) -> (Vec<S>, Vec<DifficultyRecord>)
where
    S: HasSampleId,
    F: FnMut(&S, usize) -> Result<bool, String>,
{
    let mut kept = Vec::new();
    let mut records = Vec::new();
    for sample in samples {
        let id = sample.sample_id().to_string();
        let mut correct = 0usize;
        let mut error: Option<String> = None;
        for rollout in 0..rollouts {
            match judge(&sample, rollout) {
                Ok(true) => correct += 1,
                Ok(false) => {}
                Err(e) => {
                    error = Some(e);
                    break;
                }
            }
        }
        if let Some(e) = error {
            log::warn!("difficulty filtration skipped sample {id}: {e}");
            records.push(DifficultyRecord {
                id,
                correct_rollouts: correct,
                rollouts,
                kept: false,
                error: Some(e),
            });
            continue;
        }
        let keep = correct < rollouts;
        records.push(DifficultyRecord {
            id,
            correct_rollouts: correct,
            rollouts,
            kept: keep,
            error: None,
        });
        if keep {
            kept.push(sample);
        }
    }
    (kept, records)
}

pub trait HasSampleId {
    fn sample_id(&self) -> &str;
}

impl HasSampleId for PairSeed {
    fn sample_id(&self) -> &str {
        &self.id
    }
}

impl HasSampleId for crate::bench::BenchTask {
    fn sample_id(&self) -> &str {
        &self.id
    }
}

/// One graded episode, the unit of cold-start trajectory filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub id: String,
    pub format_valid: bool,
    pub answer_correct: bool,
    pub succ_tool_calls: usize,
    /// Canonical tag-text serialization of the trajectory.
    pub trajectory: String,
}

/// Keeps episodes that are well-formatted, answered correctly, and made at
/// least one successful tool call. Idempotent.
pub fn filter_trajectories(episodes: Vec<TrajectoryRecord>) -> Vec<TrajectoryRecord> {
    episodes
        .into_iter()
        .filter(|e| e.format_valid && e.answer_correct && e.succ_tool_calls >= 1)
        .collect()
}
