//! The 19 instruction-following validators.
//!
//! Each check resolves its response text from the episode `texts_map`,
//! evaluates one structural or lexical constraint, and renders the verdict
//! as `Check result: True/False`. String matching is ASCII-case-insensitive
//! after light normalization; boundary normalization strips whitespace,
//! ASCII punctuation, ellipses, and typographic quotes from the ends.
//! All ranges are inclusive on both ends.

pub mod segment;

use std::sync::{Arc, OnceLock};

use indexmap::IndexMap;
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::memory::{MemoryError, MemoryMap};
use crate::toolkit::{ParamSpec, ParamType, RegistryError, Tool, ToolCtx, ToolRegistry, ToolResponse, ToolSchema};

pub use segment::{segment, Segmentation};

/// The validator catalog. Exactly 19 kinds, one registered tool each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    ParagraphNumberInRange,
    SentenceNumberInRange,
    EachParagraphSentenceNumberInRange,
    EachParagraphSentenceNumberInRangeList,
    WordCountInRange,
    EachParagraphWordCountInRange,
    NotContainSubstring,
    NotContainSubstrings,
    EachSentenceBeginsWith,
    EachSentenceEndsWith,
    EachParagraphBeginsWith,
    EachParagraphEndsWith,
    ResponseBeginsWith,
    ResponseEndsWith,
    NoArabicNumber,
    EachKeywordMentionedInRange,
    TotalKeywordsMentionedInRange,
    PercentagePrecision,
    NumberPrecision,
}

impl CheckKind {
    pub const ALL: [CheckKind; 19] = [
        CheckKind::ParagraphNumberInRange,
        CheckKind::SentenceNumberInRange,
        CheckKind::EachParagraphSentenceNumberInRange,
        CheckKind::EachParagraphSentenceNumberInRangeList,
        CheckKind::WordCountInRange,
        CheckKind::EachParagraphWordCountInRange,
        CheckKind::NotContainSubstring,
        CheckKind::NotContainSubstrings,
        CheckKind::EachSentenceBeginsWith,
        CheckKind::EachSentenceEndsWith,
        CheckKind::EachParagraphBeginsWith,
        CheckKind::EachParagraphEndsWith,
        CheckKind::ResponseBeginsWith,
        CheckKind::ResponseEndsWith,
        CheckKind::NoArabicNumber,
        CheckKind::EachKeywordMentionedInRange,
        CheckKind::TotalKeywordsMentionedInRange,
        CheckKind::PercentagePrecision,
        CheckKind::NumberPrecision,
    ];

    /// The registered tool name; doubles as the spec file tag.
    pub fn tool_name(self) -> &'static str {
        match self {
            CheckKind::ParagraphNumberInRange => "paragraph_number_in_range",
            CheckKind::SentenceNumberInRange => "sentence_number_in_range",
            CheckKind::EachParagraphSentenceNumberInRange => {
                "each_paragraph_sentence_number_in_range"
            }
            CheckKind::EachParagraphSentenceNumberInRangeList => {
                "each_paragraph_sentence_number_in_range_list"
            }
            CheckKind::WordCountInRange => "word_count_in_range",
            CheckKind::EachParagraphWordCountInRange => "each_paragraph_word_count_in_range",
            CheckKind::NotContainSubstring => "not_contain_substring",
            CheckKind::NotContainSubstrings => "not_contain_substrings",
            CheckKind::EachSentenceBeginsWith => "each_sentence_begins_with",
            CheckKind::EachSentenceEndsWith => "each_sentence_ends_with",
            CheckKind::EachParagraphBeginsWith => "each_paragraph_begins_with",
            CheckKind::EachParagraphEndsWith => "each_paragraph_ends_with",
            CheckKind::ResponseBeginsWith => "response_begins_with",
            CheckKind::ResponseEndsWith => "response_ends_with",
            CheckKind::NoArabicNumber => "no_arabic_number",
            CheckKind::EachKeywordMentionedInRange => "each_keyword_mentioned_in_range",
            CheckKind::TotalKeywordsMentionedInRange => "total_keywords_mentioned_in_range",
            CheckKind::PercentagePrecision => "percentage_precision",
            CheckKind::NumberPrecision => "number_precision",
        }
    }
}

/// One declarative check: the kind tag, the `texts_map` key holding the
/// response, and the kind's parameters. Serialized form is the spec file
/// format (`{"check": "<tool name>", "text": "text_0", ...}`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    ParagraphNumberInRange { text: String, min: i64, max: i64 },
    SentenceNumberInRange { text: String, min: i64, max: i64 },
    EachParagraphSentenceNumberInRange { text: String, min: i64, max: i64 },
    EachParagraphSentenceNumberInRangeList { text: String, ranges: Vec<(i64, i64)> },
    WordCountInRange { text: String, min: i64, max: i64 },
    EachParagraphWordCountInRange { text: String, min: i64, max: i64 },
    NotContainSubstring { text: String, substring: String },
    NotContainSubstrings { text: String, substrings: Vec<String> },
    EachSentenceBeginsWith { text: String, prefix: String },
    EachSentenceEndsWith { text: String, suffix: String },
    EachParagraphBeginsWith { text: String, prefix: String },
    EachParagraphEndsWith { text: String, suffix: String },
    ResponseBeginsWith { text: String, prefix: String },
    ResponseEndsWith { text: String, suffix: String },
    NoArabicNumber { text: String },
    EachKeywordMentionedInRange { text: String, keyword_ranges: IndexMap<String, (i64, i64)> },
    TotalKeywordsMentionedInRange { text: String, keywords: Vec<String>, min: i64, max: i64 },
    PercentagePrecision { text: String, precision: u32 },
    NumberPrecision { text: String, precision: u32 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error(transparent)]
    Key(#[from] MemoryError),
    #[error("malformed check spec: {0}")]
    Spec(String),
}

impl CheckSpec {
    pub fn kind(&self) -> CheckKind {
        match self {
            CheckSpec::ParagraphNumberInRange { .. } => CheckKind::ParagraphNumberInRange,
            CheckSpec::SentenceNumberInRange { .. } => CheckKind::SentenceNumberInRange,
            CheckSpec::EachParagraphSentenceNumberInRange { .. } => {
                CheckKind::EachParagraphSentenceNumberInRange
            }
            CheckSpec::EachParagraphSentenceNumberInRangeList { .. } => {
                CheckKind::EachParagraphSentenceNumberInRangeList
            }
            CheckSpec::WordCountInRange { .. } => CheckKind::WordCountInRange,
            CheckSpec::EachParagraphWordCountInRange { .. } => {
                CheckKind::EachParagraphWordCountInRange
            }
            CheckSpec::NotContainSubstring { .. } => CheckKind::NotContainSubstring,
            CheckSpec::NotContainSubstrings { .. } => CheckKind::NotContainSubstrings,
            CheckSpec::EachSentenceBeginsWith { .. } => CheckKind::EachSentenceBeginsWith,
            CheckSpec::EachSentenceEndsWith { .. } => CheckKind::EachSentenceEndsWith,
            CheckSpec::EachParagraphBeginsWith { .. } => CheckKind::EachParagraphBeginsWith,
            CheckSpec::EachParagraphEndsWith { .. } => CheckKind::EachParagraphEndsWith,
            CheckSpec::ResponseBeginsWith { .. } => CheckKind::ResponseBeginsWith,
            CheckSpec::ResponseEndsWith { .. } => CheckKind::ResponseEndsWith,
            CheckSpec::NoArabicNumber { .. } => CheckKind::NoArabicNumber,
            CheckSpec::EachKeywordMentionedInRange { .. } => {
                CheckKind::EachKeywordMentionedInRange
            }
            CheckSpec::TotalKeywordsMentionedInRange { .. } => {
                CheckKind::TotalKeywordsMentionedInRange
            }
            CheckSpec::PercentagePrecision { .. } => CheckKind::PercentagePrecision,
            CheckSpec::NumberPrecision { .. } => CheckKind::NumberPrecision,
        }
    }

    pub fn text_key(&self) -> &str {
        match self {
            CheckSpec::ParagraphNumberInRange { text, .. }
            | CheckSpec::SentenceNumberInRange { text, .. }
            | CheckSpec::EachParagraphSentenceNumberInRange { text, .. }
            | CheckSpec::EachParagraphSentenceNumberInRangeList { text, .. }
            | CheckSpec::WordCountInRange { text, .. }
            | CheckSpec::EachParagraphWordCountInRange { text, .. }
            | CheckSpec::NotContainSubstring { text, .. }
            | CheckSpec::NotContainSubstrings { text, .. }
            | CheckSpec::EachSentenceBeginsWith { text, .. }
            | CheckSpec::EachSentenceEndsWith { text, .. }
            | CheckSpec::EachParagraphBeginsWith { text, .. }
            | CheckSpec::EachParagraphEndsWith { text, .. }
            | CheckSpec::ResponseBeginsWith { text, .. }
            | CheckSpec::ResponseEndsWith { text, .. }
            | CheckSpec::NoArabicNumber { text }
            | CheckSpec::EachKeywordMentionedInRange { text, .. }
            | CheckSpec::TotalKeywordsMentionedInRange { text, .. }
            | CheckSpec::PercentagePrecision { text, .. }
            | CheckSpec::NumberPrecision { text, .. } => text,
        }
    }

    fn validate(&self) -> Result<(), CheckError> {
        let bad = |msg: &str| Err(CheckError::Spec(msg.to_string()));
        match self {
            CheckSpec::ParagraphNumberInRange { min, max, .. }
            | CheckSpec::SentenceNumberInRange { min, max, .. }
            | CheckSpec::EachParagraphSentenceNumberInRange { min, max, .. }
            | CheckSpec::WordCountInRange { min, max, .. }
            | CheckSpec::EachParagraphWordCountInRange { min, max, .. } => {
                if min > max {
                    return bad("range requires min <= max");
                }
            }
            CheckSpec::EachParagraphSentenceNumberInRangeList { ranges, .. } => {
                if ranges.is_empty() {
                    return bad("ranges must not be empty");
                }
                if ranges.iter().any(|(lo, hi)| lo > hi) {
                    return bad("every range requires min <= max");
                }
            }
            CheckSpec::NotContainSubstring { substring, .. } => {
                if normalize_needle(substring).is_empty() {
                    return bad("substring must not be empty");
                }
            }
            CheckSpec::NotContainSubstrings { substrings, .. } => {
                if substrings.is_empty() {
                    return bad("substrings must not be empty");
                }
                if substrings.iter().any(|s| normalize_needle(s).is_empty()) {
                    return bad("substrings must not contain empty entries");
                }
            }
            CheckSpec::EachSentenceBeginsWith { prefix: needle, .. }
            | CheckSpec::EachParagraphBeginsWith { prefix: needle, .. }
            | CheckSpec::ResponseBeginsWith { prefix: needle, .. }
            | CheckSpec::EachSentenceEndsWith { suffix: needle, .. }
            | CheckSpec::EachParagraphEndsWith { suffix: needle, .. }
            | CheckSpec::ResponseEndsWith { suffix: needle, .. } => {
                if normalize_needle(needle).is_empty() {
                    return bad("prefix/suffix must not be empty");
                }
            }
            CheckSpec::EachKeywordMentionedInRange { keyword_ranges, .. } => {
                if keyword_ranges.is_empty() {
                    return bad("keyword_ranges must not be empty");
                }
                if keyword_ranges.keys().any(|k| k.trim().is_empty()) {
                    return bad("keywords must not be empty");
                }
                if keyword_ranges.values().any(|(lo, hi)| lo > hi) {
                    return bad("every keyword range requires min <= max");
                }
            }
            CheckSpec::TotalKeywordsMentionedInRange { keywords, min, max, .. } => {
                if keywords.is_empty() {
                    return bad("keywords must not be empty");
                }
                if keywords.iter().any(|k| k.trim().is_empty()) {
                    return bad("keywords must not contain empty entries");
                }
                if min > max {
                    return bad("range requires min <= max");
                }
            }
            CheckSpec::NoArabicNumber { .. }
            | CheckSpec::PercentagePrecision { .. }
            | CheckSpec::NumberPrecision { .. } => {}
        }
        Ok(())
    }
}

fn in_range(n: usize, min: i64, max: i64) -> bool {
    let n = n as i64;
    min <= n && n <= max
}

/// Boundary characters removed by light normalization.
fn is_boundary_char(c: char) -> bool {
    c.is_whitespace()
        || c.is_ascii_punctuation()
        || matches!(c, '…' | '\u{201c}' | '\u{201d}' | '\u{2018}' | '\u{2019}' | '«' | '»')
}

/// Light normalization: trim boundary punctuation/ellipses, lowercase.
fn normalize_boundary(s: &str) -> String {
    s.trim_matches(is_boundary_char).to_ascii_lowercase()
}

/// Needles are trimmed of boundary punctuation too, so "Yes," matches "yes".
fn normalize_needle(s: &str) -> String {
    normalize_boundary(s)
}

/// Keywords keep their special characters (a hashtag's `#` is part of the
/// word); only whitespace is trimmed and case is folded.
fn normalize_keyword(s: &str) -> String {
    s.trim().to_ascii_lowercase()
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Counts non-overlapping whole-word occurrences of `keyword`:
/// the characters adjacent to a match must not be word characters.
pub fn count_keyword(text: &str, keyword: &str) -> usize {
    let haystack = text.to_ascii_lowercase();
    let needle = normalize_keyword(keyword);
    if needle.is_empty() {
        return 0;
    }
    let mut count = 0usize;
    let mut at = 0usize;
    while let Some(found) = haystack[at..].find(&needle) {
        let start = at + found;
        let end = start + needle.len();
        let prev_ok = haystack[..start].chars().next_back().is_none_or(|c| !is_word_char(c));
        let next_ok = haystack[end..].chars().next().is_none_or(|c| !is_word_char(c));
        if prev_ok && next_ok {
            count += 1;
            at = end;
        } else {
            at = start + haystack[start..].chars().next().map_or(1, char::len_utf8);
        }
    }
    count
}

/// Standalone Arabic numeral: a maximal ASCII digit run whose neighboring
/// characters are not letters ("3rd" is attached, "3." is standalone).
pub fn has_standalone_arabic_number(text: &str) -> bool {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0usize;
    while i < chars.len() {
        if !chars[i].is_ascii_digit() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
        let prev_letter = start > 0 && chars[start - 1].is_alphabetic();
        let next_letter = i < chars.len() && chars[i].is_alphabetic();
        if !prev_letter && !next_letter {
            return true;
        }
    }
    false
}

fn percentage_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d+(?:\.(\d+))?%").expect("static regex compiles"))
}

fn decimal_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d+\.(\d+)").expect("static regex compiles"))
}

/// Every percentage expression carries exactly `precision` fraction digits;
/// an integer percentage counts as zero digits. Vacuously true without any
/// percentage.
pub fn percentages_have_precision(text: &str, precision: u32) -> bool {
    percentage_regex().captures_iter(text).all(|cap| {
        let digits = cap.get(1).map_or(0, |m| m.as_str().len());
        digits as u32 == precision
    })
}

/// Every decimal number carries exactly `precision` fraction digits.
/// Integers are out of scope: a text with only integers passes any precision.
pub fn decimals_have_precision(text: &str, precision: u32) -> bool {
    decimal_regex()
        .captures_iter(text)
        .all(|cap| cap[1].len() as u32 == precision)
}

fn begins_with(target: &str, prefix: &str) -> bool {
    normalize_boundary(target).starts_with(&normalize_needle(prefix))
}

fn ends_with(target: &str, suffix: &str) -> bool {
    normalize_boundary(target).ends_with(&normalize_needle(suffix))
}

/// Evaluates one check against the response resolved from `texts_map`.
/// Deterministic: identical (spec, text) gives an identical verdict.
pub fn run_check(spec: &CheckSpec, memory: &MemoryMap) -> Result<bool, CheckError> {
    spec.validate()?;
    let text = memory.resolve_text(spec.text_key())?;
    Ok(evaluate(spec, text))
}

/// The kind's semantics over an already-resolved response text.
pub fn evaluate(spec: &CheckSpec, text: &str) -> bool {
    let seg = segment(text);
    match spec {
        CheckSpec::ParagraphNumberInRange { min, max, .. } => {
            in_range(seg.paragraph_count(), *min, *max)
        }
        CheckSpec::SentenceNumberInRange { min, max, .. } => {
            in_range(seg.sentence_count(), *min, *max)
        }
        CheckSpec::EachParagraphSentenceNumberInRange { min, max, .. } => (0..seg
            .paragraph_count())
            .all(|i| in_range(seg.poetry_aware_sentence_count(i), *min, *max)),
        CheckSpec::EachParagraphSentenceNumberInRangeList { ranges, .. } => {
            seg.paragraph_count() == ranges.len()
                && seg
                    .sentences
                    .iter()
                    .zip(ranges)
                    .all(|(s, (lo, hi))| in_range(s.len(), *lo, *hi))
        }
        CheckSpec::WordCountInRange { min, max, .. } => in_range(seg.word_count(), *min, *max),
        CheckSpec::EachParagraphWordCountInRange { min, max, .. } => {
            seg.words.iter().all(|w| in_range(w.len(), *min, *max))
        }
        CheckSpec::NotContainSubstring { substring, .. } => {
            !text.to_ascii_lowercase().contains(&normalize_needle(substring))
        }
        CheckSpec::NotContainSubstrings { substrings, .. } => {
            let haystack = text.to_ascii_lowercase();
            !substrings.iter().any(|s| haystack.contains(&normalize_needle(s)))
        }
        CheckSpec::EachSentenceBeginsWith { prefix, .. } => {
            seg.sentences.iter().flatten().all(|s| begins_with(s, prefix))
        }
        CheckSpec::EachSentenceEndsWith { suffix, .. } => {
            seg.sentences.iter().flatten().all(|s| ends_with(s, suffix))
        }
        CheckSpec::EachParagraphBeginsWith { prefix, .. } => {
            seg.paragraphs.iter().all(|p| begins_with(p, prefix))
        }
        CheckSpec::EachParagraphEndsWith { suffix, .. } => {
            seg.paragraphs.iter().all(|p| ends_with(p, suffix))
        }
        CheckSpec::ResponseBeginsWith { prefix, .. } => begins_with(text, prefix),
        CheckSpec::ResponseEndsWith { suffix, .. } => ends_with(text, suffix),
        CheckSpec::NoArabicNumber { .. } => !has_standalone_arabic_number(text),
        CheckSpec::EachKeywordMentionedInRange { keyword_ranges, .. } => keyword_ranges
            .iter()
            .all(|(kw, (lo, hi))| in_range(count_keyword(text, kw), *lo, *hi)),
        CheckSpec::TotalKeywordsMentionedInRange { keywords, min, max, .. } => {
            let total: usize = keywords.iter().map(|kw| count_keyword(text, kw)).sum();
            in_range(total, *min, *max)
        }
        CheckSpec::PercentagePrecision { precision, .. } => {
            percentages_have_precision(text, *precision)
        }
        CheckSpec::NumberPrecision { precision, .. } => decimals_have_precision(text, *precision),
    }
}

/// Renders a verdict the way the tools report it.
pub fn render_verdict(pass: bool) -> String {
    format!("Check result: {}", if pass { "True" } else { "False" })
}

struct CheckTool {
    kind: CheckKind,
    schema: ToolSchema,
}

impl Tool for CheckTool {
    fn schema(&self) -> &ToolSchema {
        &self.schema
    }

    fn execute(&self, args: &Map<String, Value>, ctx: &mut ToolCtx<'_>) -> ToolResponse {
        let mut obj = args.clone();
        obj.insert("check".to_string(), Value::String(self.kind.tool_name().to_string()));
        let spec: CheckSpec = match serde_json::from_value(Value::Object(obj)) {
            Ok(spec) => spec,
            Err(e) => {
                return ToolResponse::error(format!(
                    "invalid arguments for {}: {e}",
                    self.kind.tool_name()
                ))
            }
        };
        match run_check(&spec, ctx.memory) {
            Ok(pass) => ToolResponse::ok(render_verdict(pass)),
            Err(e) => ToolResponse::error(e.to_string()),
        }
    }
}

fn schema_for(kind: CheckKind) -> ToolSchema {
    use ParamType::*;
    let text = ParamSpec::required(
        "text",
        String,
        "Key of the response text in texts_map (e.g. text_0).",
    );
    let range = || -> Vec<ParamSpec> {
        vec![
            text.clone(),
            ParamSpec::required("min", Integer, "Inclusive lower bound."),
            ParamSpec::required("max", Integer, "Inclusive upper bound."),
        ]
    };
    let (description, parameters): (&'static str, Vec<ParamSpec>) = match kind {
        CheckKind::ParagraphNumberInRange => (
            "Checks that the number of paragraphs (blank-line separated) is within [min, max].",
            range(),
        ),
        CheckKind::SentenceNumberInRange => (
            "Checks that the total number of sentences is within [min, max].",
            range(),
        ),
        CheckKind::EachParagraphSentenceNumberInRange => (
            "Checks that every paragraph's sentence count is within [min, max]; poetry-like paragraphs are counted by lines.",
            range(),
        ),
        CheckKind::EachParagraphSentenceNumberInRangeList => (
            "Checks paragraph i's sentence count against the i-th [min, max] range; the number of ranges must equal the number of paragraphs.",
            vec![
                text.clone(),
                ParamSpec::required("ranges", Array, "One inclusive [min, max] pair per paragraph."),
            ],
        ),
        CheckKind::WordCountInRange => (
            "Checks that the total word count is within [min, max].",
            range(),
        ),
        CheckKind::EachParagraphWordCountInRange => (
            "Checks that every paragraph's word count is within [min, max].",
            range(),
        ),
        CheckKind::NotContainSubstring => (
            "Checks that the response does not contain the given substring (case-insensitive).",
            vec![text.clone(), ParamSpec::required("substring", String, "Forbidden substring.")],
        ),
        CheckKind::NotContainSubstrings => (
            "Checks that the response contains none of the given substrings (case-insensitive).",
            vec![text.clone(), ParamSpec::required("substrings", Array, "Forbidden substrings.")],
        ),
        CheckKind::EachSentenceBeginsWith => (
            "Checks that every sentence begins with the given prefix (case-insensitive, boundary punctuation ignored).",
            vec![text.clone(), ParamSpec::required("prefix", String, "Required sentence prefix.")],
        ),
        CheckKind::EachSentenceEndsWith => (
            "Checks that every sentence ends with the given suffix (case-insensitive, boundary punctuation ignored).",
            vec![text.clone(), ParamSpec::required("suffix", String, "Required sentence suffix.")],
        ),
        CheckKind::EachParagraphBeginsWith => (
            "Checks that every paragraph begins with the given prefix (case-insensitive, boundary punctuation ignored).",
            vec![text.clone(), ParamSpec::required("prefix", String, "Required paragraph prefix.")],
        ),
        CheckKind::EachParagraphEndsWith => (
            "Checks that every paragraph ends with the given suffix (case-insensitive, boundary punctuation ignored).",
            vec![text.clone(), ParamSpec::required("suffix", String, "Required paragraph suffix.")],
        ),
        CheckKind::ResponseBeginsWith => (
            "Checks that the whole response begins with the given prefix (case-insensitive, boundary punctuation ignored).",
            vec![text.clone(), ParamSpec::required("prefix", String, "Required response prefix.")],
        ),
        CheckKind::ResponseEndsWith => (
            "Checks that the whole response ends with the given suffix (case-insensitive, boundary punctuation ignored).",
            vec![text.clone(), ParamSpec::required("suffix", String, "Required response suffix.")],
        ),
        CheckKind::NoArabicNumber => (
            "Checks that the response contains no standalone Arabic numerals (digits attached to letters, like 3rd, are allowed).",
            vec![text.clone()],
        ),
        CheckKind::EachKeywordMentionedInRange => (
            "Checks that each keyword's whole-word mention count is within its own inclusive range.",
            vec![
                text.clone(),
                ParamSpec::required("keyword_ranges", Object, "Map from keyword to its inclusive [min, max] mention range."),
            ],
        ),
        CheckKind::TotalKeywordsMentionedInRange => (
            "Checks that the summed whole-word mention count of all keywords is within [min, max].",
            vec![
                text.clone(),
                ParamSpec::required("keywords", Array, "Keywords to count."),
                ParamSpec::required("min", Integer, "Inclusive lower bound on the total mentions."),
                ParamSpec::required("max", Integer, "Inclusive upper bound on the total mentions."),
            ],
        ),
        CheckKind::PercentagePrecision => (
            "Checks that every percentage expression has exactly `precision` digits after the decimal point.",
            vec![text.clone(), ParamSpec::required("precision", Integer, "Exact number of fraction digits.")],
        ),
        CheckKind::NumberPrecision => (
            "Checks that every decimal number has exactly `precision` digits after the decimal point; integers are ignored.",
            vec![text, ParamSpec::required("precision", Integer, "Exact number of fraction digits.")],
        ),
    };
    ToolSchema { name: kind.tool_name(), description, parameters }
}


/// Registers all 19 validators.
pub fn register_all(registry: &mut ToolRegistry) -> Result<(), RegistryError> {
    for kind in CheckKind::ALL {
        registry.register(Arc::new(CheckTool { kind, schema: schema_for(kind) }))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn spec(value: Value) -> CheckSpec {
        serde_json::from_value(value).unwrap()
    }

    fn eval(value: Value, text: &str) -> bool {
        evaluate(&spec(value), text)
    }

    #[test]
    fn catalog_has_exactly_19_kinds() {
        assert_eq!(CheckKind::ALL.len(), 19);
        let mut reg = ToolRegistry::new();
        register_all(&mut reg).unwrap();
        assert_eq!(reg.len(), 19);
    }

    #[test]
    fn word_count_in_range_counts_by_hand() {
        assert!(eval(
            json!({"check":"word_count_in_range","text":"text_0","min":3,"max":6}),
            "one two three four five"
        ));
        assert!(!eval(
            json!({"check":"word_count_in_range","text":"text_0","min":3,"max":4}),
            "one two three four five"
        ));
    }

    #[test]
    fn no_arabic_number_flags_standalone_digits() {
        let s = json!({"check":"no_arabic_number","text":"text_0"});
        assert!(!eval(s.clone(), "There are 3 cats."));
        assert!(eval(s.clone(), "There are three cats."));
        assert!(eval(s.clone(), "He finished 3rd overall."));
        assert!(!eval(s, "Pi is 3.14 roughly."));
    }

    #[test]
    fn percentage_precision_matches_fraction_digits() {
        let p2 = json!({"check":"percentage_precision","text":"text_0","precision":2});
        assert!(eval(p2.clone(), "growth was 12.34% and 5.00%"));
        assert!(!eval(p2.clone(), "growth was 12.3%"));
        assert!(!eval(p2.clone(), "growth was 12%"));
        assert!(eval(p2, "no percentages at all"));
        assert!(eval(
            json!({"check":"percentage_precision","text":"text_0","precision":0}),
            "it rose 50% then 7%"
        ));
    }

    #[test]
    fn number_precision_ignores_integers() {
        let p2 = json!({"check":"number_precision","text":"text_0","precision":2});
        assert!(eval(p2.clone(), "values 1.25 and 3.00"));
        assert!(!eval(p2.clone(), "values 1.250"));
        assert!(eval(p2, "only integers: 5 and 700"));
    }

    #[test]
    fn sentence_prefix_check_is_case_insensitive() {
        assert!(eval(
            json!({"check":"each_sentence_begins_with","text":"text_0","prefix":"Yes"}),
            "Yes we can. yes we did."
        ));
        assert!(!eval(
            json!({"check":"each_sentence_begins_with","text":"text_0","prefix":"Yes"}),
            "Yes we can. no we did not."
        ));
    }

    #[test]
    fn suffix_checks_strip_boundary_punctuation() {
        assert!(eval(
            json!({"check":"each_sentence_ends_with","text":"text_0","suffix":"won"}),
            "We won! They won."
        ));
        assert!(eval(
            json!({"check":"response_ends_with","text":"text_0","suffix":"end"}),
            "This is the end…"
        ));
        assert!(eval(
            json!({"check":"response_begins_with","text":"text_0","prefix":"sure"}),
            "\u{201c}Sure,\u{201d} he said."
        ));
    }

    #[test]
    fn keyword_counting_handles_hashtags() {
        assert_eq!(count_keyword("#go wins. #go again.", "#go"), 2);
        assert_eq!(count_keyword("go and go, but not going", "go"), 2);
        assert_eq!(count_keyword("x#go is attached", "#go"), 0);
        assert!(eval(
            json!({"check":"each_keyword_mentioned_in_range","text":"text_0",
                   "keyword_ranges":{"#go":[2,3]}}),
            "#go wins. #go again."
        ));
        assert!(eval(
            json!({"check":"total_keywords_mentioned_in_range","text":"text_0",
                   "keywords":["cat","dog"],"min":3,"max":3}),
            "cat dog cat birds"
        ));
    }

    #[test]
    fn paragraph_list_variant_requires_matching_length() {
        let two = json!({"check":"each_paragraph_sentence_number_in_range_list","text":"text_0",
                         "ranges":[[1,1],[2,2]]});
        assert!(eval(two.clone(), "One.\n\nTwo. Three."));
        assert!(!eval(two, "One."));
    }

    #[test]
    fn poetry_paragraphs_count_lines_in_each_variant() {
        let range = json!({"check":"each_paragraph_sentence_number_in_range","text":"text_0",
                           "min":3,"max":4});
        assert!(eval(range, "line one\nline two\nline three"));
        // The plain total-count check does not use the heuristic.
        let total = json!({"check":"sentence_number_in_range","text":"text_0","min":1,"max":1});
        assert!(eval(total, "line one\nline two\nline three"));
    }

    #[test]
    fn run_check_resolves_from_memory_and_reports_misses() {
        let mut mem = MemoryMap::new();
        mem.bind_text("text_0", "one two three four five").unwrap();
        let ok = run_check(
            &spec(json!({"check":"word_count_in_range","text":"text_0","min":3,"max":6})),
            &mem,
        )
        .unwrap();
        assert!(ok);
        let miss = run_check(
            &spec(json!({"check":"word_count_in_range","text":"text_9","min":3,"max":6})),
            &mem,
        )
        .unwrap_err();
        assert!(matches!(miss, CheckError::Key(_)));
    }

    #[test]
    fn malformed_bounds_are_spec_errors() {
        let err = run_check(
            &spec(json!({"check":"word_count_in_range","text":"text_0","min":6,"max":3})),
            &MemoryMap::new(),
        )
        .unwrap_err();
        assert!(matches!(err, CheckError::Spec(_)));
    }

    #[test]
    fn monotone_bounds_property_spot_check() {
        let text = "one two three four five";
        let tight = spec(json!({"check":"word_count_in_range","text":"t","min":5,"max":5}));
        let wide = spec(json!({"check":"word_count_in_range","text":"t","min":0,"max":100}));
        assert!(evaluate(&tight, text));
        assert!(evaluate(&wide, text));
    }

    #[test]
    fn check_tool_renders_verdict_line() {
        let mut reg = ToolRegistry::new();
        register_all(&mut reg).unwrap();
        let mut mem = MemoryMap::new();
        mem.bind_text("text_0", "one two three four five").unwrap();
        let mut ctx = ToolCtx::new(&mut mem, std::path::Path::new("/tmp"));
        let call = crate::trajectory::ToolCall {
            name: "word_count_in_range".into(),
            arguments: json!({"text":"text_0","min":3,"max":6}).as_object().unwrap().clone(),
        };
        let resp = reg.dispatch(&call, &mut ctx);
        assert!(!resp.is_error);
        assert_eq!(resp.text, "Check result: True");
    }
}
