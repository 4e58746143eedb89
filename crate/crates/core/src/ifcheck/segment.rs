//! Rule-based text segmentation shared by the validators.
//!
//! Paragraph: maximal run of non-blank lines (blank-line separation).
//! Sentence boundary: `.` `!` `?` followed by whitespace or end of text,
//! except a period with digits on both sides.
//! Word: maximal whitespace-delimited token after stripping leading and
//! trailing non-alphanumeric characters; tokens that strip to nothing are
//! not words.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Segmentation {
    pub paragraphs: Vec<String>,
    /// Sentences of each paragraph.
    pub sentences: Vec<Vec<String>>,
    /// Words of each paragraph.
    pub words: Vec<Vec<String>>,
}

impl Segmentation {
    pub fn paragraph_count(&self) -> usize {
        self.paragraphs.len()
    }

    pub fn sentence_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    pub fn word_count(&self) -> usize {
        self.words.iter().map(Vec::len).sum()
    }

    /// Sentence count of paragraph `i` under the poetry heuristic: when a
    /// paragraph spans two or more lines and contains no sentence-final
    /// punctuation, lines count as sentences.
    pub fn poetry_aware_sentence_count(&self, i: usize) -> usize {
        let paragraph = &self.paragraphs[i];
        let lines = paragraph.lines().filter(|l| !l.trim().is_empty()).count();
        if lines >= 2 && !paragraph.contains(['.', '!', '?']) {
            lines
        } else {
            self.sentences[i].len()
        }
    }
}

/// Deterministic segmentation of `text`; empty input yields an empty result.
pub fn segment(text: &str) -> Segmentation {
    let paragraphs = split_paragraphs(text);
    let sentences = paragraphs.iter().map(|p| split_sentences(p)).collect();
    let words = paragraphs.iter().map(|p| split_words(p)).collect();
    Segmentation { paragraphs, sentences, words }
}

pub fn split_paragraphs(text: &str) -> Vec<String> {
    let mut paragraphs = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                paragraphs.push(current.join("\n"));
                current.clear();
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        paragraphs.push(current.join("\n"));
    }
    paragraphs
}

pub fn split_sentences(paragraph: &str) -> Vec<String> {
    let chars: Vec<char> = paragraph.chars().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    for i in 0..chars.len() {
        let c = chars[i];
        if c != '.' && c != '!' && c != '?' {
            continue;
        }
        let next = chars.get(i + 1).copied();
        let at_boundary = next.is_none_or(char::is_whitespace);
        if !at_boundary {
            continue;
        }
        // Digit-guarded period: 3.14 never splits.
        if c == '.' {
            let prev_digit = i > 0 && chars[i - 1].is_ascii_digit();
            let next_digit = next.is_some_and(|n| n.is_ascii_digit());
            if prev_digit && next_digit {
                continue;
            }
        }
        let sentence: String = chars[start..=i].iter().collect();
        let sentence = sentence.trim().to_string();
        if !sentence.is_empty() {
            sentences.push(sentence);
        }
        start = i + 1;
    }
    if start < chars.len() {
        let tail: String = chars[start..].iter().collect();
        let tail = tail.trim().to_string();
        if !tail.is_empty() {
            sentences.push(tail);
        }
    }
    sentences
}

pub fn split_words(paragraph: &str) -> Vec<String> {
    paragraph
        .split_whitespace()
        .filter_map(|token| {
            let word = token.trim_matches(|c: char| !c.is_alphanumeric());
            if word.is_empty() {
                None
            } else {
                Some(word.to_string())
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_paragraphs_sentences_words() {
        let seg = segment("Hello world!\n\nBye.");
        assert_eq!(seg.paragraph_count(), 2);
        assert_eq!(seg.sentences.iter().map(Vec::len).collect::<Vec<_>>(), vec![1, 1]);
        assert_eq!(seg.words.iter().map(Vec::len).collect::<Vec<_>>(), vec![2, 1]);
    }

    #[test]
    fn digit_guard_keeps_decimal_numbers_whole() {
        let seg = segment("Pi is 3.14 exactly.");
        assert_eq!(seg.sentence_count(), 1);
        assert_eq!(seg.sentences[0], vec!["Pi is 3.14 exactly."]);
    }

    #[test]
    fn empty_text_is_empty_segmentation() {
        let seg = segment("");
        assert_eq!(seg.paragraph_count(), 0);
        assert_eq!(seg.sentence_count(), 0);
        assert_eq!(seg.word_count(), 0);
    }

    #[test]
    fn whitespace_only_lines_separate_paragraphs() {
        let seg = segment("a\n  \t \nb");
        assert_eq!(seg.paragraphs, vec!["a", "b"]);
    }

    #[test]
    fn trailing_text_without_punctuation_is_a_sentence() {
        assert_eq!(split_sentences("no punctuation here"), vec!["no punctuation here"]);
    }

    #[test]
    fn multi_punctuation_splits_at_the_last_mark() {
        assert_eq!(split_sentences("Really?! Yes."), vec!["Really?!", "Yes."]);
    }

    #[test]
    fn words_strip_boundary_punctuation() {
        assert_eq!(split_words("\"don't,\" she said -- 3.14!"), vec!["don't", "she", "said", "3.14"]);
    }

    #[test]
    fn poetry_heuristic_counts_lines() {
        let seg = segment("roses are red\nviolets are blue\n\nA sentence. Another one.");
        assert_eq!(seg.poetry_aware_sentence_count(0), 2);
        assert_eq!(seg.poetry_aware_sentence_count(1), 2);
        // Single line without punctuation stays one sentence.
        let single = segment("just one line");
        assert_eq!(single.poetry_aware_sentence_count(0), 1);
    }
}
