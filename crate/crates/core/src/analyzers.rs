//! N-gram analyzers: word n-grams, character n-grams and character n-grams
//! restricted to word boundaries (`char_wb`).
//!
//! Every analyzer returns the features of a text as a list with one entry per
//! occurrence, so multiplicities survive into term counts.

use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest n-gram order accepted by [`AnalyzerConfig::validate`].
pub const MAX_NGRAM: usize = 10;

static WORD_TOKEN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[\p{L}\p{N}_]{2,}").expect("static pattern"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyzerKind {
    Word,
    Char,
    CharWb,
}

impl AnalyzerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AnalyzerKind::Word => "word",
            AnalyzerKind::Char => "char",
            AnalyzerKind::CharWb => "char_wb",
        }
    }
}

/// How the word analyzer splits text into tokens.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordTokenRule {
    /// Runs of letters, digits or underscore, at least two code points long.
    #[default]
    Pattern,
    /// Plain whitespace splitting.
    Whitespace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnalyzerConfig {
    pub kind: AnalyzerKind,
    pub ngram_min: usize,
    pub ngram_max: usize,
    #[serde(default, skip_serializing_if = "is_default_rule")]
    pub token_rule: WordTokenRule,
}

fn is_default_rule(rule: &WordTokenRule) -> bool {
    *rule == WordTokenRule::Pattern
}

impl AnalyzerConfig {
    pub fn new(kind: AnalyzerKind, ngram_min: usize, ngram_max: usize) -> Self {
        Self {
            kind,
            ngram_min,
            ngram_max,
            token_rule: WordTokenRule::Pattern,
        }
    }

    pub fn word(ngram_min: usize, ngram_max: usize) -> Self {
        Self::new(AnalyzerKind::Word, ngram_min, ngram_max)
    }

    pub fn char(ngram_min: usize, ngram_max: usize) -> Self {
        Self::new(AnalyzerKind::Char, ngram_min, ngram_max)
    }

    pub fn char_wb(ngram_min: usize, ngram_max: usize) -> Self {
        Self::new(AnalyzerKind::CharWb, ngram_min, ngram_max)
    }

    pub fn range(&self) -> (usize, usize) {
        (self.ngram_min, self.ngram_max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ngram_min < 1 || self.ngram_min > self.ngram_max || self.ngram_max > MAX_NGRAM {
            return Err(Error::InvalidConfig(format!(
                "n-gram range ({}, {}) must satisfy 1 <= min <= max <= {MAX_NGRAM}",
                self.ngram_min, self.ngram_max
            )));
        }
        Ok(())
    }
}

impl fmt::Display for AnalyzerConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}({},{})",
            self.kind.as_str(),
            self.ngram_min,
            self.ngram_max
        )
    }
}

/// Replaces every maximal run of whitespace with a single space. No trimming.
pub fn normalize_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_run = false;
    for c in text.chars() {
        if c.is_whitespace() {
            if !in_run {
                out.push(' ');
            }
            in_run = true;
        } else {
            out.push(c);
            in_run = false;
        }
    }
    out
}

pub fn tokenize_words(text: &str) -> Vec<&str> {
    WORD_TOKEN.find_iter(text).map(|m| m.as_str()).collect()
}

fn tokenize_with(text: &str, rule: WordTokenRule) -> Vec<&str> {
    match rule {
        WordTokenRule::Pattern => tokenize_words(text),
        WordTokenRule::Whitespace => text.split_whitespace().collect(),
    }
}

pub fn word_ngrams<S: AsRef<str>>(tokens: &[S], range: (usize, usize)) -> Vec<String> {
    let (min_n, max_n) = range;
    let mut out = Vec::new();
    for n in min_n.max(1)..=max_n.min(tokens.len()) {
        for window in tokens.windows(n) {
            let mut gram = String::new();
            for (i, t) in window.iter().enumerate() {
                if i > 0 {
                    gram.push(' ');
                }
                gram.push_str(t.as_ref());
            }
            out.push(gram);
        }
    }
    out
}

/// Byte offsets of every code-point boundary of `s`, including `s.len()`.
fn boundaries(s: &str) -> Vec<usize> {
    s.char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(s.len()))
        .collect()
}

/// Character n-grams of an already whitespace-normalized string.
pub fn char_ngrams(text: &str, range: (usize, usize)) -> Vec<String> {
    let (min_n, max_n) = range;
    let bounds = boundaries(text);
    let len = bounds.len() - 1;
    let mut out = Vec::new();
    for n in min_n.max(1)..=max_n.min(len) {
        for start in 0..=len - n {
            out.push(text[bounds[start]..bounds[start + n]].to_owned());
        }
    }
    out
}

/// Character n-grams inside space-padded words; a word whose padded form is
/// no longer than `n` is emitted once, whole, and larger `n` are skipped.
pub fn char_wb_ngrams(text: &str, range: (usize, usize)) -> Vec<String> {
    let (min_n, max_n) = range;
    let normalized = normalize_whitespace(text);
    let mut out = Vec::new();
    for word in normalized.split(' ').filter(|w| !w.is_empty()) {
        let padded = format!(" {word} ");
        let bounds = boundaries(&padded);
        let len = bounds.len() - 1;
        for n in min_n.max(1)..=max_n {
            if len <= n {
                out.push(padded.clone());
                break;
            }
            for start in 0..=len - n {
                out.push(padded[bounds[start]..bounds[start + n]].to_owned());
            }
        }
    }
    out
}

pub fn analyze(text: &str, config: &AnalyzerConfig) -> Vec<String> {
    let range = config.range();
    match config.kind {
        AnalyzerKind::Word => word_ngrams(&tokenize_with(text, config.token_rule), range),
        AnalyzerKind::Char => char_ngrams(&normalize_whitespace(text), range),
        AnalyzerKind::CharWb => char_wb_ngrams(text, range),
    }
}
