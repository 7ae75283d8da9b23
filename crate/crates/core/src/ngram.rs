//! Baseline n-gram sequences over characters, words and UPOS tags.
//!
//! Serialized grams share the `<kind>:<body>` shape of DT-grams, with kinds
//! `charN`, `wordN` and `uposN`. Words and tags inside one gram are joined by
//! a single space. Control characters in character grams are escaped
//! (`\n`, `\r`, `\t`, and `\\` for a backslash) so that every gram fits on one
//! dump line.

use std::fmt;
use std::str::FromStr;

use crate::deptree::DepTree;
use crate::dtgram::GramSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NgramUnit {
    Char,
    Word,
    Upos,
}

impl NgramUnit {
    pub const ALL: [NgramUnit; 3] = [NgramUnit::Char, NgramUnit::Word, NgramUnit::Upos];

    pub fn as_str(self) -> &'static str {
        match self {
            NgramUnit::Char => "char",
            NgramUnit::Word => "word",
            NgramUnit::Upos => "upos",
        }
    }

    /// Whether extraction needs a dependency parse.
    pub fn needs_parse(self) -> bool {
        self == NgramUnit::Upos
    }
}

impl fmt::Display for NgramUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NgramUnit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "char" => Ok(NgramUnit::Char),
            "word" => Ok(NgramUnit::Word),
            "upos" => Ok(NgramUnit::Upos),
            other => Err(format!("unknown unit `{other}` (expected char, word or upos)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NgramSpec {
    pub unit: NgramUnit,
    pub n: usize,
}

impl NgramSpec {
    pub fn new(unit: NgramUnit, n: usize) -> Self {
        assert!(n >= 1, "n-gram length must be >= 1");
        NgramSpec { unit, n }
    }
}

impl fmt::Display for NgramSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.unit, self.n)
    }
}

fn escape_char(c: char, out: &mut String) {
    match c {
        '\n' => out.push_str("\\n"),
        '\r' => out.push_str("\\r"),
        '\t' => out.push_str("\\t"),
        '\\' => out.push_str("\\\\"),
        c => out.push(c),
    }
}

fn sequence(doc_id: &str, spec: NgramSpec, grams: Vec<String>) -> GramSequence {
    GramSequence {
        doc_id: doc_id.to_string(),
        feature: spec.to_string(),
        grams,
    }
}

/// Raw grams (no kind prefix) over Unicode scalar values, stride 1.
pub fn char_grams(text: &str, n: usize) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    chars
        .windows(n)
        .map(|w| {
            let mut s = String::with_capacity(n);
            for &c in w {
                escape_char(c, &mut s);
            }
            s
        })
        .collect()
}

/// Maximal runs of letters, digits and apostrophes; everything else splits.
pub fn tokenize_words(text: &str) -> Vec<&str> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '\u{2019}'))
        .filter(|t| !t.is_empty())
        .collect()
}

pub fn word_grams(text: &str, n: usize) -> Vec<String> {
    tokenize_words(text).windows(n).map(|w| w.join(" ")).collect()
}

/// Surface-order UPOS windows, never crossing a sentence boundary.
pub fn upos_grams(trees: &[DepTree], n: usize) -> Vec<String> {
    trees
        .iter()
        .flat_map(|t| {
            let tags: Vec<&str> = t.tokens().iter().map(|tok| tok.upos.as_str()).collect();
            tags.windows(n).map(|w| w.join(" ")).collect::<Vec<_>>()
        })
        .collect()
}

fn prefixed(spec: NgramSpec, raw: Vec<String>) -> Vec<String> {
    let prefix = format!("{spec}:");
    raw.into_iter().map(|g| format!("{prefix}{g}")).collect()
}

pub fn char_ngrams(doc_id: &str, text: &str, n: usize) -> GramSequence {
    let spec = NgramSpec::new(NgramUnit::Char, n);
    sequence(doc_id, spec, prefixed(spec, char_grams(text, n)))
}

pub fn word_ngrams(doc_id: &str, text: &str, n: usize) -> GramSequence {
    let spec = NgramSpec::new(NgramUnit::Word, n);
    sequence(doc_id, spec, prefixed(spec, word_grams(text, n)))
}

pub fn upos_ngrams(doc_id: &str, trees: &[DepTree], n: usize) -> GramSequence {
    let spec = NgramSpec::new(NgramUnit::Upos, n);
    sequence(doc_id, spec, prefixed(spec, upos_grams(trees, n)))
}
