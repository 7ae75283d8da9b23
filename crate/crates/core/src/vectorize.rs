//! Vocabulary fitting and tf/idf vectors.
//!
//! Weights are raw counts times the smoothed inverse document frequency
//! `ln((1 + n) / (1 + df)) + 1`, followed by L2 normalization. Terms are
//! indexed in lexicographic order so a vocabulary is fully determined by its
//! term set.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::dtgram::GramSequence;
use crate::error::{Error, Result};

const VOCAB_HEADER: &str = "# dtgrams vocabulary v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    doc_frequency: Vec<u32>,
    n_train_docs: usize,
}

impl Vocabulary {
    /// Fits on the given documents, keeping terms seen in at least `min_df`
    /// of them.
    pub fn fit<'a, I>(docs: I, min_df: u32) -> Result<Self>
    where
        I: IntoIterator<Item = &'a GramSequence>,
    {
        let mut df: BTreeMap<&'a str, u32> = BTreeMap::new();
        let mut n_docs = 0usize;
        let mut seen: Vec<&'a str> = Vec::new();
        for doc in docs {
            n_docs += 1;
            seen.clear();
            seen.extend(doc.grams.iter().map(String::as_str));
            seen.sort_unstable();
            seen.dedup();
            for &t in &seen {
                *df.entry(t).or_default() += 1;
            }
        }
        if df.is_empty() {
            return Err(Error::Vocabulary("no terms in any training document".into()));
        }
        let kept: Vec<(&str, u32)> = df.into_iter().filter(|&(_, c)| c >= min_df.max(1)).collect();
        if kept.is_empty() {
            return Err(Error::Vocabulary(format!("no term reaches min_df={min_df}")));
        }
        Ok(Self::from_sorted(
            kept.into_iter().map(|(t, c)| (t.to_string(), c)).collect(),
            n_docs,
        ))
    }

    fn from_sorted(entries: Vec<(String, u32)>, n_train_docs: usize) -> Self {
        let (terms, doc_frequency): (Vec<String>, Vec<u32>) = entries.into_iter().unzip();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            terms,
            index,
            doc_frequency,
            n_train_docs,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_train_docs(&self) -> usize {
        self.n_train_docs
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_frequency(&self, index: usize) -> u32 {
        self.doc_frequency[index]
    }

    pub fn idf(&self, index: usize) -> f64 {
        let n = self.n_train_docs as f64;
        ((1.0 + n) / (1.0 + self.doc_frequency[index] as f64)).ln() + 1.0
    }

    /// tf/idf vector of one document, L2-normalized. Unknown terms are
    /// dropped; a document with no known terms maps to the zero vector.
    pub fn transform(&self, seq: &GramSequence) -> SparseVector {
        let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
        for g in &seq.grams {
            if let Some(i) = self.index_of(g) {
                *counts.entry(i).or_default() += 1;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(i, tf)| (i, tf as f64 * self.idf(i)))
            .collect();
        let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut entries {
                *w /= norm;
            }
        }
        SparseVector {
            dim: self.len(),
            entries,
        }
    }

    /// Line-oriented text form: a version header, `# n_train_docs=N`, then
    /// one `term<TAB>df` line per term in index order.
    pub fn to_text(&self) -> String {
        let mut out = format!("{VOCAB_HEADER}\n# n_train_docs={}\n", self.n_train_docs);
        for (t, df) in self.terms.iter().zip(&self.doc_frequency) {
            let _ = writeln!(out, "{t}\t{df}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, m: String| Error::Vocabulary(format!("line {line}: {m}"));
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == VOCAB_HEADER => {}
            _ => return Err(bad(1, format!("expected header `{VOCAB_HEADER}`"))),
        }
        let n_train_docs = match lines.next() {
            Some((_, l)) => l
                .strip_prefix("# n_train_docs=")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad(2, "expected `# n_train_docs=N`".into()))?,
            None => return Err(bad(2, "missing document count".into())),
        };
        let mut entries: Vec<(String, u32)> = Vec::new();
        for (i, line) in lines {
            let (term, df) = line
                .rsplit_once('\t')
                .ok_or_else(|| bad(i + 1, "expected term<TAB>df".into()))?;
            let df: u32 = df.parse().map_err(|_| bad(i + 1, format!("bad df `{df}`")))?;
            if df == 0 || df as usize > n_train_docs {
                return Err(bad(i + 1, format!("df {df} outside 1..={n_train_docs}")));
            }
            if let Some((prev, _)) = entries.last() {
                if prev.as_str() >= term {
                    return Err(bad(i + 1, "terms not strictly sorted".into()));
                }
            }
            entries.push((term.to_string(), df));
        }
        Ok(Self::from_sorted(entries, n_train_docs))
    }
}

/// Sparse vector with strictly increasing indices below `dim`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    pub dim: usize,
    pub entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn new(dim: usize, mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|&(i, _)| i);
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0), "duplicate index");
        debug_assert!(entries.iter().all(|&(i, _)| i < dim), "index out of range");
        SparseVector { dim, entries }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&(_, w)| w == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, w)| w * dense[i]).sum()
    }

    /// `index:weight` pairs separated by spaces.
    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(i, w)| format!("{i}:{w}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}
