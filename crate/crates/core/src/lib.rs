//! Stylometric features from dependency trees for cross-language authorship
//! attribution.
//!
//! The crate reads CoNLL-U parses ([`deptree`]), relabels every node with a
//! language-independent label, and slides fixed tree patterns over the result
//! ([`dtgram`]). Baseline character, word and POS n-grams live in [`ngram`].
//! Documents become tf/idf vectors ([`vectorize`]), a one-vs-rest linear SVM
//! is trained on one language and tested on the other ([`svm`],
//! [`metrics`]), and [`experiment`] runs the whole repeated grid over a
//! bilingual [`corpus`].
//!
//! ```
//! use dtgrams::deptree::{label_tree, parse_conllu, NodeLabeling};
//! use dtgrams::dtgram::extract_anc;
//!
//! let conllu = "1\ta\ta\tDET\t_\t_\t2\tdet\t_\t_\n\
//!               2\tmouse\tmouse\tNOUN\t_\t_\t0\tdobj\t_\t_\n";
//! let tree = &parse_conllu(conllu).unwrap().trees[0];
//! let labeled = label_tree(tree, NodeLabeling::DepRel);
//! let grams: Vec<String> = extract_anc(&labeled, 2).iter().map(|g| g.serialize()).collect();
//! assert_eq!(grams, ["anc:X>dobj", "anc:dobj>det", "anc:det>X"]);
//! ```

pub mod corpus;
pub mod deptree;
pub mod dtgram;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod ngram;
pub mod rng;
pub mod svm;
pub mod synthetic;
pub mod vectorize;

pub use error::{Error, Result};

// The guide's Rust snippets run as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/trees.md")]
    mod trees {}
    #[doc = include_str!("../../../book/src/dtgrams.md")]
    mod dtgrams {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/tfidf.md")]
    mod tfidf {}
    #[doc = include_str!("../../../book/src/svm.md")]
    mod svm {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
