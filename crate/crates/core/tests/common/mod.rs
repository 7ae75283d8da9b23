//! Shared helpers: random trees and a brute-force DT-gram enumerator that
//! shares no code with the library's extractor.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use dtgrams::deptree::LabeledTree;
use dtgrams::dtgram::{DtGram, DtKind};
use dtgrams::rng::SplitRng;
use dtgrams::synthetic::{generate, SyntheticConfig};

pub const CAT_SENTENCE: &str = "\
# text = the cat saw a mouse in the field
1\tthe\tthe\tDET\tDT\t_\t2\tdet\t_\t_
2\tcat\tcat\tNOUN\tNN\t_\t3\tnsubj\t_\t_
3\tsaw\tsee\tVERB\tVBD\t_\t0\troot\t_\t_
4\ta\ta\tDET\tDT\t_\t5\tdet\t_\t_
5\tmouse\tmouse\tNOUN\tNN\t_\t3\tdobj\t_\t_
6\tin\tin\tADP\tIN\t_\t8\tcase\t_\t_
7\tthe\tthe\tDET\tDT\t_\t8\tdet\t_\t_
8\tfield\tfield\tNOUN\tNN\t_\t5\tnmod\t_\t_
";

/// "a mouse in the field" on its own, rooted at `mouse`.
pub const MOUSE_SUBTREE: &str = "\
1\ta\ta\tDET\t_\t_\t2\tdet\t_\t_
2\tmouse\tmouse\tNOUN\t_\t_\t0\tdobj\t_\t_
3\tin\tin\tADP\t_\t_\t5\tcase\t_\t_
4\tthe\tthe\tDET\t_\t_\t5\tdet\t_\t_
5\tfield\tfield\tNOUN\t_\t_\t2\tnmod\t_\t_
";

pub const MOUSE_ANC3: [&str; 11] = [
    "X-X-dobj", "X-dobj-det", "dobj-det-X", "det-X-X", "X-dobj-nmod", "dobj-nmod-case", "nmod-case-X",
    "case-X-X", "dobj-nmod-det", "nmod-det-X", "det-X-X",
];

/// Labels plus 1-based heads (0 marks the root).
#[derive(Debug, Clone)]
pub struct RawTree {
    pub labels: Vec<String>,
    pub heads: Vec<usize>,
}

impl RawTree {
    pub fn labeled(&self) -> LabeledTree {
        LabeledTree::new(self.labels.clone(), &self.heads).expect("valid random tree")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    fn parent(&self, v: usize) -> Option<usize> {
        self.heads[v].checked_sub(1)
    }

    fn root(&self) -> usize {
        self.heads.iter().position(|&h| h == 0).unwrap()
    }

    /// Children in surface order, found by scanning the head column.
    fn children(&self, v: usize) -> Vec<usize> {
        (0..self.len()).filter(|&c| self.heads[c] == v + 1).collect()
    }

    fn siblings(&self, v: usize) -> Vec<usize> {
        (0..self.len()).filter(|&s| self.heads[s] == self.heads[v]).collect()
    }

    fn leaves(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.children(v).is_empty()).collect()
    }

    /// Root-to-leaf node paths, one per leaf.
    fn paths(&self) -> Vec<Vec<usize>> {
        self.leaves()
            .into_iter()
            .map(|leaf| {
                let mut path = vec![leaf];
                while let Some(p) = self.parent(*path.last().unwrap()) {
                    path.push(p);
                }
                path.reverse();
                path
            })
            .collect()
    }

    pub fn internal(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| !self.children(v).is_empty()).collect()
    }

    pub fn child_count(&self, v: usize) -> usize {
        self.children(v).len()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().len()
    }

    /// Depth of `d` below `a`, if `d` is in the subtree of `a`.
    pub fn depth_below(&self, a: usize, d: usize) -> Option<usize> {
        let mut cur = d;
        let mut k = 0;
        loop {
            if cur == a {
                return Some(k);
            }
            cur = self.parent(cur)?;
            k += 1;
        }
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.children(v).is_empty()
    }
}

/// Random tree of 1..=max_nodes nodes, labels drawn from a small alphabet
/// that includes a literal `X` and delimiter characters.
pub fn random_tree(rng: &mut SplitRng, max_nodes: usize) -> RawTree {
    const ALPHABET: [&str; 7] = ["a", "b", "c", "d", "X", "n|m", "x>y"];
    let n = 1 + rng.below(max_nodes as u64) as usize;
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let chainy = rng.below(3) == 0;
    let mut heads = vec![0; n];
    for k in 1..n {
        let parent = if chainy && rng.below(4) != 0 {
            order[k - 1]
        } else {
            order[rng.below(k as u64) as usize]
        };
        heads[order[k]] = parent + 1;
    }
    let labels = (0..n)
        .map(|_| ALPHABET[rng.below(ALPHABET.len() as u64) as usize].to_string())
        .collect();
    RawTree { labels, heads }
}

type Slots = Vec<Option<usize>>;
pub type Owned = (Vec<Option<String>>, Vec<Option<String>>);

fn padded(items: &[usize], q: usize) -> Vec<Slots> {
    let mut row: Slots = vec![None; q - 1];
    row.extend(items.iter().map(|&v| Some(v)));
    row.extend(vec![None; q - 1]);
    (0..=row.len() - q).map(|i| row[i..i + q].to_vec()).collect()
}

fn with_labels(t: &RawTree, slots: &[Option<usize>]) -> Vec<Option<String>> {
    slots.iter().map(|s| s.map(|v| t.labels[v].clone())).collect()
}

/// Brute-force enumeration of every gram of `kind` as owned label slots.
pub fn oracle(t: &RawTree, kind: DtKind, p: usize, q: usize) -> Vec<Owned> {
    match kind {
        DtKind::Anc => {
            // Distinct id windows over the padded root-to-leaf paths.
            let mut windows: BTreeSet<Slots> = BTreeSet::new();
            for path in t.paths() {
                let mut row: Slots = vec![None; p - 1];
                row.extend(path.iter().map(|&v| Some(v)));
                row.extend(vec![None; p - 1]);
                for i in 0..=row.len() - p {
                    let w = row[i..i + p].to_vec();
                    if w.iter().any(Option::is_some) {
                        windows.insert(w);
                    }
                }
            }
            windows.iter().map(|w| (with_labels(t, w), Vec::new())).collect()
        }
        DtKind::Sib => {
            let mut groups = vec![vec![t.root()]];
            groups.extend(t.internal().into_iter().map(|v| t.children(v)));
            groups
                .iter()
                .flat_map(|g| padded(g, q))
                .map(|w| (Vec::new(), with_labels(t, &w)))
                .collect()
        }
        DtKind::Pq => {
            let mut out = Vec::new();
            for a in 0..t.len() {
                let mut stem: Slots = Vec::new();
                let mut cur = Some(a);
                while stem.len() < p {
                    stem.push(cur);
                    cur = cur.and_then(|v| t.parent(v));
                }
                stem.reverse();
                let children = t.children(a);
                let bases = if children.is_empty() {
                    vec![vec![None; q]]
                } else {
                    padded(&children, q)
                };
                for b in bases {
                    out.push((with_labels(t, &stem), with_labels(t, &b)));
                }
            }
            out
        }
        DtKind::Inv => {
            let mut out = Vec::new();
            for a in 0..t.len() {
                let mut chains: BTreeSet<Slots> = BTreeSet::new();
                for path in t.paths() {
                    if let Some(i) = path.iter().position(|&v| v == a) {
                        let mut c: Slots = path[i + 1..].iter().take(p - 1).map(|&v| Some(v)).collect();
                        c.resize(p - 1, None);
                        chains.insert(c);
                    }
                }
                let windows: Vec<Slots> = padded(&t.siblings(a), q)
                    .into_iter()
                    .filter(|w| w.contains(&Some(a)))
                    .collect();
                for c in &chains {
                    for w in &windows {
                        out.push((with_labels(t, c), with_labels(t, w)));
                    }
                }
            }
            out
        }
    }
}

pub fn owned(g: &DtGram<'_>) -> Owned {
    let conv = |s: &[Option<&str>]| s.iter().map(|x| x.map(str::to_string)).collect();
    (conv(&g.vertical), conv(&g.horizontal))
}

pub fn sorted<T: Ord>(mut v: Vec<T>) -> Vec<T> {
    v.sort();
    v
}

/// Writes a synthetic corpus and returns its manifest path.
pub fn synthetic_corpus(dir: &Path, cfg: SyntheticConfig) -> PathBuf {
    generate(dir, &cfg).expect("synthetic corpus")
}

/// The small corpus used by the pipeline and CLI tests.
pub fn small_config() -> SyntheticConfig {
    SyntheticConfig {
        n_authors: 4,
        docs_per_author: 3,
        sentences_per_doc: 12,
        ..Default::default()
    }
}
