//! DT-gram extraction.
//!
//! A DT-gram is a fixed-shape window laid over a labeled dependency tree.
//! Four shapes exist:
//!
//! * [`DtKind::Anc`]: a vertical chain of `p` nodes (ancestors above a node),
//! * [`DtKind::Sib`]: a horizontal run of `q` consecutive siblings,
//! * [`DtKind::Pq`]: a stem of `p` nodes ending at an anchor, followed by a
//!   window of `q` of the anchor's children,
//! * [`DtKind::Inv`]: a window of `q` siblings containing the anchor, with a
//!   downward chain of `p - 1` descendants hanging from the anchor.
//!
//! Slots that fall outside the tree hold the wildcard `X`. A window is only
//! emitted when at least one slot holds a real node. Anchors are visited in
//! depth-first pre-order with children in surface order; grams never cross
//! sentence boundaries.

use std::fmt;
use std::str::FromStr;

use crate::deptree::{LabeledTree, TreeShape};
use crate::error::{Error, Result};

pub const WILDCARD: &str = "X";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DtKind {
    Anc,
    Sib,
    Pq,
    Inv,
}

impl DtKind {
    pub const ALL: [DtKind; 4] = [DtKind::Anc, DtKind::Sib, DtKind::Pq, DtKind::Inv];

    pub fn as_str(self) -> &'static str {
        match self {
            DtKind::Anc => "anc",
            DtKind::Sib => "sib",
            DtKind::Pq => "pq",
            DtKind::Inv => "inv",
        }
    }
}

impl fmt::Display for DtKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DtKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "anc" => Ok(DtKind::Anc),
            "sib" => Ok(DtKind::Sib),
            "pq" => Ok(DtKind::Pq),
            "inv" => Ok(DtKind::Inv),
            other => Err(format!("unknown pattern `{other}` (expected anc, sib, pq or inv)")),
        }
    }
}

/// A DT-gram family together with its size parameters.
///
/// `vertical` counts tree levels covered by the pattern (anchor included),
/// `horizontal` counts sibling slots. `Anc` has no horizontal extent and
/// `Sib` no vertical one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DtGramPattern {
    kind: DtKind,
    vertical: usize,
    horizontal: usize,
}

impl DtGramPattern {
    pub fn new(kind: DtKind, vertical: usize, horizontal: usize) -> Result<Self> {
        let ok = match kind {
            DtKind::Anc => vertical >= 1 && horizontal == 0,
            DtKind::Sib => vertical == 0 && horizontal >= 1,
            DtKind::Pq | DtKind::Inv => vertical >= 1 && horizontal >= 1,
        };
        if !ok {
            return Err(Error::Config(format!(
                "invalid {kind} sizes: vertical={vertical}, horizontal={horizontal}"
            )));
        }
        Ok(DtGramPattern {
            kind,
            vertical,
            horizontal,
        })
    }

    pub fn anc(p: usize) -> Result<Self> {
        Self::new(DtKind::Anc, p, 0)
    }

    pub fn sib(q: usize) -> Result<Self> {
        Self::new(DtKind::Sib, 0, q)
    }

    pub fn pq(p: usize, q: usize) -> Result<Self> {
        Self::new(DtKind::Pq, p, q)
    }

    pub fn inv(p: usize, q: usize) -> Result<Self> {
        Self::new(DtKind::Inv, p, q)
    }

    pub fn kind(&self) -> DtKind {
        self.kind
    }

    pub fn vertical(&self) -> usize {
        self.vertical
    }

    pub fn horizontal(&self) -> usize {
        self.horizontal
    }

    /// Whether both sizes lie in the standard 1..=4 grid.
    pub fn on_standard_grid(&self) -> bool {
        let in_grid = |x: usize| (1..=4).contains(&x);
        match self.kind {
            DtKind::Anc => in_grid(self.vertical),
            DtKind::Sib => in_grid(self.horizontal),
            DtKind::Pq | DtKind::Inv => in_grid(self.vertical) && in_grid(self.horizontal),
        }
    }
}

/// Short name such as `anc3`, `sib2` or `pq2x3` (vertical x horizontal).
impl fmt::Display for DtGramPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DtKind::Anc => write!(f, "anc{}", self.vertical),
            DtKind::Sib => write!(f, "sib{}", self.horizontal),
            DtKind::Pq | DtKind::Inv => {
                write!(f, "{}{}x{}", self.kind, self.vertical, self.horizontal)
            }
        }
    }
}

/// One extracted instance. `None` slots are wildcards.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DtGram<'a> {
    pub kind: DtKind,
    pub vertical: Vec<Option<&'a str>>,
    pub horizontal: Vec<Option<&'a str>>,
}

fn escape_label(label: &str, out: &mut String) {
    if label == WILDCARD {
        out.push('\\');
        out.push_str(WILDCARD);
        return;
    }
    for c in label.chars() {
        if matches!(c, '>' | '|' | '[' | ']' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
}

fn push_slot(slot: Option<&str>, out: &mut String) {
    match slot {
        Some(label) => escape_label(label, out),
        None => out.push_str(WILDCARD),
    }
}

impl DtGram<'_> {
    pub fn has_label(&self) -> bool {
        self.vertical.iter().chain(&self.horizontal).any(Option::is_some)
    }

    /// Canonical form, e.g. `pq:X>dobj[det|nmod]`.
    pub fn serialize(&self) -> String {
        let mut out = String::with_capacity(16);
        out.push_str(self.kind.as_str());
        out.push(':');
        for (i, slot) in self.vertical.iter().enumerate() {
            if i > 0 {
                out.push('>');
            }
            push_slot(*slot, &mut out);
        }
        if !self.horizontal.is_empty() {
            out.push('[');
            for (i, slot) in self.horizontal.iter().enumerate() {
                if i > 0 {
                    out.push('|');
                }
                push_slot(*slot, &mut out);
            }
            out.push(']');
        }
        out
    }

    /// All slots joined with `-`, vertical part first (`X-dobj-det`).
    pub fn dashed(&self) -> String {
        self.vertical
            .iter()
            .chain(&self.horizontal)
            .map(|s| s.unwrap_or(WILDCARD))
            .collect::<Vec<_>>()
            .join("-")
    }
}

impl fmt::Display for DtGram<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

/// Owned slots of a parsed serialized gram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedGram {
    pub kind: DtKind,
    pub vertical: Vec<Option<String>>,
    pub horizontal: Vec<Option<String>>,
}

/// Inverse of [`DtGram::serialize`].
pub fn parse_gram(s: &str) -> Result<ParsedGram> {
    let bad = |m: &str| Error::Vocabulary(format!("bad gram `{s}`: {m}"));
    let (kind, body) = s.split_once(':').ok_or_else(|| bad("missing kind"))?;
    let kind: DtKind = kind.parse().map_err(|e: String| bad(&e))?;

    // Tokenize into slots, tracking which part each belongs to.
    let mut vertical = Vec::new();
    let mut horizontal = Vec::new();
    let mut in_bracket = false;
    let mut closed = false;
    let mut cur = String::new();
    let mut cur_escaped_x = false;
    let mut any = false;
    let mut chars = body.chars();

    fn finish(cur: &mut String, escaped_x: &mut bool, dst: &mut Vec<Option<String>>) {
        let slot = if cur == WILDCARD && !*escaped_x {
            None
        } else {
            Some(std::mem::take(cur))
        };
        cur.clear();
        *escaped_x = false;
        dst.push(slot);
    }

    while let Some(c) = chars.next() {
        if closed {
            return Err(bad("trailing characters"));
        }
        match c {
            '\\' => {
                let next = chars.next().ok_or_else(|| bad("dangling escape"))?;
                if next == 'X' && cur.is_empty() {
                    cur_escaped_x = true;
                }
                cur.push(next);
                any = true;
            }
            '>' if !in_bracket => finish(&mut cur, &mut cur_escaped_x, &mut vertical),
            '[' if !in_bracket => {
                if any || !cur.is_empty() {
                    finish(&mut cur, &mut cur_escaped_x, &mut vertical);
                }
                in_bracket = true;
                any = false;
            }
            '|' if in_bracket => finish(&mut cur, &mut cur_escaped_x, &mut horizontal),
            ']' if in_bracket => {
                finish(&mut cur, &mut cur_escaped_x, &mut horizontal);
                closed = true;
            }
            '>' | '[' | '|' | ']' => return Err(bad("unexpected delimiter")),
            other => {
                cur.push(other);
                any = true;
            }
        }
    }
    if in_bracket && !closed {
        return Err(bad("unclosed `[`"));
    }
    if !in_bracket && (any || !cur.is_empty()) {
        finish(&mut cur, &mut cur_escaped_x, &mut vertical);
    }
    Ok(ParsedGram {
        kind,
        vertical,
        horizontal,
    })
}

/// Serialized grams of one document, in emission order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GramSequence {
    pub doc_id: String,
    /// Feature descriptor, e.g. `pq2x3/dep` or `char3`.
    pub feature: String,
    pub grams: Vec<String>,
}

impl GramSequence {
    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }
}

type Window = Vec<Option<usize>>;

/// The `len` nodes ending at `node` going upwards, top-down, `X`-padded above
/// the root.
fn upward_window(shape: &TreeShape, node: usize, len: usize) -> Window {
    let mut w = vec![None; len];
    let mut cur = Some(node);
    for slot in w.iter_mut().rev() {
        match cur {
            Some(v) => {
                *slot = Some(v);
                cur = shape.parent(v);
            }
            None => break,
        }
    }
    w
}

/// Every width-`q` window over `items` padded with `q - 1` wildcards on each
/// side, left to right.
fn padded_windows(items: &[usize], q: usize) -> Vec<Window> {
    let mut padded: Window = vec![None; q - 1];
    padded.extend(items.iter().map(|&v| Some(v)));
    padded.extend(std::iter::repeat_n(None, q - 1));
    padded.windows(q).map(<[_]>::to_vec).collect()
}

/// Downward chains of exactly `len` slots starting at a child of `node`,
/// `X`-padded below leaves. Enumerated depth-first in child order.
fn downward_chains(shape: &TreeShape, node: usize, len: usize) -> Vec<Window> {
    fn walk(shape: &TreeShape, node: usize, len: usize, prefix: &mut Window, out: &mut Vec<Window>) {
        if prefix.len() == len {
            out.push(prefix.clone());
            return;
        }
        let children = shape.children(node);
        if children.is_empty() {
            let mut w = prefix.clone();
            w.resize(len, None);
            out.push(w);
            return;
        }
        for &c in children {
            prefix.push(Some(c));
            walk(shape, c, len, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    walk(shape, node, len, &mut Vec::with_capacity(len), &mut out);
    out
}

fn anc_windows(shape: &TreeShape, p: usize) -> Vec<Window> {
    let mut out = Vec::new();
    for v in shape.preorder() {
        out.push(upward_window(shape, v, p));
        if shape.is_leaf(v) {
            for k in 1..p {
                let mut w = upward_window(shape, v, p - k);
                w.extend(std::iter::repeat_n(None, k));
                out.push(w);
            }
        }
    }
    out
}

fn sib_windows(shape: &TreeShape, q: usize) -> Vec<Window> {
    let mut out = padded_windows(&[shape.root()], q);
    for v in shape.preorder() {
        let children = shape.children(v);
        if !children.is_empty() {
            out.extend(padded_windows(children, q));
        }
    }
    out
}

fn pq_windows(shape: &TreeShape, p: usize, q: usize) -> Vec<(Window, Window)> {
    let mut out = Vec::new();
    for a in shape.preorder() {
        let stem = upward_window(shape, a, p);
        let children = shape.children(a);
        if children.is_empty() {
            out.push((stem, vec![None; q]));
        } else {
            for base in padded_windows(children, q) {
                out.push((stem.clone(), base));
            }
        }
    }
    out
}

fn inv_windows(shape: &TreeShape, p: usize, q: usize) -> Vec<(Window, Window)> {
    let mut out = Vec::new();
    for a in shape.preorder() {
        let siblings = shape.siblings(a);
        let pos = siblings.iter().position(|&s| s == a).expect("node among its siblings");
        // In padded coordinates the anchor sits at pos + q - 1, so the windows
        // containing it start at pos ..= pos + q - 1.
        let windows = padded_windows(siblings, q);
        let bases = &windows[pos..pos + q];
        for chain in downward_chains(shape, a, p - 1) {
            for base in bases {
                out.push((chain.clone(), base.clone()));
            }
        }
    }
    out
}

fn labels_of<'a>(tree: &'a LabeledTree, w: &[Option<usize>]) -> Vec<Option<&'a str>> {
    w.iter().map(|s| s.map(|v| tree.label(v))).collect()
}

/// Ancestor chains of length `p`.
pub fn extract_anc(tree: &LabeledTree, p: usize) -> Vec<DtGram<'_>> {
    assert!(p >= 1, "anc size must be >= 1");
    anc_windows(tree.shape(), p)
        .iter()
        .map(|w| DtGram {
            kind: DtKind::Anc,
            vertical: labels_of(tree, w),
            horizontal: Vec::new(),
        })
        .collect()
}

/// Sibling runs of length `q`; the root forms its own run under a virtual
/// parent.
pub fn extract_sib(tree: &LabeledTree, q: usize) -> Vec<DtGram<'_>> {
    assert!(q >= 1, "sib size must be >= 1");
    sib_windows(tree.shape(), q)
        .iter()
        .map(|w| DtGram {
            kind: DtKind::Sib,
            vertical: Vec::new(),
            horizontal: labels_of(tree, w),
        })
        .collect()
}

/// PQ-grams: stem of `p` (anchor last) plus a window of `q` children. A leaf
/// anchor gets a single all-wildcard base.
pub fn extract_pq(tree: &LabeledTree, p: usize, q: usize) -> Vec<DtGram<'_>> {
    assert!(p >= 1 && q >= 1, "pq sizes must be >= 1");
    pq_windows(tree.shape(), p, q)
        .iter()
        .map(|(stem, base)| DtGram {
            kind: DtKind::Pq,
            vertical: labels_of(tree, stem),
            horizontal: labels_of(tree, base),
        })
        .collect()
}

/// Inverted PQ-grams: a window of `q` siblings containing the anchor, plus a
/// chain of `p - 1` descendants below the anchor (the vertical part). The
/// anchor itself is stored once, in the horizontal part.
pub fn extract_inv(tree: &LabeledTree, p: usize, q: usize) -> Vec<DtGram<'_>> {
    assert!(p >= 1 && q >= 1, "inv sizes must be >= 1");
    inv_windows(tree.shape(), p, q)
        .iter()
        .map(|(chain, base)| DtGram {
            kind: DtKind::Inv,
            vertical: labels_of(tree, chain),
            horizontal: labels_of(tree, base),
        })
        .collect()
}

pub fn extract(tree: &LabeledTree, pattern: DtGramPattern) -> Vec<DtGram<'_>> {
    match pattern.kind {
        DtKind::Anc => extract_anc(tree, pattern.vertical),
        DtKind::Sib => extract_sib(tree, pattern.horizontal),
        DtKind::Pq => extract_pq(tree, pattern.vertical, pattern.horizontal),
        DtKind::Inv => extract_inv(tree, pattern.vertical, pattern.horizontal),
    }
}

/// Concatenates the per-sentence sequences of a document.
pub fn extract_document(doc_id: &str, feature: &str, trees: &[LabeledTree], pattern: DtGramPattern) -> GramSequence {
    let grams = trees
        .iter()
        .flat_map(|t| extract(t, pattern).into_iter().map(|g| g.serialize()))
        .collect();
    GramSequence {
        doc_id: doc_id.to_string(),
        feature: feature.to_string(),
        grams,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deptree::{fixtures, label_tree, parse_conllu, NodeLabeling};

    fn mouse(labeling: NodeLabeling) -> LabeledTree {
        let parsed = parse_conllu(fixtures::MOUSE_SUBTREE).unwrap();
        label_tree(&parsed.trees[0], labeling)
    }

    fn dashed(grams: &[DtGram<'_>]) -> Vec<String> {
        grams.iter().map(DtGram::dashed).collect()
    }

    #[test]
    fn anc_eleven_in_order() {
        let tree = mouse(NodeLabeling::DepRel);
        assert_eq!(
            dashed(&extract_anc(&tree, 3)),
            [
                "X-X-dobj", "X-dobj-det", "dobj-det-X", "det-X-X", "X-dobj-nmod", "dobj-nmod-case",
                "nmod-case-X", "case-X-X", "dobj-nmod-det", "nmod-det-X", "det-X-X",
            ]
        );
    }

    #[test]
    fn sib_mouse_q2() {
        let tree = mouse(NodeLabeling::DepRel);
        assert_eq!(
            dashed(&extract_sib(&tree, 2)),
            ["X-dobj", "dobj-X", "X-det", "det-nmod", "nmod-X", "X-case", "case-det", "det-X"]
        );
    }

    #[test]
    fn pq_mouse_p1_q1() {
        let tree = mouse(NodeLabeling::DepRel);
        let got: Vec<String> = extract_pq(&tree, 1, 1).iter().map(DtGram::serialize).collect();
        assert_eq!(
            got,
            [
                "pq:dobj[det]", "pq:dobj[nmod]", "pq:det[X]", "pq:nmod[case]", "pq:nmod[det]",
                "pq:case[X]", "pq:det[X]",
            ]
        );
    }

    #[test]
    fn pq_single_node() {
        let tree = LabeledTree::new(vec!["root".into()], &[0]).unwrap();
        let got: Vec<String> = extract_pq(&tree, 2, 2).iter().map(DtGram::serialize).collect();
        assert_eq!(got, ["pq:X>root[X|X]"]);
    }

    #[test]
    fn inv_mouse_p2_q1() {
        let tree = mouse(NodeLabeling::DepRel);
        assert_eq!(
            dashed(&extract_inv(&tree, 2, 1))
                .iter()
                .map(|s| {
                    // dashed() puts the vertical chain first; show anchor first.
                    let (chain, anchor) = s.split_once('-').unwrap();
                    format!("{anchor}-{chain}")
                })
                .collect::<Vec<_>>(),
            ["dobj-det", "dobj-nmod", "det-X", "nmod-case", "nmod-det", "case-X", "det-X"]
        );
    }

    #[test]
    fn inv_single_node_degenerates_to_unigram() {
        let tree = LabeledTree::new(vec!["root".into()], &[0]).unwrap();
        let got: Vec<String> = extract_inv(&tree, 1, 1).iter().map(DtGram::serialize).collect();
        assert_eq!(got, ["inv:[root]"]);
    }

    #[test]
    fn inv_windows_contain_anchor() {
        // root with three children; middle child anchors 3 windows at q=3.
        let tree = LabeledTree::new(
            ["r", "a", "b", "c"].map(String::from).to_vec(),
            &[0, 1, 1, 1],
        )
        .unwrap();
        let got: Vec<String> = extract_inv(&tree, 1, 3).iter().map(DtGram::serialize).collect();
        assert_eq!(got.len(), 4 * 3);
        assert_eq!(&got[..3], ["inv:[X|X|r]", "inv:[X|r|X]", "inv:[r|X|X]"]);
        assert_eq!(&got[6..9], ["inv:[X|a|b]", "inv:[a|b|c]", "inv:[b|c|X]"]);
    }

    #[test]
    fn sizes_one_give_unigrams() {
        let tree = mouse(NodeLabeling::Upos);
        let mut anc = dashed(&extract_anc(&tree, 1));
        let mut sib = dashed(&extract_sib(&tree, 1));
        let mut labels = tree.labels().to_vec();
        anc.sort();
        sib.sort();
        labels.sort();
        assert_eq!(anc, labels);
        assert_eq!(sib, labels);
    }

    #[test]
    fn chain_count() {
        // 5-node chain
        let tree = LabeledTree::new(
            ["a", "b", "c", "d", "e"].map(String::from).to_vec(),
            &[0, 1, 2, 3, 4],
        )
        .unwrap();
        for p in 1..=6 {
            assert_eq!(extract_anc(&tree, p).len(), 5 + p - 1);
        }
    }

    #[test]
    fn serialization_escapes() {
        let g = DtGram {
            kind: DtKind::Pq,
            vertical: vec![None, Some("X"), Some("a>b")],
            horizontal: vec![Some("c|d"), Some("[e]"), Some("f\\g"), None],
        };
        let s = g.serialize();
        assert_eq!(s, r"pq:X>\X>a\>b[c\|d|\[e\]|f\\g|X]");
        let parsed = parse_gram(&s).unwrap();
        assert_eq!(parsed.vertical, vec![None, Some("X".into()), Some("a>b".into())]);
        assert_eq!(
            parsed.horizontal,
            vec![Some("c|d".into()), Some("[e]".into()), Some("f\\g".into()), None]
        );
    }

    #[test]
    fn serialization_omits_empty_parts() {
        let tree = mouse(NodeLabeling::DepRel);
        assert_eq!(extract_anc(&tree, 2)[0].serialize(), "anc:X>dobj");
        assert_eq!(extract_sib(&tree, 2)[0].serialize(), "sib:[X|dobj]");
        assert_eq!(extract_pq(&tree, 2, 2)[0].serialize(), "pq:X>dobj[X|det]");
    }

    #[test]
    fn pattern_validation() {
        assert!(DtGramPattern::anc(0).is_err());
        assert!(DtGramPattern::new(DtKind::Anc, 2, 1).is_err());
        assert!(DtGramPattern::new(DtKind::Sib, 1, 2).is_err());
        assert!(DtGramPattern::pq(1, 0).is_err());
        assert!(!DtGramPattern::inv(5, 1).unwrap().on_standard_grid());
        assert_eq!(DtGramPattern::pq(2, 3).unwrap().to_string(), "pq2x3");
        assert_eq!(DtGramPattern::anc(3).unwrap().to_string(), "anc3");
    }

    #[test]
    fn document_concatenates_and_handles_empty() {
        let tree = mouse(NodeLabeling::DepRel);
        let pat = DtGramPattern::anc(3).unwrap();
        let single = extract_document("d", "anc3/dep", std::slice::from_ref(&tree), pat);
        let double = extract_document("d", "anc3/dep", &[tree.clone(), tree], pat);
        assert_eq!(double.grams.len(), 2 * single.grams.len());
        assert_eq!(&double.grams[..11], &single.grams[..]);
        assert_eq!(&double.grams[11..], &single.grams[..]);
        assert!(extract_document("e", "anc3/dep", &[], pat).is_empty());
    }
}
