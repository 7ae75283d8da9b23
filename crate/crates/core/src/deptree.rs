//! Dependency trees read from CoNLL-U, and their language-independent node
//! labelings.
//!
//! Only the basic dependency layer is used: column 4 (UPOS), column 7 (HEAD)
//! and column 8 (DEPREL). Multiword-token ranges (`1-2`) and empty nodes
//! (`3.1`) are skipped, and the enhanced DEPS column is ignored.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The 17 universal part-of-speech tags.
pub const UPOS_TAGS: [&str; 17] = [
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM", "PART", "PRON", "PROPN",
    "PUNCT", "SCONJ", "SYM", "VERB", "X",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// 1-based position in the sentence.
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub deprel: String,
    /// Index of the governing token, 0 for the root.
    pub head: usize,
}

impl Token {
    pub fn upos_is_universal(&self) -> bool {
        UPOS_TAGS.contains(&self.upos.as_str())
    }

    /// The relation with any language-specific subtype (`nmod:poss`) removed.
    pub fn base_deprel(&self) -> &str {
        self.deprel.split(':').next().unwrap_or(&self.deprel)
    }
}

/// Parent/child structure shared by [`DepTree`] and [`LabeledTree`].
///
/// Nodes are addressed by 0-based position, i.e. `token.index - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeShape {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    root: usize,
}

impl TreeShape {
    /// Builds a shape from 1-based heads (0 marks the root), checking that
    /// they form a single rooted tree.
    pub fn from_heads(heads: &[usize]) -> Result<Self> {
        let n = heads.len();
        if n == 0 {
            return Err(Error::Tree("empty sentence".into()));
        }
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let mut roots = Vec::new();
        for (i, &head) in heads.iter().enumerate() {
            if head == 0 {
                roots.push(i);
            } else if head > n {
                return Err(Error::Tree(format!(
                    "token {} has head {} beyond sentence length {}",
                    i + 1,
                    head,
                    n
                )));
            } else if head == i + 1 {
                return Err(Error::Tree(format!("cycle: token {} is its own head", i + 1)));
            } else {
                parent[i] = Some(head - 1);
                children[head - 1].push(i);
            }
        }
        let root = match roots.as_slice() {
            [r] => *r,
            [] => return Err(Error::Tree("no root (no token has head 0)".into())),
            many => {
                let ids: Vec<String> = many.iter().map(|r| (r + 1).to_string()).collect();
                return Err(Error::Tree(format!("multiple roots: tokens {}", ids.join(", "))));
            }
        };
        // Children were pushed in ascending index order already.
        let shape = TreeShape {
            parent,
            children,
            root,
        };
        let reached = shape.preorder().len();
        if reached != n {
            let mut seen = vec![false; n];
            for v in shape.preorder() {
                seen[v] = true;
            }
            let stray: Vec<String> = (0..n)
                .filter(|&i| !seen[i])
                .map(|i| (i + 1).to_string())
                .collect();
            return Err(Error::Tree(format!(
                "cycle among heads of tokens {}",
                stray.join(", ")
            )));
        }
        Ok(shape)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    /// Dependents of `node` in ascending surface order.
    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        self.children[node].is_empty()
    }

    /// Depth-first pre-order from the root, children in surface order.
    pub fn preorder(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.len());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            order.push(v);
            stack.extend(self.children[v].iter().rev());
        }
        order
    }

    /// Siblings of `node` including itself, in surface order. The root is
    /// the only child of a virtual parent.
    pub fn siblings(&self, node: usize) -> &[usize] {
        match self.parent[node] {
            Some(p) => &self.children[p],
            None => std::slice::from_ref(&self.root),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepTree {
    tokens: Vec<Token>,
    shape: TreeShape,
}

impl DepTree {
    pub fn new(tokens: Vec<Token>) -> Result<Self> {
        for (i, t) in tokens.iter().enumerate() {
            if t.index != i + 1 {
                return Err(Error::Tree(format!(
                    "token ids must run 1..n, found {} at position {}",
                    t.index,
                    i + 1
                )));
            }
        }
        let heads: Vec<usize> = tokens.iter().map(|t| t.head).collect();
        let shape = TreeShape::from_heads(&heads)?;
        Ok(DepTree { tokens, shape })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn shape(&self) -> &TreeShape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// 1-based index of the root token.
    pub fn root_index(&self) -> usize {
        self.shape.root + 1
    }

    /// Writes the tree as CoNLL-U with the columns this crate reads; the
    /// others are `_`.
    pub fn to_conllu(&self) -> String {
        let mut out = String::new();
        for t in &self.tokens {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t_\t_\t{}\t{}\t_\t_\n",
                t.index, t.form, t.lemma, t.upos, t.head, t.deprel
            ));
        }
        out
    }
}

/// Which token attribute becomes the node label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeLabeling {
    /// Incoming dependency relation (subtype stripped).
    #[serde(rename = "dep")]
    DepRel,
    /// Universal POS tag.
    Upos,
    /// `deprel/UPOS`.
    Both,
}

impl NodeLabeling {
    pub const ALL: [NodeLabeling; 3] = [NodeLabeling::DepRel, NodeLabeling::Upos, NodeLabeling::Both];

    pub fn label(self, token: &Token) -> String {
        match self {
            NodeLabeling::DepRel => token.base_deprel().to_string(),
            NodeLabeling::Upos => token.upos.clone(),
            NodeLabeling::Both => format!("{}/{}", token.base_deprel(), token.upos),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeLabeling::DepRel => "dep",
            NodeLabeling::Upos => "upos",
            NodeLabeling::Both => "both",
        }
    }
}

impl fmt::Display for NodeLabeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeLabeling {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "dep" | "deprel" => Ok(NodeLabeling::DepRel),
            "upos" => Ok(NodeLabeling::Upos),
            "both" => Ok(NodeLabeling::Both),
            other => Err(format!("unknown labeling `{other}` (expected dep, upos or both)")),
        }
    }
}

/// A tree whose nodes carry plain label strings.
///
/// Labels are stored unescaped; the wildcard is never a label here; it only
/// appears inside extracted grams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledTree {
    labels: Vec<String>,
    shape: TreeShape,
}

impl LabeledTree {
    /// Builds a labeled tree directly from labels and 1-based heads.
    pub fn new(labels: Vec<String>, heads: &[usize]) -> Result<Self> {
        if labels.len() != heads.len() {
            return Err(Error::Tree(format!(
                "{} labels for {} heads",
                labels.len(),
                heads.len()
            )));
        }
        Ok(LabeledTree {
            labels,
            shape: TreeShape::from_heads(heads)?,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> &str {
        &self.labels[node]
    }

    pub fn shape(&self) -> &TreeShape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn label_tree(tree: &DepTree, labeling: NodeLabeling) -> LabeledTree {
    LabeledTree {
        labels: tree.tokens.iter().map(|t| labeling.label(t)).collect(),
        shape: tree.shape.clone(),
    }
}

/// A sentence that was skipped because its heads do not form a tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedSentence {
    /// Line of the sentence's first token.
    pub line: usize,
    pub reason: String,
}

/// Result of reading one CoNLL-U document.
#[derive(Debug, Clone, Default)]
pub struct ParsedConllu {
    pub trees: Vec<DepTree>,
    pub rejected: Vec<RejectedSentence>,
}

/// Reads every sentence of a CoNLL-U document.
///
/// Sentences whose heads are cyclic, rootless or multiply rooted are dropped
/// and reported in [`ParsedConllu::rejected`]; a structurally malformed line
/// fails the whole document.
pub fn parse_conllu(content: &str) -> Result<ParsedConllu> {
    let mut parsed = ParsedConllu::default();
    let mut tokens: Vec<Token> = Vec::new();
    let mut start_line = 0;

    let flush = |tokens: &mut Vec<Token>, start_line: usize, parsed: &mut ParsedConllu| {
        if tokens.is_empty() {
            return;
        }
        match DepTree::new(std::mem::take(tokens)) {
            Ok(tree) => parsed.trees.push(tree),
            Err(e) => {
                let reason = match e {
                    Error::Tree(msg) => msg,
                    other => other.to_string(),
                };
                log::warn!("dropping sentence at line {start_line}: {reason}");
                parsed.rejected.push(RejectedSentence {
                    line: start_line,
                    reason,
                });
            }
        }
    };

    for (i, raw) in content.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            flush(&mut tokens, start_line, &mut parsed);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::Conllu {
                line: line_no,
                message: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        let id = cols[0];
        if id.contains('-') || id.contains('.') {
            continue;
        }
        let index: usize = id.parse().map_err(|_| Error::Conllu {
            line: line_no,
            message: format!("bad token id `{id}`"),
        })?;
        let head: usize = cols[6].parse().map_err(|_| Error::Conllu {
            line: line_no,
            message: format!("bad head `{}`", cols[6]),
        })?;
        for (col, name) in [(3, "UPOS"), (7, "DEPREL")] {
            if cols[col].is_empty() {
                return Err(Error::Conllu {
                    line: line_no,
                    message: format!("empty {name} column"),
                });
            }
        }
        if tokens.is_empty() {
            start_line = line_no;
        }
        if index != tokens.len() + 1 {
            return Err(Error::Conllu {
                line: line_no,
                message: format!("token id {index} out of sequence (expected {})", tokens.len() + 1),
            });
        }
        let token = Token {
            index,
            form: cols[1].to_string(),
            lemma: cols[2].to_string(),
            upos: cols[3].to_string(),
            deprel: cols[7].to_string(),
            head,
        };
        if !token.upos_is_universal() {
            log::debug!("line {line_no}: non-universal UPOS tag `{}` kept verbatim", token.upos);
        }
        tokens.push(token);
    }
    flush(&mut tokens, start_line, &mut parsed);
    Ok(parsed)
}
