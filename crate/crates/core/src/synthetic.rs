//! Synthetic bilingual corpora with a planted grammatical author signal.
//!
//! Every author owns a preference over a shared pool of small labeled
//! subtree templates; sentences are built by hanging templates off a verbal
//! root. The same preferences are used in both pseudo-languages, so tree
//! shapes carry over across languages. Word forms are drawn uniformly from a
//! per-language vocabulary, independently of the author, and the two
//! vocabularies are disjoint, so surface words carry no author signal at all.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitRng};

const DEPRELS: [&str; 18] = [
    "nsubj", "obj", "iobj", "obl", "advmod", "amod", "det", "case", "nmod", "aux", "mark", "conj",
    "cc", "compound", "xcomp", "ccomp", "acl", "nummod",
];

const UPOS: [&str; 14] = [
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "NOUN", "NUM", "PART", "PRON", "PROPN", "SCONJ",
    "VERB", "INTJ",
];

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub n_authors: usize,
    /// Documents per author and language.
    pub docs_per_author: usize,
    pub sentences_per_doc: usize,
    pub languages: (String, String),
    /// Size of the shared template pool.
    pub templates: usize,
    /// Templates each author favours.
    pub favourites: usize,
    /// Probability mass an author puts on their favourites.
    pub favourite_mass: f64,
    pub vocabulary_size: usize,
    /// Leave the `conllu_path` column empty.
    pub without_parses: bool,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_authors: 10,
            docs_per_author: 10,
            sentences_per_doc: 20,
            languages: ("en".into(), "de".into()),
            templates: 30,
            favourites: 4,
            favourite_mass: 0.6,
            vocabulary_size: 400,
            without_parses: false,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
struct TemplateNode {
    deprel: &'static str,
    upos: &'static str,
    /// Index of the parent inside the template; `None` for the template root.
    parent: Option<usize>,
    /// Placed before its head in surface order.
    left: bool,
}

type Template = Vec<TemplateNode>;

fn make_template(rng: &mut SplitRng) -> Template {
    let size = 2 + rng.below(4) as usize;
    (0..size)
        .map(|i| TemplateNode {
            deprel: DEPRELS[rng.below(DEPRELS.len() as u64) as usize],
            upos: UPOS[rng.below(UPOS.len() as u64) as usize],
            parent: (i > 0).then(|| rng.below(i as u64) as usize),
            left: rng.below(2) == 0,
        })
        .collect()
}

struct Node {
    deprel: &'static str,
    upos: &'static str,
    left: bool,
    children: Vec<usize>,
}

/// Author preference: cumulative distribution over template indices.
fn author_cdf(rng: &mut SplitRng, cfg: &SyntheticConfig) -> Vec<f64> {
    let favs = rng.sample(cfg.templates, cfg.favourites.min(cfg.templates));
    let rest = (1.0 - cfg.favourite_mass) / cfg.templates as f64;
    let mut weights = vec![rest; cfg.templates];
    for f in favs {
        weights[f] += cfg.favourite_mass / cfg.favourites as f64;
    }
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

fn pick(cdf: &[f64], rng: &mut SplitRng) -> usize {
    let u = rng.unit() * cdf[cdf.len() - 1];
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

fn linearize(nodes: &[Node], v: usize, out: &mut Vec<usize>) {
    for &c in nodes[v].children.iter().filter(|&&c| nodes[c].left) {
        linearize(nodes, c, out);
    }
    out.push(v);
    for &c in nodes[v].children.iter().filter(|&&c| !nodes[c].left) {
        linearize(nodes, c, out);
    }
}

fn word(lang_initial: char, k: usize) -> String {
    const SYL: [&str; 8] = ["ka", "lo", "mi", "ne", "ru", "ta", "vi", "zo"];
    let mut w = String::new();
    w.push(lang_initial);
    let mut x = k;
    loop {
        w.push_str(SYL[x % SYL.len()]);
        x /= SYL.len();
        if x == 0 {
            break;
        }
    }
    w
}

/// One sentence as CoNLL-U lines plus its text.
fn sentence(rng: &mut SplitRng, templates: &[Template], cdf: &[f64], lang_initial: char, vocab: usize) -> (String, String) {
    let mut nodes = vec![Node {
        deprel: "root",
        upos: "VERB",
        left: false,
        children: Vec::new(),
    }];
    let attached = 1 + rng.below(3) as usize;
    for _ in 0..attached {
        let t = &templates[pick(cdf, rng)];
        let base = nodes.len();
        for n in t {
            nodes.push(Node {
                deprel: n.deprel,
                upos: n.upos,
                left: n.left,
                children: Vec::new(),
            });
        }
        for (i, n) in t.iter().enumerate() {
            let parent = n.parent.map_or(0, |p| base + p);
            nodes[parent].children.push(base + i);
        }
    }
    let punct = nodes.len();
    nodes.push(Node {
        deprel: "punct",
        upos: "PUNCT",
        left: false,
        children: Vec::new(),
    });
    nodes[0].children.push(punct);

    let mut order = Vec::with_capacity(nodes.len());
    linearize(&nodes, 0, &mut order);
    let mut position = vec![0; nodes.len()];
    for (i, &v) in order.iter().enumerate() {
        position[v] = i + 1;
    }
    let mut head = vec![0; nodes.len()];
    for (v, n) in nodes.iter().enumerate() {
        for &c in &n.children {
            head[c] = position[v];
        }
    }

    let forms: Vec<String> = order
        .iter()
        .map(|&v| {
            if v == punct {
                ".".to_string()
            } else {
                word(lang_initial, rng.below(vocab as u64) as usize)
            }
        })
        .collect();
    let text = {
        let body = forms[..forms.len() - 1].join(" ");
        format!("{body}.")
    };
    let mut conllu = format!("# text = {text}\n");
    for (i, &v) in order.iter().enumerate() {
        let n = &nodes[v];
        let _ = writeln!(
            conllu,
            "{}\t{}\t{}\t{}\t_\t_\t{}\t{}\t_\t_",
            i + 1,
            forms[i],
            forms[i],
            n.upos,
            head[v],
            n.deprel
        );
    }
    (conllu, text)
}

/// Writes the corpus into `dir` and returns the manifest path.
pub fn generate(dir: &Path, cfg: &SyntheticConfig) -> Result<PathBuf> {
    if cfg.languages.0 == cfg.languages.1 {
        return Err(Error::Config("synthetic languages must differ".into()));
    }
    let initial = |l: &str| l.chars().next().unwrap_or('w');
    let (ia, ib) = (initial(&cfg.languages.0), initial(&cfg.languages.1));
    // Distinct leading letters keep the two vocabularies disjoint.
    let (ia, ib) = if ia == ib { ('a', 'b') } else { (ia, ib) };

    std::fs::create_dir_all(dir.join("docs")).map_err(|e| Error::io(dir, e))?;
    let mut rng = SplitRng::new(cfg.seed);
    let templates: Vec<Template> = (0..cfg.templates).map(|_| make_template(&mut rng)).collect();

    let mut manifest = String::from("doc_id,author_id,language,text_path,conllu_path\n");
    for a in 0..cfg.n_authors {
        let author = format!("author{a:02}");
        let cdf = author_cdf(&mut rng, cfg);
        for (lang, init) in [(&cfg.languages.0, ia), (&cfg.languages.1, ib)] {
            for d in 0..cfg.docs_per_author {
                let doc_id = format!("{author}_{lang}_{d:02}");
                let mut doc_rng = SplitRng::new(derive_seed(rng.next_u64(), d as u64));
                let mut conllu = String::new();
                let mut text = Vec::new();
                for _ in 0..cfg.sentences_per_doc {
                    let (c, t) = sentence(&mut doc_rng, &templates, &cdf, init, cfg.vocabulary_size);
                    conllu.push_str(&c);
                    conllu.push('\n');
                    text.push(t);
                }
                let text_rel = format!("docs/{doc_id}.txt");
                let conllu_rel = format!("docs/{doc_id}.conllu");
                let write = |rel: &str, body: &str| {
                    let p = dir.join(rel);
                    std::fs::write(&p, body).map_err(|e| Error::io(p, e))
                };
                write(&text_rel, &(text.join(" ") + "\n"))?;
                write(&conllu_rel, &conllu)?;
                let parse_col = if cfg.without_parses { "" } else { conllu_rel.as_str() };
                let _ = writeln!(manifest, "{doc_id},{author},{lang},{text_rel},{parse_col}");
            }
        }
    }
    let path = dir.join("manifest.csv");
    std::fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
