//! Repeated cross-language evaluation over a feature × C grid.
//!
//! One repetition draws one author/document selection, then for both
//! directions (train on one language, test on the other) and every grid cell
//! extracts features, fits the vocabulary, trains the SVM and scores
//! macro-F1 on the held-out language. Rows are aggregated into per-cell means
//! and per-family maxima and written as three CSV files.
//!
//! The maxima pick the best cell using test-set scores, so they are an
//! optimistic statistic; `results_mean.csv` carries every cell for honest
//! comparison.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{sample_split, Corpus, ExperimentSplit};
use crate::deptree::{label_tree, DepTree, NodeLabeling};
use crate::dtgram::{extract_document, DtGramPattern, DtKind, GramSequence};
use crate::error::{Error, Result};
use crate::metrics::macro_f1;
use crate::ngram::{char_ngrams, upos_ngrams, word_ngrams, NgramSpec, NgramUnit};
use crate::rng::derive_seed;
use crate::svm::{train, TrainOptions};
use crate::vectorize::Vocabulary;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureSpec {
    Ngram(NgramSpec),
    Dt {
        pattern: DtGramPattern,
        labeling: NodeLabeling,
    },
}

/// Feature groups reported in `results_max.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Char,
    Word,
    Upos,
    DtAnc,
    DtSib,
    DtPq,
    DtInv,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Char => "char",
            Family::Word => "word",
            Family::Upos => "upos",
            Family::DtAnc => "dt_anc",
            Family::DtSib => "dt_sib",
            Family::DtPq => "dt_pq",
            Family::DtInv => "dt_inv",
        }
    }

    pub fn is_dtgram(self) -> bool {
        matches!(self, Family::DtAnc | Family::DtSib | Family::DtPq | Family::DtInv)
    }
}

/// Name of the family row that takes the maximum over all four DT-gram kinds.
pub const DTGRAM_FAMILY: &str = "dtgram";

impl FeatureSpec {
    pub fn dt(pattern: DtGramPattern, labeling: NodeLabeling) -> Self {
        FeatureSpec::Dt { pattern, labeling }
    }

    pub fn ngram(unit: NgramUnit, n: usize) -> Self {
        FeatureSpec::Ngram(NgramSpec::new(unit, n))
    }

    /// `char3`, `anc2`, `pq2x3`, ...
    pub fn descriptor(&self) -> String {
        match self {
            FeatureSpec::Ngram(s) => s.to_string(),
            FeatureSpec::Dt { pattern, .. } => pattern.to_string(),
        }
    }

    /// `dep`, `upos`, `both`, or `-` for n-grams.
    pub fn labeling_str(&self) -> &'static str {
        match self {
            FeatureSpec::Ngram(_) => "-",
            FeatureSpec::Dt { labeling, .. } => labeling.as_str(),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            FeatureSpec::Ngram(s) => match s.unit {
                NgramUnit::Char => Family::Char,
                NgramUnit::Word => Family::Word,
                NgramUnit::Upos => Family::Upos,
            },
            FeatureSpec::Dt { pattern, .. } => match pattern.kind() {
                DtKind::Anc => Family::DtAnc,
                DtKind::Sib => Family::DtSib,
                DtKind::Pq => Family::DtPq,
                DtKind::Inv => Family::DtInv,
            },
        }
    }

    pub fn needs_parse(&self) -> bool {
        match self {
            FeatureSpec::Ngram(s) => s.unit.needs_parse(),
            FeatureSpec::Dt { .. } => true,
        }
    }

    pub fn needs_text(&self) -> bool {
        !self.needs_parse()
    }

    pub fn extract(&self, doc_id: &str, doc: &LoadedDocument) -> Result<GramSequence> {
        match self {
            FeatureSpec::Ngram(s) => match s.unit {
                NgramUnit::Char => Ok(char_ngrams(doc_id, doc.text()?, s.n)),
                NgramUnit::Word => Ok(word_ngrams(doc_id, doc.text()?, s.n)),
                NgramUnit::Upos => Ok(upos_ngrams(doc_id, doc.trees()?, s.n)),
            },
            FeatureSpec::Dt { pattern, labeling } => {
                let labeled: Vec<_> = doc.trees()?.iter().map(|t| label_tree(t, *labeling)).collect();
                Ok(extract_document(doc_id, &self.to_string(), &labeled, *pattern))
            }
        }
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureSpec::Ngram(s) => write!(f, "{s}"),
            FeatureSpec::Dt { pattern, labeling } => write!(f, "{pattern}/{labeling}"),
        }
    }
}

/// Text and/or parse of one document; load failures are kept so that only
/// the cells needing the missing part fail.
#[derive(Debug, Default)]
pub struct LoadedDocument {
    text: Option<std::result::Result<String, String>>,
    trees: Option<std::result::Result<Vec<DepTree>, String>>,
}

impl LoadedDocument {
    pub fn load(corpus: &Corpus, doc_id: &str, text: bool, trees: bool) -> Result<Self> {
        let rec = corpus
            .document(doc_id)
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))?;
        Ok(LoadedDocument {
            text: text.then(|| corpus.read_text(rec).map_err(|e| e.to_string())),
            trees: trees.then(|| corpus.read_trees(rec).map_err(|e| e.to_string())),
        })
    }

    pub fn from_parts(text: Option<String>, trees: Option<Vec<DepTree>>) -> Self {
        LoadedDocument {
            text: text.map(Ok),
            trees: trees.map(Ok),
        }
    }

    fn text(&self) -> Result<&str> {
        match &self.text {
            Some(Ok(t)) => Ok(t),
            Some(Err(e)) => Err(Error::Report(e.clone())),
            None => Err(Error::Report("document text not loaded".into())),
        }
    }

    fn trees(&self) -> Result<&[DepTree]> {
        match &self.trees {
            Some(Ok(t)) => Ok(t),
            Some(Err(e)) => Err(Error::Report(e.clone())),
            None => Err(Error::Report("document parse not loaded".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdfScope {
    /// Vocabulary and idf from training documents only.
    #[default]
    Train,
    /// Vocabulary and idf from training and test documents (leaks test
    /// terms; offered for comparison only).
    All,
}

impl std::str::FromStr for IdfScope {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "train" => Ok(IdfScope::Train),
            "all" => Ok(IdfScope::All),
            other => Err(format!("unknown idf scope `{other}` (expected train or all)")),
        }
    }
}

/// Grid definition; also the schema of the TOML config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub schema_version: u32,
    pub ngram_units: Vec<NgramUnit>,
    pub ngram_sizes: Vec<usize>,
    pub dt_kinds: Vec<DtKind>,
    pub dt_vertical: Vec<usize>,
    pub dt_horizontal: Vec<usize>,
    pub labelings: Vec<NodeLabeling>,
    pub c_values: Vec<f64>,
    pub repetitions: usize,
    pub n_authors: usize,
    pub docs_per_author: usize,
    pub seed: u64,
    pub idf_scope: IdfScope,
    pub min_df: u32,
    /// Record per-cell wall time (makes `results_raw.csv` run-dependent).
    pub timing: bool,
    pub svm_tolerance: f64,
    pub svm_max_epochs: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            ngram_units: NgramUnit::ALL.to_vec(),
            ngram_sizes: vec![1, 2, 3],
            dt_kinds: DtKind::ALL.to_vec(),
            dt_vertical: vec![1, 2, 3, 4],
            dt_horizontal: vec![1, 2, 3, 4],
            labelings: NodeLabeling::ALL.to_vec(),
            c_values: vec![0.1, 1.0, 10.0],
            repetitions: 10,
            n_authors: 10,
            docs_per_author: 10,
            seed: 0,
            idf_scope: IdfScope::Train,
            min_df: 1,
            timing: false,
            svm_tolerance: 1e-3,
            svm_max_epochs: 1000,
        }
    }
}

impl GridConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: GridConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return fail(format!(
                "schema_version {} not supported (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.c_values.is_empty() || self.c_values.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return fail("c_values must be a nonempty list of positive numbers".into());
        }
        if [&self.ngram_sizes, &self.dt_vertical, &self.dt_horizontal]
            .iter()
            .any(|v| v.contains(&0))
        {
            return fail("sizes must be >= 1".into());
        }
        if self.repetitions == 0 || self.n_authors < 2 || self.docs_per_author == 0 {
            return fail("need repetitions >= 1, n_authors >= 2, docs_per_author >= 1".into());
        }
        if self.features().is_empty() {
            return fail("grid has no features".into());
        }
        Ok(())
    }

    /// Feature axis in grid order: n-grams by unit then size, then DT-grams by
    /// kind, sizes (vertical-major) and labeling.
    pub fn features(&self) -> Vec<FeatureSpec> {
        let mut out = Vec::new();
        for &unit in &self.ngram_units {
            for &n in &self.ngram_sizes {
                out.push(FeatureSpec::ngram(unit, n));
            }
        }
        for &kind in &self.dt_kinds {
            let patterns: Vec<DtGramPattern> = match kind {
                DtKind::Anc => self.dt_vertical.iter().filter_map(|&p| DtGramPattern::anc(p).ok()).collect(),
                DtKind::Sib => self.dt_horizontal.iter().filter_map(|&q| DtGramPattern::sib(q).ok()).collect(),
                DtKind::Pq | DtKind::Inv => self
                    .dt_vertical
                    .iter()
                    .flat_map(|&p| self.dt_horizontal.iter().map(move |&q| (p, q)))
                    .filter_map(|(p, q)| DtGramPattern::new(kind, p, q).ok())
                    .collect(),
            };
            for pattern in patterns {
                for &labeling in &self.labelings {
                    out.push(FeatureSpec::dt(pattern, labeling));
                }
            }
        }
        out.dedup();
        out
    }

    pub fn repetition_seed(&self, rep_index: usize) -> u64 {
        derive_seed(self.seed, rep_index as u64)
    }
}

/// One (repetition, direction, feature, C) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub language_pair: String,
    pub direction: String,
    pub repetition: usize,
    /// Seed of the repetition (drives sampling and SVM shuffling).
    pub seed: u64,
    pub feature: String,
    pub labeling: String,
    pub c: f64,
    /// Missing when the cell failed.
    pub macro_f1: Option<f64>,
    pub wall_time_ms: Option<f64>,
    pub error: String,
}

pub const RAW_HEADER: &str = "language_pair,direction,repetition,seed,feature,labeling,c,macro_f1,wall_time_ms,error";
pub const MEAN_HEADER: &str = "language_pair,direction,feature,labeling,c,mean_macro_f1,n_ok,n_failed";
pub const MAX_HEADER: &str = "language_pair,direction,family,max_mean_macro_f1,feature,labeling,c";

pub fn direction_name(train: &str, test: &str) -> String {
    format!("{train}->{test}")
}

/// Direction label used for rows averaged over both directions.
pub const BOTH_DIRECTIONS: &str = "both";

/// Fits the vocabulary for one direction from the extracted sequences.
///
/// With [`IdfScope::Train`] only `split.train_docs` contribute.
pub fn direction_vocabulary(split: &ExperimentSplit, sequences: &HashMap<String, GramSequence>, scope: IdfScope, min_df: u32) -> Result<Vocabulary> {
    let pick = |ids: &[String]| -> Vec<&GramSequence> { ids.iter().filter_map(|id| sequences.get(id)).collect() };
    let mut docs = pick(&split.train_docs);
    if scope == IdfScope::All {
        docs.extend(pick(&split.test_docs));
    }
    Vocabulary::fit(docs, min_df)
}

struct CellContext<'a> {
    corpus: &'a Corpus,
    config: &'a GridConfig,
    rep_index: usize,
    rep_seed: u64,
    language_pair: String,
}

impl CellContext<'_> {
    fn row(&self, split: &ExperimentSplit, feature: &FeatureSpec, c: f64) -> ResultRow {
        ResultRow {
            language_pair: self.language_pair.clone(),
            direction: direction_name(&split.train_language, &split.test_language),
            repetition: self.rep_index,
            seed: self.rep_seed,
            feature: feature.descriptor(),
            labeling: feature.labeling_str().to_string(),
            c,
            macro_f1: None,
            wall_time_ms: None,
            error: String::new(),
        }
    }

    fn author_of(&self, doc_id: &str) -> &str {
        &self.corpus.document(doc_id).expect("split documents exist").author_id
    }

    /// Rows for every C value of one (direction, feature).
    fn evaluate(&self, split: &ExperimentSplit, feature: &FeatureSpec, sequences: &std::result::Result<HashMap<String, GramSequence>, String>) -> Vec<ResultRow> {
        let start = Instant::now();
        let fail_all = |msg: String| -> Vec<ResultRow> {
            self.config
                .c_values
                .iter()
                .map(|&c| {
                    let mut r = self.row(split, feature, c);
                    r.error = msg.clone();
                    r
                })
                .collect()
        };
        let sequences = match sequences {
            Ok(s) => s,
            Err(e) => return fail_all(e.clone()),
        };
        let vocab = match direction_vocabulary(split, sequences, self.config.idf_scope, self.config.min_df) {
            Ok(v) => v,
            Err(e) => return fail_all(e.to_string()),
        };
        let vectors = |ids: &[String]| ids.iter().map(|id| vocab.transform(&sequences[id])).collect::<Vec<_>>();
        let train_x = vectors(&split.train_docs);
        let test_x = vectors(&split.test_docs);
        let train_y: Vec<&str> = split.train_docs.iter().map(|d| self.author_of(d)).collect();
        let test_y: Vec<&str> = split.test_docs.iter().map(|d| self.author_of(d)).collect();
        let shared_ms = start.elapsed().as_secs_f64() * 1e3;

        self.config
            .c_values
            .iter()
            .map(|&c| {
                let t0 = Instant::now();
                let mut row = self.row(split, feature, c);
                let opts = TrainOptions {
                    tolerance: self.config.svm_tolerance,
                    max_epochs: self.config.svm_max_epochs,
                    ..TrainOptions::new(c, self.rep_seed)
                };
                match train(&train_x, &train_y, &opts).and_then(|m| m.predict(&test_x)) {
                    Ok(pred) => row.macro_f1 = Some(macro_f1(&test_y, &pred)),
                    Err(e) => row.error = e.to_string(),
                }
                if self.config.timing {
                    row.wall_time_ms = Some(shared_ms + t0.elapsed().as_secs_f64() * 1e3);
                }
                row
            })
            .collect()
    }
}

/// Runs every grid cell of one repetition in both directions.
///
/// Rows are ordered by direction (`lang_a` → `lang_b` first), then feature
/// in grid order, then C.
pub fn run_repetition(corpus: &Corpus, config: &GridConfig, rep_index: usize) -> Result<Vec<ResultRow>> {
    let rep_seed = config.repetition_seed(rep_index);
    let (lang_a, lang_b) = corpus.language_pair();
    let forward = sample_split(corpus, config.n_authors, config.docs_per_author, lang_a, rep_seed)?;
    let backward = forward.reversed();
    let features = config.features();
    let need_text = features.iter().any(FeatureSpec::needs_text);
    let need_trees = features.iter().any(FeatureSpec::needs_parse);

    let ids: Vec<&String> = forward.train_docs.iter().chain(&forward.test_docs).collect();
    let docs: HashMap<&str, LoadedDocument> = ids
        .par_iter()
        .map(|id| LoadedDocument::load(corpus, id, need_text, need_trees).map(|d| (id.as_str(), d)))
        .collect::<Result<_>>()?;

    let ctx = CellContext {
        corpus,
        config,
        rep_index,
        rep_seed,
        language_pair: format!("{lang_a}+{lang_b}"),
    };
    let per_feature: Vec<(Vec<ResultRow>, Vec<ResultRow>)> = features
        .par_iter()
        .map(|feature| {
            let sequences: std::result::Result<HashMap<String, GramSequence>, String> = ids
                .iter()
                .map(|id| {
                    feature
                        .extract(id, &docs[id.as_str()])
                        .map(|s| ((*id).clone(), s))
                        .map_err(|e| format!("{id}: {e}"))
                })
                .collect();
            (
                ctx.evaluate(&forward, feature, &sequences),
                ctx.evaluate(&backward, feature, &sequences),
            )
        })
        .collect();

    let (fwd, bwd): (Vec<_>, Vec<_>) = per_feature.into_iter().unzip();
    Ok(fwd.into_iter().flatten().chain(bwd.into_iter().flatten()).collect())
}

/// Runs all repetitions. Grammar features require every document to carry a
/// parse; that is checked before any work starts.
pub fn run(corpus: &Corpus, config: &GridConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    if config.features().iter().any(FeatureSpec::needs_parse) {
        if let Some(d) = corpus.documents().iter().find(|d| d.conllu_path.is_none()) {
            return Err(Error::MissingParse {
                doc_id: d.doc_id.clone(),
            });
        }
    }
    let mut rows = Vec::new();
    for rep in 0..config.repetitions {
        log::info!("repetition {}/{}", rep + 1, config.repetitions);
        rows.extend(run_repetition(corpus, config, rep)?);
    }
    Ok(rows)
}

/// Like [`run`], on a pool of `jobs` threads (all cores when `None`).
pub fn run_with_jobs(corpus: &Corpus, config: &GridConfig, jobs: Option<usize>) -> Result<Vec<ResultRow>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| run(corpus, config))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanRow {
    pub language_pair: String,
    pub direction: String,
    pub feature: String,
    pub labeling: String,
    pub c: f64,
    /// Mean over successful repetitions; missing if none succeeded.
    pub mean_macro_f1: Option<f64>,
    pub n_ok: usize,
    pub n_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxRow {
    pub language_pair: String,
    pub direction: String,
    pub family: String,
    pub max_mean_macro_f1: f64,
    pub feature: String,
    pub labeling: String,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub means: Vec<MeanRow>,
    pub maxima: Vec<MaxRow>,
}

/// Family of a feature descriptor such as `word2` or `pq1x3`.
pub fn family_of(feature: &str) -> Option<Family> {
    let prefix: String = feature.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
    Some(match prefix.as_str() {
        "char" => Family::Char,
        "word" => Family::Word,
        "upos" => Family::Upos,
        "anc" => Family::DtAnc,
        "sib" => Family::DtSib,
        "pq" => Family::DtPq,
        "inv" => Family::DtInv,
        _ => return None,
    })
}

type CellKey = (String, String, String, String, u64);

fn cell_key(pair: &str, direction: &str, feature: &str, labeling: &str, c: f64) -> CellKey {
    (pair.into(), direction.into(), feature.into(), labeling.into(), c.to_bits())
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Means per cell and direction, direction-averaged means, and per-family
/// maxima of the means. Output order depends only on the row contents.
pub fn aggregate(rows: &[ResultRow]) -> Summary {
    let mut cells: BTreeMap<CellKey, (Vec<f64>, usize)> = BTreeMap::new();
    for r in rows {
        let e = cells
            .entry(cell_key(&r.language_pair, &r.direction, &r.feature, &r.labeling, r.c))
            .or_default();
        match r.macro_f1 {
            Some(v) => e.0.push(v),
            None => e.1 += 1,
        }
    }

    let mut means: Vec<MeanRow> = cells
        .iter()
        .map(|((pair, dir, feat, lab, c), (vals, failed))| MeanRow {
            language_pair: pair.clone(),
            direction: dir.clone(),
            feature: feat.clone(),
            labeling: lab.clone(),
            c: f64::from_bits(*c),
            mean_macro_f1: mean(vals),
            n_ok: vals.len(),
            n_failed: *failed,
        })
        .collect();

    // Direction-averaged cells: mean of the available direction means.
    let mut both: BTreeMap<CellKey, (Vec<f64>, usize, usize)> = BTreeMap::new();
    for m in &means {
        let e = both
            .entry(cell_key(&m.language_pair, BOTH_DIRECTIONS, &m.feature, &m.labeling, m.c))
            .or_default();
        if let Some(v) = m.mean_macro_f1 {
            e.0.push(v);
        }
        e.1 += m.n_ok;
        e.2 += m.n_failed;
    }
    means.extend(both.into_iter().map(|((pair, dir, feat, lab, c), (vals, ok, failed))| MeanRow {
        language_pair: pair,
        direction: dir,
        feature: feat,
        labeling: lab,
        c: f64::from_bits(c),
        mean_macro_f1: mean(&vals),
        n_ok: ok,
        n_failed: failed,
    }));
    means.sort_by(|a, b| {
        (&a.language_pair, &a.direction, &a.feature, &a.labeling)
            .cmp(&(&b.language_pair, &b.direction, &b.feature, &b.labeling))
            .then(a.c.total_cmp(&b.c))
    });

    let mut best: BTreeMap<(String, String, String), &MeanRow> = BTreeMap::new();
    for m in &means {
        let (Some(v), Some(fam)) = (m.mean_macro_f1, family_of(&m.feature)) else {
            continue;
        };
        let mut families = vec![fam.as_str()];
        if fam.is_dtgram() {
            families.push(DTGRAM_FAMILY);
        }
        for f in families {
            let key = (m.language_pair.clone(), m.direction.clone(), f.to_string());
            match best.get(&key) {
                Some(cur) if cur.mean_macro_f1.unwrap() >= v => {}
                _ => {
                    best.insert(key, m);
                }
            }
        }
    }
    let maxima = best
        .into_iter()
        .map(|((pair, dir, fam), m)| MaxRow {
            language_pair: pair,
            direction: dir,
            family: fam,
            max_mean_macro_f1: m.mean_macro_f1.unwrap(),
            feature: m.feature.clone(),
            labeling: m.labeling.clone(),
            c: m.c,
        })
        .collect();
    Summary { means, maxima }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &str) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(header.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path, header: &str) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let found: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if found.join(",") != header {
        return Err(Error::Report(format!(
            "{}: unexpected header `{}`",
            path.display(),
            found.join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Paths of the three report files inside `dir`.
pub fn report_paths(dir: &Path) -> [PathBuf; 3] {
    [
        dir.join("results_raw.csv"),
        dir.join("results_mean.csv"),
        dir.join("results_max.csv"),
    ]
}

/// Writes `results_raw.csv`, `results_mean.csv` and `results_max.csv`.
pub fn emit_report(rows: &[ResultRow], summary: &Summary, dir: &Path) -> Result<[PathBuf; 3]> {
    if rows.is_empty() || summary.means.is_empty() {
        return Err(Error::Report("nothing to report".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = report_paths(dir);
    write_csv(&paths[0], rows, RAW_HEADER)?;
    write_csv(&paths[1], &summary.means, MEAN_HEADER)?;
    write_csv(&paths[2], &summary.maxima, MAX_HEADER)?;
    Ok(paths)
}

pub fn read_raw(path: &Path) -> Result<Vec<ResultRow>> {
    read_csv(path, RAW_HEADER)
}

/// Reads `results_mean.csv` and `results_max.csv` from `dir`.
pub fn read_summary(dir: &Path) -> Result<Summary> {
    let [_, mean_path, max_path] = report_paths(dir);
    Ok(Summary {
        means: read_csv(&mean_path, MEAN_HEADER)?,
        maxima: read_csv(&max_path, MAX_HEADER)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(dir: &str, rep: usize, feature: &str, c: f64, f1: Option<f64>) -> ResultRow {
        ResultRow {
            language_pair: "en+de".into(),
            direction: dir.into(),
            repetition: rep,
            seed: rep as u64,
            feature: feature.into(),
            labeling: if family_of(feature).unwrap().is_dtgram() { "dep".into() } else { "-".into() },
            c,
            macro_f1: f1,
            wall_time_ms: None,
            error: if f1.is_none() { "boom".into() } else { String::new() },
        }
    }

    fn mean_of<'a>(s: &'a Summary, dir: &str, feature: &str, c: f64) -> &'a MeanRow {
        s.means
            .iter()
            .find(|m| m.direction == dir && m.feature == feature && m.c == c)
            .unwrap()
    }

    #[test]
    fn default_grid_mirrors_table() {
        let cfg = GridConfig::default();
        let f = cfg.features();
        // 3 units x 3 sizes + (4 anc + 4 sib + 16 pq + 16 inv) x 3 labelings
        assert_eq!(f.len(), 9 + 40 * 3);
        assert_eq!(cfg.c_values, [0.1, 1.0, 10.0]);
        assert_eq!(cfg.repetitions, 10);
        assert_eq!(f[0].to_string(), "char1");
        assert_eq!(f[9].to_string(), "anc1/dep");
        assert!(f.iter().all(|x| match x {
            FeatureSpec::Dt { pattern, .. } => pattern.on_standard_grid(),
            _ => true,
        }));
    }

    #[test]
    fn config_from_toml() {
        let cfg = GridConfig::from_toml(
            r#"
            schema_version = 1
            ngram_units = ["word"]
            ngram_sizes = [2]
            dt_kinds = ["pq"]
            dt_vertical = [2]
            dt_horizontal = [3]
            labelings = ["both"]
            c_values = [1.0]
            repetitions = 2
            "#,
        )
        .unwrap();
        let names: Vec<String> = cfg.features().iter().map(|f| f.to_string()).collect();
        assert_eq!(names, ["word2", "pq2x3/both"]);
        assert_eq!(cfg.n_authors, 10);
        assert!(GridConfig::from_toml("schema_version = 2").is_err());
        assert!(GridConfig::from_toml("bogus = 1").is_err());
        assert!(GridConfig::from_toml("c_values = [-1.0]").is_err());
        let round = toml::to_string(&cfg).unwrap();
        assert_eq!(GridConfig::from_toml(&round).unwrap(), cfg);
    }

    #[test]
    fn single_row_mean() {
        let s = aggregate(&[row("en->de", 0, "word1", 1.0, Some(0.42))]);
        assert_eq!(mean_of(&s, "en->de", "word1", 1.0).mean_macro_f1, Some(0.42));
    }

    #[test]
    fn mean_over_repetitions_and_failures() {
        let rows = [
            row("en->de", 0, "char2", 1.0, Some(0.2)),
            row("en->de", 1, "char2", 1.0, Some(0.4)),
            row("en->de", 2, "char2", 1.0, None),
        ];
        let s = aggregate(&rows);
        let m = mean_of(&s, "en->de", "char2", 1.0);
        assert!((m.mean_macro_f1.unwrap() - 0.3).abs() < 1e-12);
        assert_eq!((m.n_ok, m.n_failed), (2, 1));
    }

    #[test]
    fn max_over_family() {
        let rows = [
            row("en->de", 0, "anc1", 1.0, Some(0.1)),
            row("en->de", 0, "pq2x2", 1.0, Some(0.35)),
            row("en->de", 0, "sib3", 1.0, Some(0.2)),
            row("en->de", 0, "word1", 0.1, Some(0.5)),
        ];
        let s = aggregate(&rows);
        let best = s
            .maxima
            .iter()
            .find(|m| m.direction == "en->de" && m.family == DTGRAM_FAMILY)
            .unwrap();
        assert_eq!(best.max_mean_macro_f1, 0.35);
        assert_eq!(best.feature, "pq2x2");
        let word = s.maxima.iter().find(|m| m.direction == "en->de" && m.family == "word").unwrap();
        assert_eq!((word.max_mean_macro_f1, word.c), (0.5, 0.1));
    }

    #[test]
    fn direction_average() {
        let rows = [
            row("en->de", 0, "upos1", 1.0, Some(0.2)),
            row("de->en", 0, "upos1", 1.0, Some(0.3)),
            row("de->en", 1, "upos1", 1.0, Some(0.5)),
        ];
        let s = aggregate(&rows);
        let both = mean_of(&s, BOTH_DIRECTIONS, "upos1", 1.0);
        assert!((both.mean_macro_f1.unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(both.n_ok, 3);
    }

    #[test]
    fn all_failed_cell_is_missing_not_zero() {
        let s = aggregate(&[row("en->de", 0, "word1", 1.0, None)]);
        assert_eq!(mean_of(&s, "en->de", "word1", 1.0).mean_macro_f1, None);
        assert!(s.maxima.is_empty());
    }

    #[test]
    fn report_round_trip() {
        let rows = vec![
            row("en->de", 0, "word1", 1.0, Some(0.1 + 0.2)),
            row("de->en", 0, "word1", 1.0, None),
            row("en->de", 0, "inv2x1", 10.0, Some(1.0 / 3.0)),
        ];
        let summary = aggregate(&rows);
        let dir = tempfile::tempdir().unwrap();
        let [raw, _, _] = emit_report(&rows, &summary, dir.path()).unwrap();
        let text = std::fs::read_to_string(&raw).unwrap();
        assert_eq!(text.lines().next().unwrap(), RAW_HEADER);
        let back = read_raw(&raw).unwrap();
        assert_eq!(back, rows);
        assert_eq!(aggregate(&back), summary);
        assert_eq!(read_summary(dir.path()).unwrap(), summary);
    }

    #[test]
    fn empty_report_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_report(&[], &Summary::default(), dir.path()).is_err());
    }

    #[test]
    fn unwritable_path_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("file");
        std::fs::write(&file, "x").unwrap();
        let rows = vec![row("en->de", 0, "word1", 1.0, Some(0.5))];
        assert!(emit_report(&rows, &aggregate(&rows), &file.join("sub")).is_err());
    }
}
