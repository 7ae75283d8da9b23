use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dtgrams::corpus::{sample_split, Corpus, ExperimentSplit};
use dtgrams::deptree::NodeLabeling;
use dtgrams::dtgram::{DtGramPattern, DtKind, GramSequence};
use dtgrams::experiment::{
    aggregate, direction_vocabulary, emit_report, run_with_jobs, FeatureSpec, GridConfig, IdfScope, LoadedDocument,
};
use dtgrams::metrics::EvalReport;
use dtgrams::ngram::NgramUnit;
use dtgrams::svm::{train, LinearModel, TrainOptions};
use dtgrams::synthetic::{generate, SyntheticConfig};
use dtgrams::vectorize::{SparseVector, Vocabulary};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;

/// DT-gram stylometry: dependency-tree features and cross-language
/// authorship attribution.
#[derive(Debug, Parser)]
#[command(name = "dtgrams", version)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a corpus manifest and print author, document and length counts.
    Validate(ValidateArgs),
    /// Print the gram sequence of documents, one gram per line.
    Extract(ExtractArgs),
    /// Fit a vocabulary on a sampled split and write tf/idf vectors.
    Vectorize(SplitArgs),
    /// Train a linear SVM on the training side of a sampled split.
    Train(TrainArgs),
    /// Score a trained model on the test side of a sampled split.
    Evaluate(EvaluateArgs),
    /// Run the repeated cross-language grid and write the result CSVs.
    Grid(GridArgs),
    /// Generate a synthetic bilingual corpus with a planted grammar signal.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Corpus manifest CSV.
    #[arg(long)]
    manifest: PathBuf,
    /// Output format.
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

/// One feature: either `--unit`/`--n`, or `--pattern` with `--v`/`--h` and
/// `--labeling`.
#[derive(Debug, Args, Clone)]
struct FeatureArgs {
    /// DT-gram pattern: anc, sib, pq or inv.
    #[arg(long, value_parser = parse_kind)]
    pattern: Option<DtKind>,
    /// Vertical size (anc, pq, inv).
    #[arg(long = "v")]
    vertical: Option<usize>,
    /// Horizontal size (sib, pq, inv).
    #[arg(long = "h")]
    horizontal: Option<usize>,
    /// Node labeling for DT-grams: dep, upos or both.
    #[arg(long, value_parser = parse_labeling, default_value = "dep")]
    labeling: NodeLabeling,
    /// Baseline n-gram unit: char, word or upos.
    #[arg(long, value_parser = parse_unit, conflicts_with = "pattern")]
    unit: Option<NgramUnit>,
    /// Baseline n-gram length.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// Corpus manifest CSV.
    #[arg(long)]
    manifest: PathBuf,
    /// Document to extract (repeatable; all documents when omitted).
    #[arg(long = "doc-id")]
    doc_ids: Vec<String>,
    #[command(flatten)]
    feature: FeatureArgs,
    /// Output format.
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// Corpus manifest CSV.
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    feature: FeatureArgs,
    /// Language of the training side (defaults to the manifest's first language).
    #[arg(long)]
    train_language: Option<String>,
    /// Authors per split.
    #[arg(long, default_value_t = 10)]
    n_authors: usize,
    /// Documents per author and language.
    #[arg(long, default_value_t = 10)]
    docs_per_author: usize,
    /// Sampling seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Documents used to fit vocabulary and idf: train or all.
    #[arg(long, default_value = "train", value_parser = parse_idf_scope)]
    idf_scope: IdfScope,
    /// Drop terms found in fewer documents.
    #[arg(long, default_value_t = 1)]
    min_df: u32,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    split: SplitArgs,
    /// SVM regularization parameter C.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    split: SplitArgs,
    /// Output format.
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Corpus manifest CSV.
    #[arg(long)]
    manifest: PathBuf,
    /// TOML grid config; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Restrict DT-gram patterns (repeatable or comma-separated).
    #[arg(long, value_parser = parse_kind, value_delimiter = ',')]
    pattern: Vec<DtKind>,
    /// Vertical sizes, e.g. `1-4` or `1,3`.
    #[arg(long = "v", value_parser = parse_sizes)]
    vertical: Option<Sizes>,
    /// Horizontal sizes, e.g. `1-4` or `2`.
    #[arg(long = "h", value_parser = parse_sizes)]
    horizontal: Option<Sizes>,
    /// Node labelings (repeatable or comma-separated).
    #[arg(long, value_parser = parse_labeling, value_delimiter = ',')]
    labeling: Vec<NodeLabeling>,
    /// Restrict baseline n-gram units (repeatable or comma-separated).
    #[arg(long, value_parser = parse_unit, value_delimiter = ',')]
    unit: Vec<NgramUnit>,
    /// Baseline n-gram sizes, e.g. `1-3`.
    #[arg(long, value_parser = parse_sizes)]
    n: Option<Sizes>,
    /// SVM C values, comma-separated.
    #[arg(long, value_delimiter = ',')]
    c_values: Option<Vec<f64>>,
    /// Number of repetitions.
    #[arg(long)]
    repetitions: Option<usize>,
    /// Authors per repetition.
    #[arg(long)]
    n_authors: Option<usize>,
    /// Documents per author and language.
    #[arg(long)]
    docs_per_author: Option<usize>,
    /// Base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Directory for the result CSVs.
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    /// Documents used to fit vocabulary and idf: train or all.
    #[arg(long, value_parser = parse_idf_scope)]
    idf_scope: Option<IdfScope>,
    /// Drop terms found in fewer training documents.
    #[arg(long)]
    min_df: Option<u32>,
    /// Record per-cell wall time (output then differs between runs).
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Directory to write the corpus into.
    #[arg(long)]
    out_dir: PathBuf,
    /// Number of authors.
    #[arg(long, default_value_t = 10)]
    authors: usize,
    /// Documents per author and language.
    #[arg(long, default_value_t = 10)]
    docs: usize,
    /// Sentences per document.
    #[arg(long, default_value_t = 20)]
    sentences: usize,
    /// Generator seed.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn parse_kind(s: &str) -> Result<DtKind, String> {
    s.parse()
}

fn parse_labeling(s: &str) -> Result<NodeLabeling, String> {
    s.parse()
}

fn parse_unit(s: &str) -> Result<NgramUnit, String> {
    s.parse()
}

fn parse_idf_scope(s: &str) -> Result<IdfScope, String> {
    s.parse()
}

/// Size list given as `3`, `1-4`, or `1,2,4`.
#[derive(Debug, Clone)]
struct Sizes(Vec<usize>);

fn parse_sizes(s: &str) -> Result<Sizes, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad size `{t}`"));
    let sizes = if let Some((a, b)) = s.split_once('-') {
        let (a, b) = (num(a)?, num(b)?);
        if a > b {
            return Err(format!("empty range `{s}`"));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if sizes.contains(&0) {
        return Err("sizes must be >= 1".into());
    }
    Ok(Sizes(sizes))
}

enum Failure {
    Usage(String),
    Data(dtgrams::Error),
}

impl From<dtgrams::Error> for Failure {
    fn from(e: dtgrams::Error) -> Self {
        Failure::Data(e)
    }
}

type CmdResult = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

impl FeatureArgs {
    fn spec(&self) -> Result<FeatureSpec, Failure> {
        match (self.pattern, self.unit) {
            (Some(kind), None) => {
                let need = |v: Option<usize>, flag: &str| {
                    v.ok_or_else(|| usage(format!("--pattern {kind} needs {flag}")))
                };
                let pattern = match kind {
                    DtKind::Anc => DtGramPattern::anc(need(self.vertical, "--v")?),
                    DtKind::Sib => DtGramPattern::sib(need(self.horizontal, "--h")?),
                    DtKind::Pq | DtKind::Inv => {
                        DtGramPattern::new(kind, need(self.vertical, "--v")?, need(self.horizontal, "--h")?)
                    }
                }
                .map_err(|e| usage(e.to_string()))?;
                Ok(FeatureSpec::dt(pattern, self.labeling))
            }
            (None, Some(unit)) => {
                let n = self.n.ok_or_else(|| usage("--unit needs --n"))?;
                if n == 0 {
                    return Err(usage("--n must be >= 1"));
                }
                Ok(FeatureSpec::ngram(unit, n))
            }
            (None, None) => Err(usage("choose a feature with --pattern or --unit")),
            (Some(_), Some(_)) => Err(usage("--pattern and --unit are exclusive")),
        }
    }
}

fn load_corpus(path: &Path) -> Result<Corpus, Failure> {
    let corpus = Corpus::load(path)?;
    for w in corpus.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(corpus)
}

fn extract_one(corpus: &Corpus, doc_id: &str, spec: &FeatureSpec) -> Result<GramSequence, Failure> {
    let doc = LoadedDocument::load(corpus, doc_id, spec.needs_text(), spec.needs_parse())?;
    Ok(spec.extract(doc_id, &doc)?)
}

fn cmd_validate(args: &ValidateArgs) -> CmdResult {
    let corpus = load_corpus(&args.manifest)?;
    let stats = corpus.stats()?;
    let (a, b) = corpus.language_pair();
    match args.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                language_pair: [&'a str; 2],
                #[serde(flatten)]
                stats: &'a dtgrams::corpus::CorpusStats,
                warnings: &'a [String],
            }
            let out = Out {
                language_pair: [a, b],
                stats: &stats,
                warnings: corpus.warnings(),
            };
            println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
        }
        Format::Text => {
            println!("languages: {a} + {b}");
            println!("A: {}", stats.authors);
            println!("Docs: {}", stats.documents);
            println!("L_doc: {:.0}", stats.mean_chars);
            let mins: Vec<String> = stats.languages.iter().map(|l| l.min_docs_per_author.to_string()).collect();
            println!("D/A_min: {}", mins.join(" + "));
            for l in &stats.languages {
                println!(
                    "  {}: {} documents, mean length {:.1} chars, min {} per author",
                    l.language, l.documents, l.mean_chars, l.min_docs_per_author
                );
            }
            if stats.documents_without_parse > 0 {
                println!("documents without parse: {}", stats.documents_without_parse);
            }
        }
    }
    Ok(())
}

fn cmd_extract(args: &ExtractArgs) -> CmdResult {
    let spec = args.feature.spec()?;
    let corpus = load_corpus(&args.manifest)?;
    let ids: Vec<String> = if args.doc_ids.is_empty() {
        corpus.documents().iter().map(|d| d.doc_id.clone()).collect()
    } else {
        args.doc_ids.clone()
    };
    let seqs = ids
        .iter()
        .map(|id| extract_one(&corpus, id, &spec))
        .collect::<Result<Vec<_>, _>>()?;
    match args.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                doc_id: &'a str,
                feature: &'a str,
                grams: &'a [String],
            }
            let docs: Vec<Doc> = seqs
                .iter()
                .map(|s| Doc {
                    doc_id: &s.doc_id,
                    feature: &s.feature,
                    grams: &s.grams,
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&docs).expect("serializable"));
        }
        Format::Text => {
            let mut out = String::new();
            for s in &seqs {
                let _ = writeln!(out, "# doc {}", s.doc_id);
                for g in &s.grams {
                    out.push_str(g);
                    out.push('\n');
                }
            }
            print!("{out}");
        }
    }
    Ok(())
}

/// Split, sequences, vocabulary and vectors shared by vectorize/train/evaluate.
struct Prepared {
    corpus: Corpus,
    split: ExperimentSplit,
    vocab: Vocabulary,
    sequences: HashMap<String, GramSequence>,
}

fn prepare(args: &SplitArgs, vocab: Option<Vocabulary>) -> Result<Prepared, Failure> {
    let spec = args.feature.spec()?;
    let corpus = load_corpus(&args.manifest)?;
    let train_language = args
        .train_language
        .clone()
        .unwrap_or_else(|| corpus.language_pair().0.to_string());
    let split = sample_split(&corpus, args.n_authors, args.docs_per_author, &train_language, args.seed)?;
    let mut sequences = HashMap::new();
    for id in split.train_docs.iter().chain(&split.test_docs) {
        sequences.insert(id.clone(), extract_one(&corpus, id, &spec)?);
    }
    let vocab = match vocab {
        Some(v) => v,
        None => direction_vocabulary(&split, &sequences, args.idf_scope, args.min_df)?,
    };
    Ok(Prepared {
        corpus,
        split,
        vocab,
        sequences,
    })
}

impl Prepared {
    fn vectors(&self, ids: &[String]) -> Vec<SparseVector> {
        ids.iter().map(|id| self.vocab.transform(&self.sequences[id])).collect()
    }

    fn labels(&self, ids: &[String]) -> Vec<String> {
        ids.iter()
            .map(|id| self.corpus.document(id).expect("split doc").author_id.clone())
            .collect()
    }
}

fn write_file(path: &Path, body: &str) -> CmdResult {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Data(io_error(dir, e)))?;
    }
    std::fs::write(path, body).map_err(|e| Failure::Data(io_error(path, e)))
}

fn io_error(path: &Path, source: std::io::Error) -> dtgrams::Error {
    dtgrams::Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn vectors_text(p: &Prepared, ids: &[String], seed: u64) -> String {
    let mut out = format!("# seed {seed}\n");
    for ((id, author), x) in ids.iter().zip(p.labels(ids)).zip(p.vectors(ids)) {
        let _ = writeln!(out, "{id}\t{author}\t{}", x.to_text());
    }
    out
}

fn cmd_vectorize(args: &SplitArgs) -> CmdResult {
    let p = prepare(args, None)?;
    write_file(&args.out_dir.join("vocab.tsv"), &p.vocab.to_text())?;
    write_file(&args.out_dir.join("train.vec"), &vectors_text(&p, &p.split.train_docs, args.seed))?;
    write_file(&args.out_dir.join("test.vec"), &vectors_text(&p, &p.split.test_docs, args.seed))?;
    println!(
        "seed {}: {} terms, {} train / {} test vectors ({} -> {}) written to {}",
        args.seed,
        p.vocab.len(),
        p.split.train_docs.len(),
        p.split.test_docs.len(),
        p.split.train_language,
        p.split.test_language,
        args.out_dir.display()
    );
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> CmdResult {
    if args.c.is_nan() || args.c <= 0.0 {
        return Err(usage("--c must be positive"));
    }
    let p = prepare(&args.split, None)?;
    let xs = p.vectors(&p.split.train_docs);
    let ys = p.labels(&p.split.train_docs);
    let model = train(&xs, &ys, &TrainOptions::new(args.c, args.split.seed))?;
    write_file(&args.split.out_dir.join("vocab.tsv"), &p.vocab.to_text())?;
    write_file(&args.split.out_dir.join("model.txt"), &model.to_text())?;
    println!(
        "seed {}: trained {} classes on {} documents ({} terms, C={}); model in {}",
        args.split.seed,
        model.classes.len(),
        xs.len(),
        p.vocab.len(),
        args.c,
        args.split.out_dir.display()
    );
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> CmdResult {
    let dir = &args.split.out_dir;
    let read = |name: &str| {
        let path = dir.join(name);
        std::fs::read_to_string(&path).map_err(|e| Failure::Data(io_error(&path, e)))
    };
    let vocab = Vocabulary::from_text(&read("vocab.tsv")?)?;
    let model = LinearModel::from_text(&read("model.txt")?)?;
    let p = prepare(&args.split, Some(vocab))?;
    let pred = model.predict(&p.vectors(&p.split.test_docs))?;
    let gold = p.labels(&p.split.test_docs);
    let report = EvalReport::compute(&gold, &pred);
    match args.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Class<'a> {
                label: &'a str,
                precision: f64,
                recall: f64,
                f1: f64,
                support: usize,
            }
            #[derive(Serialize)]
            struct Out<'a> {
                seed: u64,
                direction: String,
                macro_f1: f64,
                classes: Vec<Class<'a>>,
                labels: &'a [String],
                confusion: &'a [Vec<usize>],
            }
            let out = Out {
                seed: args.split.seed,
                direction: format!("{}->{}", p.split.train_language, p.split.test_language),
                macro_f1: report.macro_f1,
                classes: report
                    .per_class
                    .iter()
                    .map(|c| Class {
                        label: &c.label,
                        precision: c.precision,
                        recall: c.recall,
                        f1: c.f1,
                        support: c.support,
                    })
                    .collect(),
                labels: &report.labels,
                confusion: &report.confusion,
            };
            println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
        }
        Format::Text => {
            println!(
                "seed {} {} -> {}: macro-F1 {:.6}",
                args.split.seed, p.split.train_language, p.split.test_language, report.macro_f1
            );
            for c in &report.per_class {
                println!(
                    "  {:<16} P {:.3}  R {:.3}  F1 {:.3}  n={}",
                    c.label, c.precision, c.recall, c.f1, c.support
                );
            }
        }
    }
    Ok(())
}

fn cmd_grid(args: &GridArgs) -> CmdResult {
    let mut config = match &args.config {
        Some(path) => GridConfig::load(path)?,
        None => GridConfig::default(),
    };
    if !args.pattern.is_empty() || !args.unit.is_empty() {
        config.dt_kinds = args.pattern.clone();
        config.ngram_units = args.unit.clone();
    }
    if let Some(v) = &args.vertical {
        config.dt_vertical = v.0.clone();
    }
    if let Some(h) = &args.horizontal {
        config.dt_horizontal = h.0.clone();
    }
    if !args.labeling.is_empty() {
        config.labelings = args.labeling.clone();
    }
    if let Some(n) = &args.n {
        config.ngram_sizes = n.0.clone();
    }
    if let Some(c) = &args.c_values {
        config.c_values = c.clone();
    }
    if let Some(r) = args.repetitions {
        config.repetitions = r;
    }
    if let Some(n) = args.n_authors {
        config.n_authors = n;
    }
    if let Some(d) = args.docs_per_author {
        config.docs_per_author = d;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(s) = args.idf_scope {
        config.idf_scope = s;
    }
    if let Some(m) = args.min_df {
        config.min_df = m;
    }
    config.timing |= args.timing;
    config.validate().map_err(|e| usage(e.to_string()))?;

    let corpus = load_corpus(&args.manifest)?;
    let rows = run_with_jobs(&corpus, &config, args.jobs)?;
    let summary = aggregate(&rows);
    let paths = emit_report(&rows, &summary, &args.out_dir)?;
    let failed = rows.iter().filter(|r| r.macro_f1.is_none()).count();
    println!(
        "seed {}: {} rows ({} failed) over {} features x {} C x {} repetitions",
        config.seed,
        rows.len(),
        failed,
        config.features().len(),
        config.c_values.len(),
        config.repetitions
    );
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> CmdResult {
    let cfg = SyntheticConfig {
        n_authors: args.authors,
        docs_per_author: args.docs,
        sentences_per_doc: args.sentences,
        seed: args.seed,
        ..Default::default()
    };
    let manifest = generate(&args.out_dir, &cfg)?;
    println!("seed {}: wrote {}", args.seed, manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::Validate(a) => cmd_validate(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Vectorize(a) => cmd_vectorize(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Grid(a) => cmd_grid(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_DATA)
        }
    }
}
