//! Bilingual corpora and cross-language experiment splits.
//!
//! A corpus is described by a CSV manifest with the header
//! `doc_id,author_id,language,text_path,conllu_path`. Paths are relative to
//! the manifest's directory and `conllu_path` may be left empty. The manifest
//! must use exactly two languages; the first one to appear is `lang_a`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use crate::deptree::{parse_conllu, DepTree};
use crate::error::{Error, Result};
use crate::rng::SplitRng;

pub const MANIFEST_HEADER: [&str; 5] = ["doc_id", "author_id", "language", "text_path", "conllu_path"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub author_id: String,
    pub language: String,
    pub text_path: PathBuf,
    pub conllu_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    manifest_path: PathBuf,
    root: PathBuf,
    language_pair: (String, String),
    /// Sorted by `doc_id`.
    documents: Vec<DocumentRecord>,
    authors: Vec<String>,
    warnings: Vec<String>,
}

/// Per-language figures printed by `validate`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LanguageStats {
    pub language: String,
    pub documents: usize,
    pub mean_chars: f64,
    /// Fewest documents any author has in this language.
    pub min_docs_per_author: usize,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CorpusStats {
    pub authors: usize,
    pub documents: usize,
    pub mean_chars: f64,
    pub languages: Vec<LanguageStats>,
    pub documents_without_parse: usize,
}

impl Corpus {
    pub fn load(manifest_path: impl AsRef<Path>) -> Result<Self> {
        let manifest_path = manifest_path.as_ref();
        let root = manifest_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        let file = std::fs::File::open(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(file);

        let header = reader.headers().map_err(|e| manifest_error(&e, 1))?;
        if header.iter().collect::<Vec<_>>() != MANIFEST_HEADER {
            return Err(Error::Manifest {
                line: 1,
                message: format!("header must be `{}`", MANIFEST_HEADER.join(",")),
            });
        }

        let mut languages: Vec<String> = Vec::new();
        let mut ids = HashSet::new();
        let mut documents = Vec::new();
        let mut warnings = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| manifest_error(&e, 0))?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let field = |i: usize| record.get(i).unwrap_or("").to_string();
            let (doc_id, author_id, language, text_path, conllu_path) =
                (field(0), field(1), field(2), field(3), field(4));
            for (name, value) in [
                ("doc_id", &doc_id),
                ("author_id", &author_id),
                ("language", &language),
                ("text_path", &text_path),
            ] {
                if value.is_empty() {
                    return Err(Error::Manifest {
                        line,
                        message: format!("empty {name}"),
                    });
                }
            }
            if !ids.insert(doc_id.clone()) {
                return Err(Error::Manifest {
                    line,
                    message: format!("duplicate doc_id `{doc_id}`"),
                });
            }
            if !languages.contains(&language) {
                if languages.len() == 2 {
                    return Err(Error::Manifest {
                        line,
                        message: format!(
                            "third language `{language}`; a corpus pairs exactly two ({} and {})",
                            languages[0], languages[1]
                        ),
                    });
                }
                languages.push(language.clone());
            }
            let rec = DocumentRecord {
                doc_id,
                author_id,
                language,
                text_path: PathBuf::from(text_path),
                conllu_path: (!conllu_path.is_empty()).then(|| PathBuf::from(conllu_path)),
            };
            let missing: Vec<String> = std::iter::once(&rec.text_path)
                .chain(rec.conllu_path.as_ref())
                .filter(|p| !root.join(p).is_file())
                .map(|p| p.display().to_string())
                .collect();
            if !missing.is_empty() {
                let msg = format!(
                    "line {line}: document {} rejected, missing file(s): {}",
                    rec.doc_id,
                    missing.join(", ")
                );
                log::warn!("{msg}");
                warnings.push(msg);
                continue;
            }
            documents.push(rec);
        }

        if ids.is_empty() {
            return Err(Error::Manifest {
                line: 1,
                message: "manifest lists no documents".into(),
            });
        }
        if languages.len() != 2 {
            return Err(Error::Manifest {
                line: 1,
                message: format!("expected two languages, found {}", languages.len()),
            });
        }

        // Drop authors missing one side.
        let mut sides: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for d in &documents {
            sides.entry(&d.author_id).or_default().insert(&d.language);
        }
        let dropped: BTreeSet<String> = sides
            .iter()
            .filter(|(_, langs)| langs.len() < 2)
            .map(|(a, langs)| {
                let only = langs.iter().next().copied().unwrap_or("?");
                let msg = format!("author {a} dropped: documents only in `{only}`");
                log::warn!("{msg}");
                warnings.push(msg);
                a.to_string()
            })
            .collect();
        documents.retain(|d| !dropped.contains(&d.author_id));
        if documents.is_empty() {
            return Err(Error::Manifest {
                line: 1,
                message: "no author has documents in both languages".into(),
            });
        }
        documents.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        let authors: Vec<String> = documents
            .iter()
            .map(|d| d.author_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();

        let mut it = languages.into_iter();
        let language_pair = (it.next().unwrap(), it.next().unwrap());
        Ok(Corpus {
            manifest_path: manifest_path.to_path_buf(),
            root,
            language_pair,
            documents,
            authors,
            warnings,
        })
    }

    pub fn manifest_path(&self) -> &Path {
        &self.manifest_path
    }

    pub fn language_pair(&self) -> (&str, &str) {
        (&self.language_pair.0, &self.language_pair.1)
    }

    /// The corpus language that is not `lang`.
    pub fn other_language(&self, lang: &str) -> Option<&str> {
        let (a, b) = self.language_pair();
        if lang == a {
            Some(b)
        } else if lang == b {
            Some(a)
        } else {
            None
        }
    }

    pub fn documents(&self) -> &[DocumentRecord] {
        &self.documents
    }

    pub fn authors(&self) -> &[String] {
        &self.authors
    }

    /// Rejected records and dropped authors, in the order encountered.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn document(&self, doc_id: &str) -> Option<&DocumentRecord> {
        self.documents
            .binary_search_by(|d| d.doc_id.as_str().cmp(doc_id))
            .ok()
            .map(|i| &self.documents[i])
    }

    /// Documents of one author in one language, sorted by id.
    pub fn documents_of<'a>(&'a self, author: &'a str, language: &'a str) -> impl Iterator<Item = &'a DocumentRecord> + 'a {
        self.documents
            .iter()
            .filter(move |d| d.author_id == author && d.language == language)
    }

    pub fn resolve(&self, relative: &Path) -> PathBuf {
        self.root.join(relative)
    }

    pub fn read_text(&self, doc: &DocumentRecord) -> Result<String> {
        let path = self.resolve(&doc.text_path);
        std::fs::read_to_string(&path).map_err(|e| Error::io(path, e))
    }

    /// Parsed sentence trees; rejected sentences are logged and skipped.
    pub fn read_trees(&self, doc: &DocumentRecord) -> Result<Vec<DepTree>> {
        let rel = doc.conllu_path.as_ref().ok_or_else(|| Error::MissingParse {
            doc_id: doc.doc_id.clone(),
        })?;
        let path = self.resolve(rel);
        let content = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let parsed = parse_conllu(&content)?;
        for r in &parsed.rejected {
            log::warn!("{}: sentence at line {} dropped: {}", doc.doc_id, r.line, r.reason);
        }
        Ok(parsed.trees)
    }

    pub fn stats(&self) -> Result<CorpusStats> {
        let mut total_chars = 0usize;
        let mut languages = Vec::new();
        for lang in [&self.language_pair.0, &self.language_pair.1] {
            let docs: Vec<&DocumentRecord> = self.documents.iter().filter(|d| &d.language == lang).collect();
            let mut chars = 0usize;
            for d in &docs {
                chars += self.read_text(d)?.chars().count();
            }
            total_chars += chars;
            let min_docs = self
                .authors
                .iter()
                .map(|a| docs.iter().filter(|d| &d.author_id == a).count())
                .min()
                .unwrap_or(0);
            languages.push(LanguageStats {
                language: lang.clone(),
                documents: docs.len(),
                mean_chars: chars as f64 / docs.len().max(1) as f64,
                min_docs_per_author: min_docs,
            });
        }
        Ok(CorpusStats {
            authors: self.authors.len(),
            documents: self.documents.len(),
            mean_chars: total_chars as f64 / self.documents.len().max(1) as f64,
            languages,
            documents_without_parse: self.documents.iter().filter(|d| d.conllu_path.is_none()).count(),
        })
    }
}

fn manifest_error(e: &csv::Error, fallback_line: usize) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line() as usize);
    Error::Manifest {
        line,
        message: e.to_string(),
    }
}

/// Documents used by one repetition in one classification direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentSplit {
    pub train_language: String,
    pub test_language: String,
    pub train_docs: Vec<String>,
    pub test_docs: Vec<String>,
    /// Sorted.
    pub author_set: Vec<String>,
    pub seed: u64,
}

impl ExperimentSplit {
    /// Same selection, opposite direction.
    pub fn reversed(&self) -> Self {
        ExperimentSplit {
            train_language: self.test_language.clone(),
            test_language: self.train_language.clone(),
            train_docs: self.test_docs.clone(),
            test_docs: self.train_docs.clone(),
            author_set: self.author_set.clone(),
            seed: self.seed,
        }
    }
}

/// Draws `n_authors` authors and `docs_per_author` documents per author and
/// language.
///
/// With [`SplitRng`] seeded by `seed`: authors eligible for the draw (enough
/// documents on both sides) are sorted and `n_authors` of them sampled. Then,
/// for each chosen author in sorted order, documents of the two languages
/// (taken in lexicographic order of language code, each list sorted by id)
/// are sampled. The selection does not depend on `train_language` or on which
/// language the manifest lists first, so both directions of one seed use the
/// same documents.
pub fn sample_split(corpus: &Corpus, n_authors: usize, docs_per_author: usize, train_language: &str, seed: u64) -> Result<ExperimentSplit> {
    let test_language = corpus
        .other_language(train_language)
        .ok_or_else(|| {
            let (a, b) = corpus.language_pair();
            Error::Split(format!("language `{train_language}` is not in the corpus ({a}, {b})"))
        })?
        .to_string();
    if n_authors == 0 || docs_per_author == 0 {
        return Err(Error::Split("n_authors and docs_per_author must be positive".into()));
    }
    let (mut lang_a, mut lang_b) = corpus.language_pair();
    if lang_b < lang_a {
        std::mem::swap(&mut lang_a, &mut lang_b);
    }

    let mut eligible = Vec::new();
    let mut deficient = Vec::new();
    for a in corpus.authors() {
        let na = corpus.documents_of(a, lang_a).count();
        let nb = corpus.documents_of(a, lang_b).count();
        if na >= docs_per_author && nb >= docs_per_author {
            eligible.push(a.as_str());
        } else {
            deficient.push(format!("{a} ({na} {lang_a} + {nb} {lang_b})"));
        }
    }
    if eligible.len() < n_authors {
        return Err(Error::Split(format!(
            "need {n_authors} authors with at least {docs_per_author} documents per language, only {} qualify; deficient: {}",
            eligible.len(),
            if deficient.is_empty() { "none".to_string() } else { deficient.join(", ") }
        )));
    }

    let mut rng = SplitRng::new(seed);
    let mut chosen: Vec<&str> = rng
        .sample(eligible.len(), n_authors)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    chosen.sort_unstable();

    let mut picked: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for author in &chosen {
        for lang in [lang_a, lang_b] {
            let docs: Vec<&DocumentRecord> = corpus.documents_of(author, lang).collect();
            let mut ids: Vec<String> = rng
                .sample(docs.len(), docs_per_author)
                .into_iter()
                .map(|i| docs[i].doc_id.clone())
                .collect();
            ids.sort();
            picked.entry(lang).or_default().extend(ids);
        }
    }
    Ok(ExperimentSplit {
        train_docs: picked.remove(train_language).unwrap_or_default(),
        test_docs: picked.remove(test_language.as_str()).unwrap_or_default(),
        train_language: train_language.to_string(),
        test_language,
        author_set: chosen.into_iter().map(String::from).collect(),
        seed,
    })
}
