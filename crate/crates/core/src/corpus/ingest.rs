use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CorpusError, Document};

/// Keeps or drops documents by their section tags.
///
/// A document passes when it carries none of the `exclude` tags and, if
/// `include` is non-empty, at least one of the `include` tags.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionFilter {
    #[serde(default)]
    pub include: BTreeSet<String>,
    #[serde(default)]
    pub exclude: BTreeSet<String>,
}

impl SectionFilter {
    pub fn excluding<I, S>(tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        SectionFilter {
            include: BTreeSet::new(),
            exclude: tags.into_iter().map(Into::into).collect(),
        }
    }

    pub fn including<I, S>(tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        SectionFilter {
            include: tags.into_iter().map(Into::into).collect(),
            exclude: BTreeSet::new(),
        }
    }

    pub fn accepts(&self, doc: &Document) -> bool {
        let excluded = doc.section_tags.iter().any(|t| self.exclude.contains(t));
        let included = self.include.is_empty()
            || doc.section_tags.iter().any(|t| self.include.contains(t));
        included && !excluded
    }
}

/// Options applied while reading a source.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestManifest {
    #[serde(default)]
    pub section_filter: Option<SectionFilter>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    EmptyText,
    SectionFiltered,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedDocument {
    pub doc_id: String,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub skipped: Vec<SkippedDocument>,
}

/// Raw documents as read from a source, plus what was skipped on the way.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub report: IngestReport,
}

impl Corpus {
    /// Builds a corpus from in-memory documents with the same checks `ingest`
    /// applies: duplicate ids are rejected, blank texts and filtered sections
    /// are skipped and reported.
    pub fn from_documents(
        documents: impl IntoIterator<Item = Document>,
        manifest: &IngestManifest,
    ) -> Result<Self, CorpusError> {
        let mut corpus = Corpus::default();
        let mut seen = HashSet::new();
        for doc in documents {
            if !seen.insert(doc.doc_id.clone()) {
                return Err(CorpusError::DuplicateDocId(doc.doc_id));
            }
            let reason = if doc.raw_text.trim().is_empty() {
                Some(SkipReason::EmptyText)
            } else if manifest
                .section_filter
                .as_ref()
                .is_some_and(|f| !f.accepts(&doc))
            {
                Some(SkipReason::SectionFiltered)
            } else {
                None
            };
            match reason {
                Some(reason) => corpus.report.skipped.push(SkippedDocument {
                    doc_id: doc.doc_id,
                    reason,
                }),
                None => corpus.documents.push(doc),
            }
        }
        Ok(corpus)
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }
}

#[derive(Deserialize)]
struct JsonlRecord {
    doc_id: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    section_tags: Vec<String>,
    raw_text: String,
}

/// Reads documents from a directory of `.txt` files or from a JSON-Lines file.
///
/// Directory entries become documents whose id and title are the file stem,
/// visited in file-name order. JSONL lines carry `doc_id`, `title`,
/// `section_tags` and `raw_text`; blank lines are ignored.
pub fn ingest(source: &Path, manifest: &IngestManifest) -> Result<Corpus, CorpusError> {
    let meta = fs::metadata(source).map_err(|e| CorpusError::io(source, e))?;
    let documents = if meta.is_dir() {
        read_text_dir(source)?
    } else {
        read_jsonl(source)?
    };
    Corpus::from_documents(documents, manifest)
}

fn read_text_dir(dir: &Path) -> Result<Vec<Document>, CorpusError> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CorpusError::io(dir, e))? {
        let path = entry.map_err(|e| CorpusError::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|ext| ext == "txt") {
            paths.push(path);
        }
    }
    paths.sort();

    paths
        .into_iter()
        .map(|path| {
            let raw_text = fs::read_to_string(&path).map_err(|e| CorpusError::io(&path, e))?;
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(Document {
                doc_id: stem.clone(),
                title: stem,
                section_tags: Vec::new(),
                raw_text,
            })
        })
        .collect()
}

fn read_jsonl(path: &Path) -> Result<Vec<Document>, CorpusError> {
    let file = fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut documents = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: JsonlRecord =
            serde_json::from_str(&line).map_err(|e| CorpusError::MalformedLine {
                line: idx + 1,
                message: e.to_string(),
            })?;
        documents.push(Document {
            doc_id: record.doc_id,
            title: record.title,
            section_tags: record.section_tags,
            raw_text: record.raw_text,
        });
    }
    Ok(documents)
}
