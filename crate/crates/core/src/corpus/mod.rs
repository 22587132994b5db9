//! Corpus ingestion and preprocessing.
//!
//! Raw documents go through a fixed pipeline: section filter, tokenization,
//! stopword removal, optional stemming, document-frequency pruning and
//! integer encoding. The result is an [`EncodedCorpus`] ready for the sampler.

mod ingest;
mod text;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use ingest::{
    ingest, Corpus, IngestManifest, IngestReport, SectionFilter, SkipReason, SkippedDocument,
};
pub use text::{default_stopwords, parse_stopword_list, remove_stopwords, stem, stem_with, tokenize};

use crate::ids::content_id;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON on line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("duplicate doc_id {0:?}")]
    DuplicateDocId(String),
    #[error("invalid preprocessing config: {0}")]
    InvalidConfig(String),
    #[error("corpus has no documents")]
    EmptyCorpus,
    #[error("every document is empty after preprocessing")]
    AllDocumentsEmpty,
    #[error("invalid encoded corpus: {0}")]
    InvalidEncoding(String),
}

impl CorpusError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.to_owned(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub section_tags: Vec<String>,
    pub raw_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub stopwords: BTreeSet<String>,
    pub min_token_length: usize,
    pub min_document_frequency: usize,
    pub stemming_enabled: bool,
    pub strip_prefixes: bool,
    pub section_filter: Option<SectionFilter>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            stopwords: default_stopwords(),
            min_token_length: 2,
            min_document_frequency: 2,
            stemming_enabled: true,
            strip_prefixes: false,
            section_filter: None,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.min_token_length < 1 {
            return Err(CorpusError::InvalidConfig(
                "min_token_length must be at least 1".into(),
            ));
        }
        if self.min_document_frequency < 1 {
            return Err(CorpusError::InvalidConfig(
                "min_document_frequency must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Tokenize, drop stopwords and stem (when enabled) one text.
    pub fn clean(&self, raw_text: &str) -> Vec<String> {
        let tokens = remove_stopwords(tokenize(raw_text, self), self);
        if self.stemming_enabled {
            tokens
                .iter()
                .map(|t| stem_with(t, self.strip_prefixes))
                .collect()
        } else {
            tokens
        }
    }
}

/// Word list with contiguous ids. `id_to_word` is kept in lexicographic order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    id_to_word: Vec<String>,
    document_frequency: Vec<u32>,
    word_to_id: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    id_to_word: Vec<String>,
    document_frequency: Vec<u32>,
}

impl TryFrom<VocabularyRepr> for Vocabulary {
    type Error = String;

    fn try_from(repr: VocabularyRepr) -> Result<Self, Self::Error> {
        if repr.id_to_word.len() != repr.document_frequency.len() {
            return Err("id_to_word and document_frequency lengths differ".into());
        }
        let mut word_to_id = HashMap::with_capacity(repr.id_to_word.len());
        for (id, word) in repr.id_to_word.iter().enumerate() {
            if word_to_id.insert(word.clone(), id as u32).is_some() {
                return Err(format!("word {word:?} appears twice"));
            }
        }
        Ok(Vocabulary {
            id_to_word: repr.id_to_word,
            document_frequency: repr.document_frequency,
            word_to_id,
        })
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            id_to_word: v.id_to_word,
            document_frequency: v.document_frequency,
        }
    }
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.id_to_word == other.id_to_word && self.document_frequency == other.document_frequency
    }
}

impl Vocabulary {
    fn from_frequencies(frequencies: BTreeMap<String, u32>) -> Self {
        let (id_to_word, document_frequency): (Vec<_>, Vec<_>) = frequencies.into_iter().unzip();
        let word_to_id = id_to_word
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Vocabulary {
            id_to_word,
            document_frequency,
            word_to_id,
        }
    }

    pub fn len(&self) -> usize {
        self.id_to_word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_word.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.word_to_id.get(word).copied()
    }

    pub fn word(&self, id: u32) -> Option<&str> {
        self.id_to_word.get(id as usize).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.id_to_word
    }

    pub fn document_frequency(&self, id: u32) -> Option<u32> {
        self.document_frequency.get(id as usize).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedDocument {
    pub doc_id: String,
    pub title: String,
    pub tokens: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedWord {
    pub word: String,
    pub document_frequency: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessReport {
    /// Documents removed by the section filter.
    pub section_filtered: Vec<String>,
    /// Words below the document-frequency floor, in lexicographic order.
    pub dropped_words: Vec<DroppedWord>,
    /// Documents with no tokens left after cleaning and pruning.
    pub dropped_documents: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedCorpus {
    /// Content hash of vocabulary, documents and config.
    pub id: String,
    pub vocabulary: Vocabulary,
    pub docs: Vec<EncodedDocument>,
    pub provenance: PreprocessConfig,
    pub report: PreprocessReport,
}

impl EncodedCorpus {
    /// Assembles a corpus from already-encoded documents, e.g. synthetic data.
    ///
    /// Empty documents are dropped and reported. Every word in `words` gets
    /// the document frequency observed in `docs` and must occur at least once.
    pub fn from_token_ids(
        words: Vec<String>,
        docs: Vec<(String, Vec<u32>)>,
    ) -> Result<Self, CorpusError> {
        let mut df = vec![0u32; words.len()];
        let mut report = PreprocessReport::default();
        let mut encoded = Vec::with_capacity(docs.len());
        for (doc_id, tokens) in docs {
            if let Some(bad) = tokens.iter().find(|&&t| t as usize >= words.len()) {
                return Err(CorpusError::InvalidEncoding(format!(
                    "token id {bad} in {doc_id} exceeds vocabulary size {}",
                    words.len()
                )));
            }
            if tokens.is_empty() {
                report.dropped_documents.push(doc_id);
                continue;
            }
            let distinct: BTreeSet<u32> = tokens.iter().copied().collect();
            for t in distinct {
                df[t as usize] += 1;
            }
            encoded.push(EncodedDocument {
                title: doc_id.clone(),
                doc_id,
                tokens,
            });
        }
        if encoded.is_empty() {
            return Err(CorpusError::AllDocumentsEmpty);
        }
        if let Some(unused) = df.iter().position(|&n| n == 0) {
            return Err(CorpusError::InvalidEncoding(format!(
                "word {:?} occurs in no document",
                words[unused]
            )));
        }
        let vocabulary = Vocabulary::try_from(VocabularyRepr {
            id_to_word: words,
            document_frequency: df,
        })
        .map_err(CorpusError::InvalidEncoding)?;
        let provenance = PreprocessConfig {
            stopwords: BTreeSet::new(),
            min_token_length: 1,
            min_document_frequency: 1,
            stemming_enabled: false,
            strip_prefixes: false,
            section_filter: None,
        };
        Ok(Self::assemble(vocabulary, encoded, provenance, report))
    }

    fn assemble(
        vocabulary: Vocabulary,
        docs: Vec<EncodedDocument>,
        provenance: PreprocessConfig,
        report: PreprocessReport,
    ) -> Self {
        let id = content_id(&(&vocabulary, &docs, &provenance));
        EncodedCorpus {
            id,
            vocabulary,
            docs,
            provenance,
            report,
        }
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn num_tokens(&self) -> usize {
        self.docs.iter().map(|d| d.tokens.len()).sum()
    }

    /// Corpus frequency of every word id.
    pub fn word_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.vocab_size()];
        for doc in &self.docs {
            for &t in &doc.tokens {
                counts[t as usize] += 1;
            }
        }
        counts
    }

    /// Checks the structural invariants; used on corpora read from disk.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let w = self.vocab_size();
        for doc in &self.docs {
            if doc.tokens.is_empty() {
                return Err(CorpusError::InvalidEncoding(format!(
                    "document {} is empty",
                    doc.doc_id
                )));
            }
            if let Some(bad) = doc.tokens.iter().find(|&&t| t as usize >= w) {
                return Err(CorpusError::InvalidEncoding(format!(
                    "token id {bad} in {} exceeds vocabulary size {w}",
                    doc.doc_id
                )));
            }
        }
        let mut ids = BTreeSet::new();
        if let Some(dup) = self.docs.iter().find(|d| !ids.insert(&d.doc_id)) {
            return Err(CorpusError::DuplicateDocId(dup.doc_id.clone()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("encoded corpus serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        let corpus: EncodedCorpus = serde_json::from_str(text)
            .map_err(|e| CorpusError::InvalidEncoding(e.to_string()))?;
        corpus.validate()?;
        Ok(corpus)
    }
}

/// Runs the full preprocessing pipeline over `corpus`.
pub fn build_encoded_corpus(
    corpus: &Corpus,
    config: &PreprocessConfig,
) -> Result<EncodedCorpus, CorpusError> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }

    let mut report = PreprocessReport::default();
    let mut cleaned: Vec<(&crate::corpus::Document, Vec<String>)> = Vec::new();
    for doc in &corpus.documents {
        if let Some(filter) = &config.section_filter {
            if !filter.accepts(doc) {
                report.section_filtered.push(doc.doc_id.clone());
                continue;
            }
        }
        cleaned.push((doc, config.clean(&doc.raw_text)));
    }

    let mut df: BTreeMap<String, u32> = BTreeMap::new();
    for (_, tokens) in &cleaned {
        let distinct: BTreeSet<&String> = tokens.iter().collect();
        for token in distinct {
            *df.entry(token.clone()).or_insert(0) += 1;
        }
    }
    let min_df = config.min_document_frequency as u32;
    let (kept, dropped): (BTreeMap<_, _>, BTreeMap<_, _>) =
        df.into_iter().partition(|(_, n)| *n >= min_df);
    report.dropped_words = dropped
        .into_iter()
        .map(|(word, document_frequency)| DroppedWord {
            word,
            document_frequency,
        })
        .collect();
    let vocabulary = Vocabulary::from_frequencies(kept);

    let mut docs = Vec::with_capacity(cleaned.len());
    for (doc, tokens) in cleaned {
        let ids: Vec<u32> = tokens.iter().filter_map(|t| vocabulary.id(t)).collect();
        if ids.is_empty() {
            report.dropped_documents.push(doc.doc_id.clone());
        } else {
            docs.push(EncodedDocument {
                doc_id: doc.doc_id.clone(),
                title: doc.title.clone(),
                tokens: ids,
            });
        }
    }
    if docs.is_empty() {
        return Err(CorpusError::AllDocumentsEmpty);
    }

    Ok(EncodedCorpus::assemble(
        vocabulary,
        docs,
        config.clone(),
        report,
    ))
}
