use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{LdaError, LdaParams};
use crate::corpus::EncodedCorpus;
use crate::ids::content_id;

const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// A fitted topic model. Immutable once built.
///
/// `phi` is K×W and `theta` is D×K, both dense and row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    /// Derived from the corpus id and the parameters, so identical runs share it.
    pub id: String,
    pub corpus_ref: String,
    pub params: LdaParams,
    pub num_topics: usize,
    pub vocabulary: Vec<String>,
    pub doc_ids: Vec<String>,
    /// `params.top_n_words` highest-probability words of each topic.
    pub top_words: Vec<Vec<String>>,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub log_likelihood_trace: Vec<f64>,
}

impl TopicModel {
    pub(super) fn assemble(
        corpus: &EncodedCorpus,
        params: LdaParams,
        phi: Vec<f64>,
        theta: Vec<f64>,
        log_likelihood_trace: Vec<f64>,
    ) -> Self {
        let mut model = TopicModel {
            id: content_id(&(&corpus.id, &params)),
            corpus_ref: corpus.id.clone(),
            num_topics: params.num_topics,
            params,
            vocabulary: corpus.vocabulary.words().to_vec(),
            doc_ids: corpus.docs.iter().map(|d| d.doc_id.clone()).collect(),
            top_words: Vec::new(),
            phi,
            theta,
            log_likelihood_trace,
        };
        let n = model.params.top_n_words;
        model.top_words = (0..model.num_topics)
            .map(|k| model.top_words(k, n).expect("topic in range"))
            .collect();
        model
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn phi_row(&self, topic: usize) -> &[f64] {
        let w = self.vocab_size();
        &self.phi[topic * w..(topic + 1) * w]
    }

    pub fn theta_row(&self, doc: usize) -> &[f64] {
        let k = self.num_topics;
        &self.theta[doc * k..(doc + 1) * k]
    }

    fn check_topic(&self, topic: usize) -> Result<(), LdaError> {
        if topic < self.num_topics {
            Ok(())
        } else {
            Err(LdaError::TopicOutOfRange {
                topic,
                num_topics: self.num_topics,
            })
        }
    }

    /// The `n` most probable words of `topic` with their probabilities.
    /// Ties in probability are broken by the word, ascending.
    pub fn top_words_scored(&self, topic: usize, n: usize) -> Result<Vec<(String, f64)>, LdaError> {
        self.check_topic(topic)?;
        let row = self.phi_row(topic);
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&a, &b| {
            row[b]
                .partial_cmp(&row[a])
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.vocabulary[a].cmp(&self.vocabulary[b]))
        });
        Ok(order
            .into_iter()
            .take(n)
            .map(|w| (self.vocabulary[w].clone(), row[w]))
            .collect())
    }

    pub fn top_words(&self, topic: usize, n: usize) -> Result<Vec<String>, LdaError> {
        Ok(self
            .top_words_scored(topic, n)?
            .into_iter()
            .map(|(w, _)| w)
            .collect())
    }

    /// Documents ranked by their weight on `topic`, ties by doc id ascending.
    pub fn top_documents(&self, topic: usize, n: usize) -> Result<Vec<(String, f64)>, LdaError> {
        self.check_topic(topic)?;
        let mut docs: Vec<(String, f64)> = (0..self.num_docs())
            .map(|d| (self.doc_ids[d].clone(), self.theta_row(d)[topic]))
            .collect();
        docs.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        });
        docs.truncate(n);
        Ok(docs)
    }

    /// Document-topic matrix as CSV: `doc_id,topic_0,...,topic_{K-1}`.
    pub fn theta_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["doc_id".to_string()];
        header.extend((0..self.num_topics).map(|k| format!("topic_{k}")));
        writer.write_record(&header).expect("write to memory");
        for (d, doc_id) in self.doc_ids.iter().enumerate() {
            let mut record = vec![doc_id.clone()];
            record.extend(self.theta_row(d).iter().map(|v| v.to_string()));
            writer.write_record(&record).expect("write to memory");
        }
        String::from_utf8(writer.into_inner().expect("flush to memory")).expect("utf-8 csv")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LdaError> {
        let model: TopicModel =
            serde_json::from_str(text).map_err(|e| LdaError::InvalidModel(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    /// Checks shapes and that every row of phi and theta is a distribution.
    pub fn validate(&self) -> Result<(), LdaError> {
        let invalid = |msg: String| Err(LdaError::InvalidModel(msg));
        let (k, w, d) = (self.num_topics, self.vocab_size(), self.num_docs());
        if k == 0 || self.params.num_topics != k {
            return invalid("num_topics disagrees with params".into());
        }
        if self.phi.len() != k * w {
            return invalid(format!("phi has {} entries, expected {}", self.phi.len(), k * w));
        }
        if self.theta.len() != d * k {
            return invalid(format!("theta has {} entries, expected {}", self.theta.len(), d * k));
        }
        if self.top_words.len() != k {
            return invalid("top_words must have one list per topic".into());
        }
        let rows = (0..k)
            .map(|t| ("phi", t, self.phi_row(t)))
            .chain((0..d).map(|r| ("theta", r, self.theta_row(r))));
        for (name, idx, row) in rows {
            if row.iter().any(|&x| !(x >= 0.0)) {
                return invalid(format!("{name} row {idx} has a negative or NaN entry"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return invalid(format!("{name} row {idx} sums to {sum}"));
            }
        }
        Ok(())
    }
}
