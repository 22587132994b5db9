use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{LdaError, LdaParams};
use crate::corpus::EncodedCorpus;

/// Collapsed Gibbs sampler state: topic assignments plus the count tables
/// they induce.
///
/// Tokens are stored flat in document order; `doc_offsets[d]..doc_offsets[d+1]`
/// is the span of document `d`. Count tables are row-major: the word-topic
/// table is indexed `[word * K + topic]`, the doc-topic table `[doc * K + topic]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerState {
    num_topics: usize,
    vocab_size: usize,
    words: Vec<u32>,
    doc_offsets: Vec<usize>,
    topics: Vec<u32>,
    word_topic: Vec<u32>,
    doc_topic: Vec<u32>,
    topic_totals: Vec<u32>,
    doc_totals: Vec<u32>,
    rng: Xoshiro256PlusPlus,
}

impl SamplerState {
    /// Assigns every token a topic drawn uniformly from a generator seeded
    /// with `params.seed`, in document-major, position-minor order.
    pub fn init(corpus: &EncodedCorpus, params: &LdaParams) -> Result<Self, LdaError> {
        params.validate()?;
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(params.seed);
        let k = params.num_topics as u32;
        let assignments = corpus
            .docs
            .iter()
            .map(|doc| doc.tokens.iter().map(|_| rng.random_range(0..k)).collect())
            .collect();
        Self::build(corpus, params.num_topics, assignments, rng)
    }

    /// Builds a state from explicit assignments, one list per document.
    pub fn from_assignments(
        corpus: &EncodedCorpus,
        num_topics: usize,
        assignments: Vec<Vec<u32>>,
        seed: u64,
    ) -> Result<Self, LdaError> {
        Self::build(
            corpus,
            num_topics,
            assignments,
            Xoshiro256PlusPlus::seed_from_u64(seed),
        )
    }

    fn build(
        corpus: &EncodedCorpus,
        num_topics: usize,
        assignments: Vec<Vec<u32>>,
        rng: Xoshiro256PlusPlus,
    ) -> Result<Self, LdaError> {
        if num_topics == 0 {
            return Err(LdaError::InvalidParams("num_topics must be at least 1".into()));
        }
        if corpus.num_tokens() == 0 || corpus.vocab_size() == 0 {
            return Err(LdaError::EmptyCorpus);
        }
        if assignments.len() != corpus.num_docs() {
            return Err(LdaError::InvalidParams(
                "one assignment list per document is required".into(),
            ));
        }

        let k = num_topics;
        let w = corpus.vocab_size();
        let d = corpus.num_docs();
        let n = corpus.num_tokens();
        let mut state = SamplerState {
            num_topics: k,
            vocab_size: w,
            words: Vec::with_capacity(n),
            doc_offsets: Vec::with_capacity(d + 1),
            topics: Vec::with_capacity(n),
            word_topic: vec![0; w * k],
            doc_topic: vec![0; d * k],
            topic_totals: vec![0; k],
            doc_totals: vec![0; d],
            rng,
        };
        state.doc_offsets.push(0);
        for (doc_idx, (doc, z)) in corpus.docs.iter().zip(assignments).enumerate() {
            if z.len() != doc.tokens.len() {
                return Err(LdaError::InvalidParams(format!(
                    "document {doc_idx} has {} tokens but {} assignments",
                    doc.tokens.len(),
                    z.len()
                )));
            }
            for (&word, topic) in doc.tokens.iter().zip(z) {
                if topic as usize >= k {
                    return Err(LdaError::TopicOutOfRange {
                        topic: topic as usize,
                        num_topics: k,
                    });
                }
                state.words.push(word);
                state.topics.push(topic);
                state.increment(word as usize, doc_idx, topic as usize);
            }
            state.doc_offsets.push(state.words.len());
        }
        Ok(state)
    }

    #[inline]
    fn increment(&mut self, word: usize, doc: usize, topic: usize) {
        let k = self.num_topics;
        self.word_topic[word * k + topic] += 1;
        self.doc_topic[doc * k + topic] += 1;
        self.topic_totals[topic] += 1;
        self.doc_totals[doc] += 1;
    }

    #[inline]
    fn decrement(&mut self, word: usize, doc: usize, topic: usize) {
        let k = self.num_topics;
        self.word_topic[word * k + topic] -= 1;
        self.doc_topic[doc * k + topic] -= 1;
        self.topic_totals[topic] -= 1;
        self.doc_totals[doc] -= 1;
    }

    /// Unnormalized conditional weights for one token, written into `out`.
    /// `exclude` is the topic whose counts still include the token itself.
    #[inline]
    fn weights_into(
        &self,
        word: usize,
        doc: usize,
        exclude: Option<usize>,
        alpha: f64,
        beta: f64,
        out: &mut [f64],
    ) {
        let k = self.num_topics;
        let w_beta = self.vocab_size as f64 * beta;
        let wt = &self.word_topic[word * k..(word + 1) * k];
        let dt = &self.doc_topic[doc * k..(doc + 1) * k];
        for topic in 0..k {
            let own = u32::from(exclude == Some(topic));
            let n_wt = f64::from(wt[topic] - own);
            let n_t = f64::from(self.topic_totals[topic] - own);
            let n_dt = f64::from(dt[topic] - own);
            out[topic] = (n_wt + beta) / (n_t + w_beta) * (n_dt + alpha);
        }
    }

    fn token_index(&self, doc: usize, position: usize) -> Result<usize, LdaError> {
        let out_of_range = LdaError::PositionOutOfRange { doc, position };
        if doc + 1 >= self.doc_offsets.len() {
            return Err(out_of_range);
        }
        let idx = self.doc_offsets[doc] + position;
        if idx >= self.doc_offsets[doc + 1] {
            return Err(out_of_range);
        }
        Ok(idx)
    }

    /// Full conditional of the topic of token (`doc`, `position`) given every
    /// other assignment, normalized to sum to one.
    pub fn conditional(
        &self,
        params: &LdaParams,
        doc: usize,
        position: usize,
    ) -> Result<Vec<f64>, LdaError> {
        let idx = self.token_index(doc, position)?;
        let mut probs = vec![0.0; self.num_topics];
        self.weights_into(
            self.words[idx] as usize,
            doc,
            Some(self.topics[idx] as usize),
            params.alpha,
            params.beta,
            &mut probs,
        );
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        Ok(probs)
    }

    /// Resamples every token once, documents in order, positions in order.
    pub fn sweep(&mut self, params: &LdaParams) {
        let k = self.num_topics;
        let (alpha, beta) = (params.alpha, params.beta);
        let mut cumulative = vec![0.0; k];
        for doc in 0..self.doc_totals.len() {
            for idx in self.doc_offsets[doc]..self.doc_offsets[doc + 1] {
                let word = self.words[idx] as usize;
                let old = self.topics[idx] as usize;
                self.decrement(word, doc, old);

                self.weights_into(word, doc, None, alpha, beta, &mut cumulative);
                let mut total = 0.0;
                for c in cumulative.iter_mut() {
                    total += *c;
                    *c = total;
                }
                let u = self.rng.random::<f64>() * total;
                let new = cumulative.iter().position(|&c| u < c).unwrap_or(k - 1);

                self.topics[idx] = new as u32;
                self.increment(word, doc, new);
            }
        }
    }

    /// Joint log p(w, z) with topic-word and doc-topic distributions
    /// integrated out.
    pub fn log_likelihood(&self, params: &LdaParams) -> f64 {
        let k = self.num_topics;
        let w = self.vocab_size;
        let (alpha, beta) = (params.alpha, params.beta);

        let ln_gamma_beta = ln_gamma(beta);
        let ln_gamma_w_beta = ln_gamma(w as f64 * beta);
        let mut words_given_topics = 0.0;
        for topic in 0..k {
            for word in 0..w {
                let n = self.word_topic[word * k + topic];
                if n > 0 {
                    words_given_topics += ln_gamma(f64::from(n) + beta) - ln_gamma_beta;
                }
            }
            words_given_topics +=
                ln_gamma_w_beta - ln_gamma(f64::from(self.topic_totals[topic]) + w as f64 * beta);
        }

        let ln_gamma_alpha = ln_gamma(alpha);
        let ln_gamma_k_alpha = ln_gamma(k as f64 * alpha);
        let mut topics = 0.0;
        for doc in 0..self.doc_totals.len() {
            for topic in 0..k {
                let n = self.doc_topic[doc * k + topic];
                if n > 0 {
                    topics += ln_gamma(f64::from(n) + alpha) - ln_gamma_alpha;
                }
            }
            topics +=
                ln_gamma_k_alpha - ln_gamma(f64::from(self.doc_totals[doc]) + k as f64 * alpha);
        }

        words_given_topics + topics
    }

    /// Smoothed topic-word estimate, K×W row-major.
    pub fn phi(&self, beta: f64) -> Vec<f64> {
        let (k, w) = (self.num_topics, self.vocab_size);
        let w_beta = w as f64 * beta;
        let mut phi = vec![0.0; k * w];
        for topic in 0..k {
            let denom = f64::from(self.topic_totals[topic]) + w_beta;
            for word in 0..w {
                phi[topic * w + word] = (f64::from(self.word_topic[word * k + topic]) + beta) / denom;
            }
        }
        phi
    }

    /// Smoothed document-topic estimate, D×K row-major.
    pub fn theta(&self, alpha: f64) -> Vec<f64> {
        let k = self.num_topics;
        let k_alpha = k as f64 * alpha;
        let mut theta = vec![0.0; self.doc_totals.len() * k];
        for (doc, &n_d) in self.doc_totals.iter().enumerate() {
            let denom = f64::from(n_d) + k_alpha;
            for topic in 0..k {
                theta[doc * k + topic] = (f64::from(self.doc_topic[doc * k + topic]) + alpha) / denom;
            }
        }
        theta
    }

    pub fn num_topics(&self) -> usize {
        self.num_topics
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn num_docs(&self) -> usize {
        self.doc_totals.len()
    }

    pub fn num_tokens(&self) -> usize {
        self.words.len()
    }

    /// Topic assignments of document `doc`.
    pub fn assignments(&self, doc: usize) -> &[u32] {
        &self.topics[self.doc_offsets[doc]..self.doc_offsets[doc + 1]]
    }

    /// Word ids of document `doc`.
    pub fn doc_words(&self, doc: usize) -> &[u32] {
        &self.words[self.doc_offsets[doc]..self.doc_offsets[doc + 1]]
    }

    /// All assignments flattened in document order.
    pub fn all_assignments(&self) -> &[u32] {
        &self.topics
    }

    pub fn word_topic_count(&self, word: usize, topic: usize) -> u32 {
        self.word_topic[word * self.num_topics + topic]
    }

    pub fn doc_topic_count(&self, doc: usize, topic: usize) -> u32 {
        self.doc_topic[doc * self.num_topics + topic]
    }

    pub fn topic_total(&self, topic: usize) -> u32 {
        self.topic_totals[topic]
    }

    pub fn doc_total(&self, doc: usize) -> u32 {
        self.doc_totals[doc]
    }

    pub fn rng(&self) -> &Xoshiro256PlusPlus {
        &self.rng
    }
}
