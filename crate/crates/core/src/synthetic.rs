//! Synthetic corpora drawn from the LDA generative process with known topics.
//!
//! Used to check that the sampler recovers planted structure and to drive the
//! runnable examples without a real document collection.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_distr::Gamma;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::corpus::EncodedCorpus;
use crate::lda::TopicModel;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub num_topics: usize,
    pub vocab_size: usize,
    pub num_docs: usize,
    pub doc_length: usize,
    /// Symmetric Dirichlet parameter of each planted topic-word distribution.
    pub topic_concentration: f64,
    /// Symmetric Dirichlet parameter of each document's topic mixture.
    pub doc_concentration: f64,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            num_topics: 5,
            vocab_size: 100,
            num_docs: 200,
            doc_length: 50,
            topic_concentration: 0.1,
            doc_concentration: 0.5,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub corpus: EncodedCorpus,
    /// Planted topic-word distributions, one row per topic.
    pub phi: Vec<Vec<f64>>,
    /// Planted document mixtures, one row per document.
    pub theta: Vec<Vec<f64>>,
}

fn dirichlet(rng: &mut Xoshiro256PlusPlus, dim: usize, concentration: f64) -> Vec<f64> {
    let gamma = Gamma::new(concentration, 1.0).expect("positive concentration");
    loop {
        let draws: Vec<f64> = (0..dim).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        // tiny concentrations can underflow every component
        if total > 0.0 {
            return draws.into_iter().map(|x| x / total).collect();
        }
    }
}

/// Generated word `i` is named `w{i:03}`, so lexicographic order equals
/// generation order.
pub fn planted_corpus(spec: &PlantedSpec) -> PlantedCorpus {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(spec.seed);
    let phi: Vec<Vec<f64>> = (0..spec.num_topics)
        .map(|_| dirichlet(&mut rng, spec.vocab_size, spec.topic_concentration))
        .collect();
    let word_samplers: Vec<WeightedIndex<f64>> = phi
        .iter()
        .map(|row| WeightedIndex::new(row).expect("valid topic row"))
        .collect();

    let mut theta = Vec::with_capacity(spec.num_docs);
    let mut docs = Vec::with_capacity(spec.num_docs);
    for d in 0..spec.num_docs {
        let mixture = dirichlet(&mut rng, spec.num_topics, spec.doc_concentration);
        let topic_sampler = WeightedIndex::new(&mixture).expect("valid mixture");
        let tokens: Vec<u32> = (0..spec.doc_length)
            .map(|_| word_samplers[topic_sampler.sample(&mut rng)].sample(&mut rng) as u32)
            .collect();
        theta.push(mixture);
        docs.push((format!("doc_{d:04}"), tokens));
    }

    // Words never drawn are left out of the vocabulary; the planted rows are
    // restricted to the observed words and renormalized to match.
    let mut used = vec![false; spec.vocab_size];
    for (_, tokens) in &docs {
        for &t in tokens {
            used[t as usize] = true;
        }
    }
    let mut remap = vec![u32::MAX; spec.vocab_size];
    let mut words = Vec::new();
    for (old, _) in used.iter().enumerate().filter(|(_, &u)| u) {
        remap[old] = words.len() as u32;
        words.push(format!("w{old:03}"));
    }
    for (_, tokens) in docs.iter_mut() {
        tokens.iter_mut().for_each(|t| *t = remap[*t as usize]);
    }
    let phi = phi
        .into_iter()
        .map(|row| {
            let kept: Vec<f64> = row
                .into_iter()
                .zip(&used)
                .filter(|(_, &u)| u)
                .map(|(p, _)| p)
                .collect();
            let total: f64 = kept.iter().sum();
            kept.into_iter().map(|p| p / total).collect()
        })
        .collect();

    let corpus = EncodedCorpus::from_token_ids(words, docs).expect("non-empty synthetic corpus");
    PlantedCorpus { corpus, phi, theta }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Mean cosine similarity between planted and recovered topics after pairing
/// them greedily (highest similarity first, one-to-one).
///
/// The recovered model must share the planted corpus vocabulary order.
pub fn matched_cosine(model: &TopicModel, planted: &[Vec<f64>]) -> f64 {
    let mut pairs = Vec::new();
    for (p, row) in planted.iter().enumerate() {
        for k in 0..model.num_topics {
            pairs.push((cosine(row, model.phi_row(k)), p, k));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut used_p = vec![false; planted.len()];
    let mut used_k = vec![false; model.num_topics];
    let mut total = 0.0;
    let mut matched = 0usize;
    for (sim, p, k) in pairs {
        if !used_p[p] && !used_k[k] {
            used_p[p] = true;
            used_k[k] = true;
            total += sim;
            matched += 1;
        }
    }
    total / matched as f64
}
