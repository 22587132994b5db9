//! Comparing topic sets fitted at different numbers of topics.
//!
//! Two topics are considered the same when they share at least `threshold`
//! of their top words. Topics of one set are paired one-to-one with topics of
//! another by a greedy rule, and the share of paired topics is the directional
//! coverage used to pick K.

use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::EncodedCorpus;
use crate::ids::content_id;
use crate::lda::{run_lda, LdaError, LdaParams, TopicModel};

pub const DEFAULT_THRESHOLD: usize = 5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TopicSimError {
    #[error("topic set {0:?} is empty")]
    EmptySet(String),
    #[error("threshold must be at least 1")]
    InvalidThreshold,
    #[error("invalid topic set {set:?}: {reason}")]
    InvalidSet { set: String, reason: String },
    #[error("a grid needs at least two distinct numbers of topics, got {0:?}")]
    TooFewK(Vec<usize>),
    #[error("grid is missing the report {from_k} -> {to_k}")]
    IncompleteGrid { from_k: usize, to_k: usize },
    #[error(transparent)]
    Lda(#[from] LdaError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicWords {
    pub topic_id: usize,
    pub words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicSet {
    pub model_ref: String,
    pub topics: Vec<TopicWords>,
}

impl TopicSet {
    pub fn new(model_ref: impl Into<String>, topics: Vec<TopicWords>) -> Result<Self, TopicSimError> {
        let set = TopicSet {
            model_ref: model_ref.into(),
            topics,
        };
        set.validate()?;
        Ok(set)
    }

    /// Top `n` words of every topic of `model`.
    pub fn from_model(model: &TopicModel, n: usize) -> Self {
        let topics = (0..model.num_topics)
            .map(|k| TopicWords {
                topic_id: k,
                words: model.top_words(k, n).expect("topic in range"),
            })
            .collect();
        TopicSet {
            model_ref: model.id.clone(),
            topics,
        }
    }

    pub fn validate(&self) -> Result<(), TopicSimError> {
        let invalid = |reason: String| TopicSimError::InvalidSet {
            set: self.model_ref.clone(),
            reason,
        };
        let mut ids = HashSet::new();
        for topic in &self.topics {
            if !ids.insert(topic.topic_id) {
                return Err(invalid(format!("topic id {} repeated", topic.topic_id)));
            }
            if topic.words.is_empty() {
                return Err(invalid(format!("topic {} has no words", topic.topic_id)));
            }
            let distinct: HashSet<&String> = topic.words.iter().collect();
            if distinct.len() != topic.words.len() {
                return Err(invalid(format!("topic {} repeats a word", topic.topic_id)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub from: usize,
    pub to: usize,
    pub shared: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    /// Pairs in the order they were chosen.
    pub pairs: Vec<MatchedPair>,
    pub unmatched_from: Vec<usize>,
    pub unmatched_to: Vec<usize>,
}

impl Matching {
    pub fn total_overlap(&self) -> usize {
        self.pairs.iter().map(|p| p.shared).sum()
    }
}

/// Number of words the two lists have in common.
pub fn shared_words(a: &[String], b: &[String]) -> usize {
    let b: HashSet<&String> = b.iter().collect();
    a.iter().filter(|w| b.contains(w)).count()
}

fn check_inputs(a: &TopicSet, b: &TopicSet, threshold: usize) -> Result<(), TopicSimError> {
    if threshold < 1 {
        return Err(TopicSimError::InvalidThreshold);
    }
    for set in [a, b] {
        if set.is_empty() {
            return Err(TopicSimError::EmptySet(set.model_ref.clone()));
        }
        set.validate()?;
    }
    Ok(())
}

/// Greedy one-to-one matching. Among all pairs sharing at least `threshold`
/// words, repeatedly takes the pair with the largest overlap, ties going to
/// the lower `a` topic id and then the lower `b` topic id.
pub fn match_topics(a: &TopicSet, b: &TopicSet, threshold: usize) -> Result<Matching, TopicSimError> {
    check_inputs(a, b, threshold)?;

    let mut candidates = Vec::new();
    for ta in &a.topics {
        for tb in &b.topics {
            let shared = shared_words(&ta.words, &tb.words);
            if shared >= threshold {
                candidates.push(MatchedPair {
                    from: ta.topic_id,
                    to: tb.topic_id,
                    shared,
                });
            }
        }
    }
    candidates.sort_by(|x, y| {
        y.shared
            .cmp(&x.shared)
            .then(x.from.cmp(&y.from))
            .then(x.to.cmp(&y.to))
    });

    let mut used_from = HashSet::new();
    let mut used_to = HashSet::new();
    let mut pairs = Vec::new();
    for c in candidates {
        if !used_from.contains(&c.from) && !used_to.contains(&c.to) {
            used_from.insert(c.from);
            used_to.insert(c.to);
            pairs.push(c);
        }
    }

    let unmatched = |set: &TopicSet, used: &HashSet<usize>| -> Vec<usize> {
        let ids: BTreeSet<usize> = set.topics.iter().map(|t| t.topic_id).collect();
        ids.into_iter().filter(|id| !used.contains(id)).collect()
    };
    Ok(Matching {
        unmatched_from: unmatched(a, &used_from),
        unmatched_to: unmatched(b, &used_to),
        pairs,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicMatch {
    pub topic_id: usize,
    pub matched_id: Option<usize>,
    pub shared: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub from_set: String,
    pub to_set: String,
    pub from_k: usize,
    pub to_k: usize,
    pub threshold: usize,
    /// One entry per topic of the `from` set, by topic id.
    pub matches: Vec<TopicMatch>,
    pub covered_count: usize,
    pub coverage_percent: f64,
}

/// Share of `a`'s topics that have a partner in `b`. Not symmetric.
pub fn coverage(a: &TopicSet, b: &TopicSet, threshold: usize) -> Result<CoverageReport, TopicSimError> {
    let matching = match_topics(a, b, threshold)?;
    let mut matches: Vec<TopicMatch> = a
        .topics
        .iter()
        .map(|t| {
            let pair = matching.pairs.iter().find(|p| p.from == t.topic_id);
            TopicMatch {
                topic_id: t.topic_id,
                matched_id: pair.map(|p| p.to),
                shared: pair.map_or(0, |p| p.shared),
            }
        })
        .collect();
    matches.sort_by_key(|m| m.topic_id);
    let covered_count = matching.pairs.len();
    Ok(CoverageReport {
        from_set: a.model_ref.clone(),
        to_set: b.model_ref.clone(),
        from_k: a.len(),
        to_k: b.len(),
        threshold,
        matches,
        covered_count,
        coverage_percent: 100.0 * covered_count as f64 / a.len() as f64,
    })
}

/// Seed for the run at `num_topics` in a grid started from `base_seed`:
/// the SplitMix64 finalizer applied to `base_seed + num_topics * 0x9E3779B97F4A7C15`.
pub fn derive_seed(base_seed: u64, num_topics: usize) -> u64 {
    let mut z = base_seed.wrapping_add((num_topics as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRun {
    pub num_topics: usize,
    pub seed: u64,
    pub model_ref: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageGrid {
    pub ks: Vec<usize>,
    pub threshold: usize,
    pub runs: Vec<GridRun>,
    /// Every ordered pair of distinct K, row-major over `ks`.
    pub reports: Vec<CoverageReport>,
}

impl CoverageGrid {
    pub fn report(&self, from_k: usize, to_k: usize) -> Option<&CoverageReport> {
        self.reports
            .iter()
            .find(|r| r.from_k == from_k && r.to_k == to_k)
    }

    /// Rows are the covered K, columns the covering K; the diagonal is 100.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["from_k\\to_k".to_string()];
        header.extend(self.ks.iter().map(|k| k.to_string()));
        writer.write_record(&header).expect("write to memory");
        for &from in &self.ks {
            let mut row = vec![from.to_string()];
            for &to in &self.ks {
                let cell = if from == to {
                    100.0
                } else {
                    self.report(from, to).map_or(f64::NAN, |r| r.coverage_percent)
                };
                row.push(cell.to_string());
            }
            writer.write_record(&row).expect("write to memory");
        }
        String::from_utf8(writer.into_inner().expect("flush to memory")).expect("utf-8 csv")
    }
}

/// Builds all directional reports between already-fitted topic sets.
pub fn grid_from_sets(
    sets: &[TopicSet],
    runs: Vec<GridRun>,
    threshold: usize,
) -> Result<CoverageGrid, TopicSimError> {
    let ks: Vec<usize> = sets.iter().map(TopicSet::len).collect();
    let distinct: BTreeSet<usize> = ks.iter().copied().collect();
    if distinct.len() < 2 || distinct.len() != ks.len() {
        return Err(TopicSimError::TooFewK(ks));
    }
    let mut reports = Vec::new();
    for a in sets {
        for b in sets {
            if a.len() != b.len() {
                reports.push(coverage(a, b, threshold)?);
            }
        }
    }
    Ok(CoverageGrid {
        ks,
        threshold,
        runs,
        reports,
    })
}

/// Fits one model per K (in parallel) and compares every ordered pair.
///
/// Each run uses `params` with `num_topics = K` and the seed from
/// [`derive_seed`]`(params.seed, K)`. Topic signatures are the
/// `params.top_n_words` top words.
pub fn compare_grid_with_models(
    corpus: &EncodedCorpus,
    k_list: &[usize],
    params: &LdaParams,
    threshold: usize,
) -> Result<(CoverageGrid, Vec<TopicModel>), TopicSimError> {
    let distinct: BTreeSet<usize> = k_list.iter().copied().collect();
    if distinct.len() < 2 {
        return Err(TopicSimError::TooFewK(k_list.to_vec()));
    }
    if threshold < 1 {
        return Err(TopicSimError::InvalidThreshold);
    }
    let ks: Vec<usize> = distinct.into_iter().collect();
    let models: Vec<TopicModel> = ks
        .par_iter()
        .map(|&k| {
            let run_params = LdaParams {
                num_topics: k,
                seed: derive_seed(params.seed, k),
                ..params.clone()
            };
            run_lda(corpus, &run_params)
        })
        .collect::<Result<_, _>>()?;

    let sets: Vec<TopicSet> = models
        .iter()
        .map(|m| TopicSet::from_model(m, params.top_n_words))
        .collect();
    let runs = models
        .iter()
        .map(|m| GridRun {
            num_topics: m.num_topics,
            seed: m.params.seed,
            model_ref: m.id.clone(),
        })
        .collect();
    let grid = grid_from_sets(&sets, runs, threshold)?;
    Ok((grid, models))
}

pub fn compare_grid(
    corpus: &EncodedCorpus,
    k_list: &[usize],
    params: &LdaParams,
    threshold: usize,
) -> Result<CoverageGrid, TopicSimError> {
    compare_grid_with_models(corpus, k_list, params, threshold).map(|(grid, _)| grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KScore {
    pub num_topics: usize,
    pub mean_coverage: f64,
    /// `(other K, coverage of this K's topics by that K)`.
    pub coverages: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub selected_k: usize,
    pub rule: String,
    pub scores: Vec<KScore>,
}

const SELECTION_RULE: &str = "select the K whose topics are, on average, best covered by the \
     topic sets of every other K in the grid; ties go to the smaller K";

/// Picks the number of topics whose topic set is most stable across the grid.
pub fn select_k(grid: &CoverageGrid) -> Result<KSelection, TopicSimError> {
    let ks: BTreeSet<usize> = grid.ks.iter().copied().collect();
    if ks.len() < 2 {
        return Err(TopicSimError::TooFewK(grid.ks.clone()));
    }
    let mut scores = Vec::new();
    for &k in &ks {
        let mut coverages = Vec::new();
        for &other in ks.iter().filter(|&&o| o != k) {
            let report = grid
                .report(k, other)
                .ok_or(TopicSimError::IncompleteGrid { from_k: k, to_k: other })?;
            coverages.push((other, report.coverage_percent));
        }
        let mean_coverage =
            coverages.iter().map(|(_, c)| c).sum::<f64>() / coverages.len() as f64;
        scores.push(KScore {
            num_topics: k,
            mean_coverage,
            coverages,
        });
    }
    // scores are in ascending K, so keeping the first maximum prefers smaller K
    let best = scores
        .iter()
        .fold(None::<&KScore>, |best, s| match best {
            Some(b) if b.mean_coverage >= s.mean_coverage => Some(b),
            _ => Some(s),
        })
        .expect("at least two scores");
    Ok(KSelection {
        selected_k: best.num_topics,
        rule: SELECTION_RULE.into(),
        scores,
    })
}

/// A finished grid comparison with its K choice, as stored and served.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub id: String,
    pub corpus_ref: String,
    pub grid: CoverageGrid,
    pub selection: KSelection,
}

impl Comparison {
    pub fn new(corpus_ref: &str, grid: CoverageGrid) -> Result<Self, TopicSimError> {
        let selection = select_k(&grid)?;
        Ok(Comparison {
            id: content_id(&(corpus_ref, &grid)),
            corpus_ref: corpus_ref.to_string(),
            grid,
            selection,
        })
    }
}
