//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling.
//!
//! Runs are fully determined by the encoded corpus and [`LdaParams`]
//! (including the seed): initialization and every sweep visit tokens in
//! document-major, position-minor order and draw from a single
//! `Xoshiro256PlusPlus` generator seeded via SplitMix64 from `params.seed`.

mod model;
mod sampler;

use serde::{Deserialize, Serialize};

pub use model::TopicModel;
pub use sampler::SamplerState;

use crate::corpus::EncodedCorpus;

pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_BETA: f64 = 0.02;
pub const DEFAULT_TOP_N_WORDS: usize = 10;
pub const DEFAULT_SWEEPS: usize = 1000;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LdaError {
    #[error("invalid LDA parameters: {0}")]
    InvalidParams(String),
    #[error("corpus has no tokens")]
    EmptyCorpus,
    #[error("no token at document {doc}, position {position}")]
    PositionOutOfRange { doc: usize, position: usize },
    #[error("topic {topic} out of range for a model with {num_topics} topics")]
    TopicOutOfRange { topic: usize, num_topics: usize },
    #[error("invalid topic model: {0}")]
    InvalidModel(String),
}

/// Average the estimates over retained sweeps instead of taking the final
/// state only. Sweeps `burn_in + thin, burn_in + 2*thin, ...` are retained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleAveraging {
    pub burn_in: usize,
    pub thin: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub num_topics: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_top_n_words")]
    pub top_n_words: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub averaging: Option<SampleAveraging>,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_beta() -> f64 {
    DEFAULT_BETA
}
fn default_sweeps() -> usize {
    DEFAULT_SWEEPS
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_top_n_words() -> usize {
    DEFAULT_TOP_N_WORDS
}

impl LdaParams {
    /// Defaults for everything except the number of topics.
    pub fn new(num_topics: usize) -> Self {
        LdaParams {
            num_topics,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            sweeps: DEFAULT_SWEEPS,
            seed: DEFAULT_SEED,
            top_n_words: DEFAULT_TOP_N_WORDS,
            averaging: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_sweeps(mut self, sweeps: usize) -> Self {
        self.sweeps = sweeps;
        self
    }

    pub fn with_priors(mut self, alpha: f64, beta: f64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self
    }

    pub fn validate(&self) -> Result<(), LdaError> {
        let bad = |msg: &str| Err(LdaError::InvalidParams(msg.into()));
        if self.num_topics < 1 {
            return bad("num_topics must be at least 1");
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return bad("alpha must be positive");
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return bad("beta must be positive");
        }
        if self.sweeps < 1 {
            return bad("sweeps must be at least 1");
        }
        if let Some(avg) = self.averaging {
            if avg.thin < 1 {
                return bad("averaging.thin must be at least 1");
            }
            if avg.burn_in + avg.thin > self.sweeps {
                return bad("averaging retains no sweeps; burn_in + thin exceeds sweeps");
            }
        }
        Ok(())
    }
}

pub fn init_state(corpus: &EncodedCorpus, params: &LdaParams) -> Result<SamplerState, LdaError> {
    SamplerState::init(corpus, params)
}

pub fn gibbs_conditional(
    state: &SamplerState,
    params: &LdaParams,
    doc: usize,
    position: usize,
) -> Result<Vec<f64>, LdaError> {
    state.conditional(params, doc, position)
}

pub fn gibbs_sweep(state: &mut SamplerState, params: &LdaParams) {
    state.sweep(params)
}

pub fn log_likelihood(state: &SamplerState, params: &LdaParams) -> f64 {
    state.log_likelihood(params)
}

/// Runs the sampler and returns the model together with the final state.
pub fn fit(
    corpus: &EncodedCorpus,
    params: &LdaParams,
) -> Result<(TopicModel, SamplerState), LdaError> {
    let mut state = SamplerState::init(corpus, params)?;
    let mut trace = Vec::with_capacity(params.sweeps);

    let mut phi_sum: Option<Vec<f64>> = None;
    let mut theta_sum: Option<Vec<f64>> = None;
    let mut retained = 0usize;

    for sweep in 1..=params.sweeps {
        state.sweep(params);
        trace.push(state.log_likelihood(params));
        log::trace!("sweep {sweep}: log-likelihood {}", trace[trace.len() - 1]);

        if let Some(avg) = params.averaging {
            if sweep > avg.burn_in && (sweep - avg.burn_in) % avg.thin == 0 {
                accumulate(&mut phi_sum, state.phi(params.beta));
                accumulate(&mut theta_sum, state.theta(params.alpha));
                retained += 1;
            }
        }
    }

    let (phi, theta) = match (phi_sum, theta_sum) {
        (Some(mut phi), Some(mut theta)) => {
            let n = retained as f64;
            phi.iter_mut().for_each(|x| *x /= n);
            theta.iter_mut().for_each(|x| *x /= n);
            (phi, theta)
        }
        _ => (state.phi(params.beta), state.theta(params.alpha)),
    };

    let model = TopicModel::assemble(corpus, params.clone(), phi, theta, trace);
    Ok((model, state))
}

fn accumulate(sum: &mut Option<Vec<f64>>, sample: Vec<f64>) {
    match sum {
        Some(acc) => acc.iter_mut().zip(sample).for_each(|(a, s)| *a += s),
        None => *sum = Some(sample),
    }
}

pub fn run_lda(corpus: &EncodedCorpus, params: &LdaParams) -> Result<TopicModel, LdaError> {
    fit(corpus, params).map(|(model, _)| model)
}

pub fn top_words(model: &TopicModel, topic: usize, n: usize) -> Result<Vec<String>, LdaError> {
    model.top_words(topic, n)
}

pub fn top_documents(
    model: &TopicModel,
    topic: usize,
    n: usize,
) -> Result<Vec<(String, f64)>, LdaError> {
    model.top_documents(topic, n)
}
