//! The neural developer: an autoregressive LSTM policy over tokens.
//!
//! Programs are generated one token at a time until the end-of-program
//! symbol is drawn or the length cap is reached. Training is REINFORCE on
//! `q = exp((R - S) / tau)` with a moving-average baseline, plus a priority
//! queue term that raises the likelihood of the best programs in the codebase.

mod network;
mod optim;

pub use network::{PolicyParameters, END, N_SYMBOLS};
pub use optim::Adam;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{Program, Token};

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("invalid layer widths {0:?}")]
    InvalidShape(Vec<usize>),
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid trainer config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainerConfig {
    pub learning_rate: f64,
    pub baseline_decay: f64,
    /// Weight of the priority queue term.
    pub pqt_weight: f64,
    /// Number of top-quality programs in the priority queue.
    pub pqt_k: usize,
    pub entropy_weight: f64,
    pub max_program_length: usize,
    /// Temperature `tau` in `q = exp((R - S) / tau)`. `None` means 1% of the
    /// environment's reward range.
    pub reward_shift_scale: Option<f64>,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            learning_rate: 1e-3,
            baseline_decay: 0.9,
            pqt_weight: 1.0,
            pqt_k: 10,
            entropy_weight: 0.01,
            max_program_length: 100,
            reward_shift_scale: None,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |m: &str| Err(NeuralError::InvalidConfig(m.to_string()));
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.baseline_decay) {
            return bad("baseline_decay must be in [0, 1)");
        }
        let negative = |x: f64| x.is_nan() || x < 0.0;
        if negative(self.pqt_weight) || negative(self.entropy_weight) {
            return bad("pqt_weight and entropy_weight must be nonnegative");
        }
        if self.pqt_k == 0 || self.max_program_length == 0 {
            return bad("pqt_k and max_program_length must be positive");
        }
        if let Some(tau) = self.reward_shift_scale {
            if tau.is_nan() || tau <= 0.0 {
                return bad("reward_shift_scale must be positive");
            }
        }
        Ok(())
    }

    pub fn temperature(&self, reward_range: (f64, f64)) -> f64 {
        self.reward_shift_scale
            .unwrap_or_else(|| (0.01 * (reward_range.1 - reward_range.0)).max(f64::MIN_POSITIVE))
    }
}

/// Sample a program; returns it with its log-probability under the policy.
///
/// Generation stops at the end symbol or after `max_len` tokens, in which
/// case the end is forced and contributes no probability term.
pub fn sample_program(
    params: &PolicyParameters,
    rng: &mut dyn RngCore,
    max_len: usize,
) -> (Program, f64) {
    let mut cursor = params.start();
    let mut tokens = Vec::new();
    let mut logprob = 0.0;
    let mut prev = None;
    while tokens.len() < max_len {
        let lp = params.next_log_probs(&mut cursor, prev);
        let symbol = sample_log_probs(&lp, rng);
        logprob += lp[symbol];
        if symbol == END {
            break;
        }
        tokens.push(Token::ALL[symbol]);
        prev = Some(symbol);
    }
    (Program::new(tokens), logprob)
}

fn sample_log_probs(lp: &[f64], rng: &mut dyn RngCore) -> usize {
    let mut u: f64 = rng.random();
    for (i, &l) in lp.iter().enumerate() {
        u -= l.exp();
        if u < 0.0 {
            return i;
        }
    }
    lp.len() - 1
}

/// Symbol distribution at the first position.
pub fn first_symbol_probs(params: &PolicyParameters) -> Vec<f64> {
    let mut cursor = params.start();
    params.next_log_probs(&mut cursor, None).iter().map(|l| l.exp()).collect()
}

/// Decision targets for `program`: its tokens, then the end symbol unless the
/// length cap forced it.
fn targets(program: &Program, max_len: usize) -> Vec<usize> {
    let mut t: Vec<usize> = program.tokens().iter().map(|t| t.index()).collect();
    if program.len() < max_len {
        t.push(END);
    }
    t
}

/// Log-probability that the policy generates exactly `program`.
pub fn program_logprob(params: &PolicyParameters, program: &Program, max_len: usize) -> f64 {
    let mut cursor = params.start();
    let mut prev = None;
    targets(program, max_len)
        .into_iter()
        .map(|sym| {
            let lp = params.next_log_probs(&mut cursor, prev);
            prev = Some(sym);
            lp[sym]
        })
        .sum()
}

/// Log-likelihood and entropy summed over a sequence.
#[derive(Debug, Clone, Copy)]
struct SequenceTerms {
    logprob: f64,
    entropy: f64,
}

fn accumulate(
    params: &PolicyParameters,
    program: &Program,
    max_len: usize,
    logprob_weight: f64,
    entropy_weight: f64,
    grad: &mut [f64],
) -> SequenceTerms {
    let targets = targets(program, max_len);
    let mut terms = SequenceTerms {
        logprob: 0.0,
        entropy: 0.0,
    };
    params.backprop(&targets, grad, |t, lp| {
        let y = targets[t];
        terms.logprob += lp[y];
        let p: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
        let h: f64 = -p.iter().zip(lp).map(|(pi, li)| pi * li).sum::<f64>();
        terms.entropy += h;
        (0..N_SYMBOLS)
            .map(|j| {
                let dlog = f64::from(u8::from(j == y)) - p[j];
                let dent = -p[j] * (lp[j] + h);
                logprob_weight * dlog + entropy_weight * dent
            })
            .collect()
    });
    terms
}

/// `log p(program)` and its gradient with respect to every parameter.
pub fn logprob_gradient(
    params: &PolicyParameters,
    program: &Program,
    max_len: usize,
) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; params.len()];
    let terms = accumulate(params, program, max_len, 1.0, 0.0, &mut grad);
    (terms.logprob, grad)
}

/// Baseline and optimizer state carried between updates.
#[derive(Debug, Clone)]
pub struct TrainerState {
    pub baseline: f64,
    pub optimizer: Adam,
}

impl TrainerState {
    pub fn new(params: &PolicyParameters, cfg: &TrainerConfig) -> Self {
        TrainerState {
            baseline: 0.0,
            optimizer: Adam::new(params.len(), cfg.learning_rate),
        }
    }
}

/// Diagnostics from one update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub q: f64,
    pub advantage: f64,
    pub logprob: f64,
    pub entropy: f64,
}

/// One gradient ascent step on
/// `(q - b) log p(c) + (pqt_weight / K) sum_{c' in topk} log p(c') + entropy_weight H`,
/// with `q = exp((reward - shift) / tau)`. The baseline `b` then moves toward `q`.
#[allow(clippy::too_many_arguments)]
pub fn reinforce_pqt_update(
    params: &mut PolicyParameters,
    program: &Program,
    reward: f64,
    shift: f64,
    tau: f64,
    topk: &[Program],
    cfg: &TrainerConfig,
    state: &mut TrainerState,
) -> UpdateStats {
    let q = ((reward - shift) / tau).exp();
    let advantage = q - state.baseline;
    let max_len = cfg.max_program_length;
    let mut grad = vec![0.0; params.len()];
    let terms = accumulate(params, program, max_len, advantage, cfg.entropy_weight, &mut grad);
    if cfg.pqt_weight > 0.0 && !topk.is_empty() {
        let w = cfg.pqt_weight / topk.len() as f64;
        for c in topk.iter().filter(|c| c.len() <= max_len) {
            accumulate(params, c, max_len, w, 0.0, &mut grad);
        }
    }
    state.optimizer.ascend(params.as_mut_slice(), &grad);
    state.baseline = cfg.baseline_decay * state.baseline + (1.0 - cfg.baseline_decay) * q;
    UpdateStats {
        q,
        advantage,
        logprob: terms.logprob,
        entropy: terms.entropy,
    }
}

/// A neural developer: its parameters, trainer settings and state.
#[derive(Debug, Clone)]
pub struct NeuralDeveloper {
    pub params: PolicyParameters,
    pub config: TrainerConfig,
    pub state: TrainerState,
    tau: f64,
}

impl NeuralDeveloper {
    pub fn new(
        widths: &[usize],
        config: TrainerConfig,
        reward_range: (f64, f64),
        rng: &mut dyn RngCore,
    ) -> Result<Self, NeuralError> {
        config.validate()?;
        let params = PolicyParameters::new(widths, rng)?;
        let state = TrainerState::new(&params, &config);
        Ok(NeuralDeveloper {
            tau: config.temperature(reward_range),
            params,
            config,
            state,
        })
    }

    pub fn temperature(&self) -> f64 {
        self.tau
    }

    pub fn propose(&self, rng: &mut dyn RngCore) -> Program {
        sample_program(&self.params, rng, self.config.max_program_length).0
    }

    pub fn update(&mut self, program: &Program, reward: f64, shift: f64, topk: &[Program]) -> UpdateStats {
        reinforce_pqt_update(
            &mut self.params,
            program,
            reward,
            shift,
            self.tau,
            topk,
            &self.config,
            &mut self.state,
        )
    }
}
