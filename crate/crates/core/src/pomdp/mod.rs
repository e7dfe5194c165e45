//! Episodic environments and the program evaluation loop.

mod cartpole;
mod mountain_car;
mod taxi;

pub use cartpole::CartPole;
pub use mountain_car::MountainCarContinuous;
pub use taxi::Taxi;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{AgentMemory, CompiledProgram, LangError, LanguageConfig, Program};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("step called on a finished episode; reset first")]
    StepAfterTerminal,
    #[error("unknown environment {0:?} (expected cartpole, mountaincar or taxi)")]
    UnknownEnvironment(String),
    #[error("action {0:?} does not fit this environment")]
    InvalidAction(Action),
}

/// How one observation dimension maps onto a tape cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObsDim {
    /// Real value clamped to `[lo, hi]` and binned.
    Bounded { lo: f64, hi: f64 },
    /// Small integer passed through as-is, clamped to `0..n`.
    Categorical { n: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Discrete { n: usize },
    Continuous { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Action {
    Discrete(usize),
    Continuous(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub name: String,
    pub observations: Vec<ObsDim>,
    /// Bins per bounded observation dimension, at most 256.
    pub obs_bins: u16,
    pub action: ActionKind,
    pub max_episode_steps: usize,
    /// Smallest and largest attainable episode return.
    pub reward_range: (f64, f64),
}

impl EnvSpec {
    pub fn obs_cell_count(&self) -> usize {
        self.observations.len()
    }

    pub fn with_obs_bins(mut self, bins: u16) -> Self {
        self.obs_bins = bins.clamp(1, 256);
        self
    }

    pub fn language_config(&self, base: LanguageConfig) -> LanguageConfig {
        base.with_obs_cells(self.obs_cell_count())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub terminal: bool,
}

/// An episodic partially observable process, sampled through reset/step.
pub trait Environment {
    fn spec(&self) -> &EnvSpec;

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64>;

    fn step(&mut self, action: Action) -> Result<Transition, EnvError>;
}

/// Build an environment from its short name.
pub fn make_env(name: &str) -> Result<Box<dyn Environment + Send>, EnvError> {
    match name {
        "cartpole" => Ok(Box::new(CartPole::new())),
        "mountaincar" => Ok(Box::new(MountainCarContinuous::new())),
        "taxi" => Ok(Box::new(Taxi::new())),
        other => Err(EnvError::UnknownEnvironment(other.to_string())),
    }
}

/// [`make_env`] with `bins` levels per bounded observation dimension.
/// Categorical observations are unaffected.
pub fn make_env_with_bins(name: &str, bins: u16) -> Result<Box<dyn Environment + Send>, EnvError> {
    match name {
        "cartpole" => Ok(Box::new(CartPole::new().with_obs_bins(bins))),
        "mountaincar" => Ok(Box::new(MountainCarContinuous::new().with_obs_bins(bins))),
        _ => make_env(name),
    }
}

pub fn discretize_observation(obs: &[f64], spec: &EnvSpec) -> Vec<u8> {
    obs.iter()
        .zip(&spec.observations)
        .map(|(&x, dim)| discretize_value(x, dim, spec.obs_bins))
        .collect()
}

fn discretize_value(x: f64, dim: &ObsDim, bins: u16) -> u8 {
    match *dim {
        ObsDim::Bounded { lo, hi } => {
            let bins = f64::from(bins);
            let x = if x.is_nan() { lo } else { x.clamp(lo, hi) };
            let cell = ((x - lo) / (hi - lo) * bins).floor();
            cell.clamp(0.0, bins - 1.0) as u8
        }
        ObsDim::Categorical { n } => {
            let top = f64::from(n.saturating_sub(1));
            let x = if x.is_nan() { 0.0 } else { x };
            x.round().clamp(0.0, top) as u8
        }
    }
}

pub fn decode_action(cell: u8, spec: &EnvSpec) -> Action {
    match spec.action {
        ActionKind::Discrete { n } => Action::Discrete(usize::from(cell) % n),
        ActionKind::Continuous { lo, hi } => {
            Action::Continuous(lo + f64::from(cell) / 255.0 * (hi - lo))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub total_reward: f64,
    pub steps: usize,
    /// The program ran out of its per-pass operation budget.
    pub aborted: bool,
}

/// Run one episode of `program` in `env` and return its total reward.
///
/// A program that exhausts its operation budget ends the episode early and
/// keeps the reward collected so far.
pub fn eval_program(
    program: &Program,
    env: &mut dyn Environment,
    lang_cfg: &LanguageConfig,
    rng: &mut dyn RngCore,
) -> EpisodeResult {
    eval_compiled(&CompiledProgram::new(program), env, lang_cfg, rng)
}

pub fn eval_compiled(
    program: &CompiledProgram,
    env: &mut dyn Environment,
    lang_cfg: &LanguageConfig,
    rng: &mut dyn RngCore,
) -> EpisodeResult {
    let spec = env.spec().clone();
    let cfg = spec.language_config(*lang_cfg);
    let mut memory = AgentMemory::new(cfg.tape_len);
    let mut obs = env.reset(rng);
    let mut result = EpisodeResult {
        total_reward: 0.0,
        steps: 0,
        aborted: false,
    };
    while result.steps < spec.max_episode_steps {
        let cells = discretize_observation(&obs, &spec);
        let cell = match program.step(&mut memory, &cells, &cfg) {
            Ok(cell) => cell,
            Err(LangError::BudgetExhausted { .. }) => {
                result.aborted = true;
                break;
            }
            Err(e) => panic!("observation layout mismatch: {e}"),
        };
        let transition = env
            .step(decode_action(cell, &spec))
            .expect("environment is live until it reports terminal");
        result.total_reward += transition.reward;
        result.steps += 1;
        obs = transition.observation;
        if transition.terminal {
            break;
        }
    }
    result
}
