//! The genetic developer.
//!
//! A proposal draws two parents by quality from the codebase, picks one of the
//! seven operators from a learned distribution `theta`, and applies it. The
//! operator distribution is an epsilon-greedy bandit over the mean reward of
//! the children each operator produced.

mod bandit;
mod operators;

pub use bandit::BanditState;
pub use operators::{
    messy_crossover, one_point_crossover, shuffle_mutation, two_point_crossover,
    uniform_crossover, uniform_mutation,
};

use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codebase::{Codebase, CodebaseError};
use crate::lang::{prune, Program};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeneticError {
    #[error("parent program is empty")]
    EmptyParent,
    #[error("parent of length {len} is shorter than the required {min}")]
    ParentTooShort { len: usize, min: usize },
    #[error("codebase is empty")]
    EmptyCodebase,
    #[error("invalid genetic config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorId {
    Shuffle,
    UniformMutation,
    OnePointCx,
    TwoPointCx,
    UniformCx,
    MessyCx,
    Prune,
}

impl OperatorId {
    pub const ALL: [OperatorId; 7] = [
        OperatorId::Shuffle,
        OperatorId::UniformMutation,
        OperatorId::OnePointCx,
        OperatorId::TwoPointCx,
        OperatorId::UniformCx,
        OperatorId::MessyCx,
        OperatorId::Prune,
    ];

    pub const COUNT: usize = 7;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            OperatorId::Shuffle => "shuffle",
            OperatorId::UniformMutation => "uniform_mutation",
            OperatorId::OnePointCx => "one_point_cx",
            OperatorId::TwoPointCx => "two_point_cx",
            OperatorId::UniformCx => "uniform_cx",
            OperatorId::MessyCx => "messy_cx",
            OperatorId::Prune => "prune",
        }
    }

    /// Whether the child depends on the second parent.
    pub fn is_combination(self) -> bool {
        matches!(
            self,
            OperatorId::OnePointCx | OperatorId::TwoPointCx | OperatorId::UniformCx | OperatorId::MessyCx
        )
    }
}

impl fmt::Display for OperatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneticConfig {
    /// Per-token replacement rate for uniform mutation and uniform crossover.
    pub p_ind: f64,
    /// Exploration rate of the operator bandit.
    pub epsilon: f64,
}

impl GeneticConfig {
    pub fn new(p_ind: f64, epsilon: f64) -> Result<Self, GeneticError> {
        let cfg = GeneticConfig { p_ind, epsilon };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), GeneticError> {
        for (name, v) in [("p_ind", self.p_ind), ("epsilon", self.epsilon)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(GeneticError::InvalidConfig(format!("{name} = {v} is not a probability")));
            }
        }
        Ok(())
    }
}

/// Apply operator `op` to the parent pair.
pub fn apply_operator(
    op: OperatorId,
    c1: &Program,
    c2: &Program,
    cfg: &GeneticConfig,
    rng: &mut dyn RngCore,
) -> Result<Program, GeneticError> {
    match op {
        OperatorId::Shuffle => shuffle_mutation(c1, rng),
        OperatorId::UniformMutation => uniform_mutation(c1, cfg.p_ind, rng),
        OperatorId::OnePointCx => one_point_crossover(c1, c2, rng),
        OperatorId::TwoPointCx => two_point_crossover(c1, c2, rng),
        OperatorId::UniformCx => uniform_crossover(c1, c2, cfg.p_ind, rng),
        OperatorId::MessyCx => messy_crossover(c1, c2, rng),
        OperatorId::Prune => Ok(prune(c1)),
    }
}

/// Draw two parents by quality, one operator from `theta`, and build the child.
///
/// Parents too short for the drawn operator are passed through unchanged:
/// the child is a copy of the first parent, still credited to that operator.
pub fn propose(
    cb: &Codebase,
    bandit: &BanditState,
    cfg: &GeneticConfig,
    rng: &mut dyn RngCore,
) -> Result<(Program, OperatorId), GeneticError> {
    let c1 = cb.sample_quality_weighted(rng).map_err(map_cb)?.clone();
    let c2 = cb.sample_quality_weighted(rng).map_err(map_cb)?.clone();
    let op = bandit.sample_operator(rng);
    let child = match apply_operator(op, &c1, &c2, cfg, rng) {
        Ok(child) => child,
        Err(GeneticError::EmptyParent | GeneticError::ParentTooShort { .. }) => c1,
        Err(e) => return Err(e),
    };
    Ok((child, op))
}

fn map_cb(e: CodebaseError) -> GeneticError {
    match e {
        CodebaseError::EmptyCodebase => GeneticError::EmptyCodebase,
        other => unreachable!("sampling only fails on an empty codebase: {other}"),
    }
}

/// A genetic developer: its hyperparameters and its operator bandit.
#[derive(Debug, Clone)]
pub struct GeneticDeveloper {
    pub config: GeneticConfig,
    pub bandit: BanditState,
}

impl GeneticDeveloper {
    pub fn new(config: GeneticConfig) -> Self {
        GeneticDeveloper {
            bandit: BanditState::new(config.epsilon),
            config,
        }
    }

    pub fn propose(
        &self,
        cb: &Codebase,
        rng: &mut dyn RngCore,
    ) -> Result<(Program, OperatorId), GeneticError> {
        propose(cb, &self.bandit, &self.config, rng)
    }

    pub fn update(&mut self, op: OperatorId, reward: f64) {
        self.bandit.update(op, reward);
    }
}
