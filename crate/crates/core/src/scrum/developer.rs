use rand::RngCore;

use crate::codebase::{Codebase, Statistic};
use crate::genetic::{GeneticDeveloper, OperatorId};
use crate::lang::Program;
use crate::neural::{NeuralDeveloper, PolicyParameters};

/// A program put forward by a developer, with the operator that made it.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub program: Program,
    pub operator: Option<OperatorId>,
}

impl Proposal {
    pub fn new(program: Program) -> Self {
        Proposal {
            program,
            operator: None,
        }
    }
}

/// A program distribution conditioned on the codebase, plus a way to learn
/// from the reward of its own proposals.
pub trait Developer {
    fn id(&self) -> &str;

    /// `None` when the developer has nothing to work from (empty codebase).
    fn propose(&mut self, cb: &Codebase, rng: &mut dyn RngCore) -> Option<Proposal>;

    /// Called after the proposal's evaluation has been recorded in `cb`.
    fn update(&mut self, proposal: &Proposal, reward: f64, cb: &Codebase);

    /// Network weights, for developers that have them.
    fn policy(&self) -> Option<&PolicyParameters> {
        None
    }

    fn policy_mut(&mut self) -> Option<&mut PolicyParameters> {
        None
    }
}

/// Re-submits existing programs, chosen by quality, so their estimates sharpen.
#[derive(Debug, Clone)]
pub struct DummyDeveloper {
    id: String,
}

impl DummyDeveloper {
    pub fn new(id: impl Into<String>) -> Self {
        DummyDeveloper { id: id.into() }
    }
}

impl Default for DummyDeveloper {
    fn default() -> Self {
        DummyDeveloper::new("dummy")
    }
}

impl Developer for DummyDeveloper {
    fn id(&self) -> &str {
        &self.id
    }

    fn propose(&mut self, cb: &Codebase, rng: &mut dyn RngCore) -> Option<Proposal> {
        cb.sample_quality_weighted(rng).ok().cloned().map(Proposal::new)
    }

    fn update(&mut self, _proposal: &Proposal, _reward: f64, _cb: &Codebase) {}
}

#[derive(Debug, Clone)]
pub struct GeneticMember {
    id: String,
    pub inner: GeneticDeveloper,
}

impl GeneticMember {
    pub fn new(id: impl Into<String>, inner: GeneticDeveloper) -> Self {
        GeneticMember { id: id.into(), inner }
    }
}

impl Developer for GeneticMember {
    fn id(&self) -> &str {
        &self.id
    }

    fn propose(&mut self, cb: &Codebase, rng: &mut dyn RngCore) -> Option<Proposal> {
        let (program, op) = self.inner.propose(cb, rng).ok()?;
        Some(Proposal {
            program,
            operator: Some(op),
        })
    }

    fn update(&mut self, proposal: &Proposal, reward: f64, _cb: &Codebase) {
        if let Some(op) = proposal.operator {
            self.inner.update(op, reward);
        }
    }
}

#[derive(Debug, Clone)]
pub struct NeuralMember {
    id: String,
    pub inner: NeuralDeveloper,
}

impl NeuralMember {
    pub fn new(id: impl Into<String>, inner: NeuralDeveloper) -> Self {
        NeuralMember { id: id.into(), inner }
    }
}

impl Developer for NeuralMember {
    fn id(&self) -> &str {
        &self.id
    }

    fn propose(&mut self, _cb: &Codebase, rng: &mut dyn RngCore) -> Option<Proposal> {
        Some(Proposal::new(self.inner.propose(rng)))
    }

    fn update(&mut self, proposal: &Proposal, reward: f64, cb: &Codebase) {
        let topk: Vec<Program> = cb
            .top_k(self.inner.config.pqt_k, Statistic::Quality)
            .into_iter()
            .map(|(p, _)| p)
            .collect();
        self.inner.update(&proposal.program, reward, cb.shift(), &topk);
    }

    fn policy(&self) -> Option<&PolicyParameters> {
        Some(&self.inner.params)
    }

    fn policy_mut(&mut self) -> Option<&mut PolicyParameters> {
        Some(&mut self.inner.params)
    }
}
