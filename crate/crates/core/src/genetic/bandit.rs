use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::OperatorId;
use crate::codebase::weighted_index;

const ARMS: usize = OperatorId::COUNT;

/// Epsilon-greedy operator selection.
///
/// `theta_i = epsilon / 7 + (1 - epsilon) * [i is the greedy arm]`. The greedy
/// arm is the one with the highest mean child reward. Until every operator has
/// been tried once, sampling returns the first untried one instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditState {
    epsilon: f64,
    counts: [u64; ARMS],
    values: [f64; ARMS],
    theta: [f64; ARMS],
    /// Whether untried operators are drawn before sampling from `theta`.
    warm_up: bool,
}

impl BanditState {
    pub fn new(epsilon: f64) -> Self {
        let mut state = BanditState {
            epsilon,
            counts: [0; ARMS],
            values: [0.0; ARMS],
            theta: [0.0; ARMS],
            warm_up: true,
        };
        state.recompute_theta();
        state
    }

    /// Start from an explicit operator distribution, sampled from directly
    /// without the warm-up. The next update replaces it.
    pub fn with_theta(epsilon: f64, theta: [f64; ARMS]) -> Self {
        BanditState {
            theta,
            warm_up: false,
            ..BanditState::new(epsilon)
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn theta(&self) -> &[f64; ARMS] {
        &self.theta
    }

    /// Mean reward per operator; `None` for operators never used.
    pub fn value(&self, op: OperatorId) -> Option<f64> {
        let i = op.index();
        (self.counts[i] > 0).then_some(self.values[i])
    }

    pub fn count(&self, op: OperatorId) -> u64 {
        self.counts[op.index()]
    }

    pub fn greedy(&self) -> OperatorId {
        if let Some(i) = self.counts.iter().position(|&n| n == 0) {
            return OperatorId::ALL[i];
        }
        let mut best = 0;
        for i in 1..ARMS {
            if self.values[i] > self.values[best] {
                best = i;
            }
        }
        OperatorId::ALL[best]
    }

    pub fn sample_operator(&self, rng: &mut dyn RngCore) -> OperatorId {
        if self.warm_up {
            if let Some(i) = self.counts.iter().position(|&n| n == 0) {
                return OperatorId::ALL[i];
            }
        }
        OperatorId::ALL[weighted_index(&self.theta, rng)]
    }

    pub fn update(&mut self, op: OperatorId, reward: f64) {
        let i = op.index();
        self.counts[i] += 1;
        self.values[i] += (reward - self.values[i]) / self.counts[i] as f64;
        self.recompute_theta();
    }

    fn recompute_theta(&mut self) {
        let greedy = self.greedy().index();
        for (i, t) in self.theta.iter_mut().enumerate() {
            *t = self.epsilon / ARMS as f64;
            if i == greedy {
                *t += 1.0 - self.epsilon;
            }
        }
    }
}
