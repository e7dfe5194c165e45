use rand::{Rng, RngCore};

use super::{Action, ActionKind, EnvError, EnvSpec, Environment, ObsDim, Transition};

const MIN_POSITION: f64 = -1.2;
const MAX_POSITION: f64 = 0.6;
const MAX_SPEED: f64 = 0.07;
const GOAL_POSITION: f64 = 0.45;
const POWER: f64 = 0.0015;
const MAX_STEPS: usize = 999;

/// Under-powered car in a valley with a continuous throttle in `[-1, 1]`.
///
/// Pays `-0.1 * a^2` per step and `+100` on reaching the flag.
#[derive(Debug, Clone)]
pub struct MountainCarContinuous {
    spec: EnvSpec,
    position: f64,
    velocity: f64,
    steps: usize,
    done: bool,
}

impl Default for MountainCarContinuous {
    fn default() -> Self {
        Self::new()
    }
}

impl MountainCarContinuous {
    pub fn new() -> Self {
        MountainCarContinuous {
            spec: EnvSpec {
                name: "mountaincar".into(),
                observations: vec![
                    ObsDim::Bounded { lo: MIN_POSITION, hi: MAX_POSITION },
                    ObsDim::Bounded { lo: -MAX_SPEED, hi: MAX_SPEED },
                ],
                obs_bins: 256,
                action: ActionKind::Continuous { lo: -1.0, hi: 1.0 },
                max_episode_steps: MAX_STEPS,
                reward_range: (-0.1 * MAX_STEPS as f64, 100.0),
            },
            position: 0.0,
            velocity: 0.0,
            steps: 0,
            done: true,
        }
    }

    pub fn with_obs_bins(mut self, bins: u16) -> Self {
        self.spec = self.spec.with_obs_bins(bins);
        self
    }

    pub fn set_state(&mut self, position: f64, velocity: f64) {
        self.position = position;
        self.velocity = velocity;
        self.steps = 0;
        self.done = false;
    }

    pub fn state(&self) -> (f64, f64) {
        (self.position, self.velocity)
    }
}

impl Environment for MountainCarContinuous {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64> {
        let position = rng.random_range(-0.6..=-0.4);
        self.set_state(position, 0.0);
        vec![position, 0.0]
    }

    fn step(&mut self, action: Action) -> Result<Transition, EnvError> {
        if self.done {
            return Err(EnvError::StepAfterTerminal);
        }
        let Action::Continuous(throttle) = action else {
            return Err(EnvError::InvalidAction(action));
        };
        let force = throttle.clamp(-1.0, 1.0);
        self.velocity += force * POWER - 0.0025 * (3.0 * self.position).cos();
        self.velocity = self.velocity.clamp(-MAX_SPEED, MAX_SPEED);
        self.position = (self.position + self.velocity).clamp(MIN_POSITION, MAX_POSITION);
        if self.position == MIN_POSITION && self.velocity < 0.0 {
            self.velocity = 0.0;
        }
        self.steps += 1;

        let reached = self.position >= GOAL_POSITION && self.velocity >= 0.0;
        let mut reward = -0.1 * throttle * throttle;
        if reached {
            reward += 100.0;
        }
        self.done = reached || self.steps >= MAX_STEPS;
        Ok(Transition {
            observation: vec![self.position, self.velocity],
            reward,
            terminal: self.done,
        })
    }
}
