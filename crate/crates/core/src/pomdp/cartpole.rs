use rand::{Rng, RngCore};

use super::{Action, ActionKind, EnvError, EnvSpec, Environment, ObsDim, Transition};

const GRAVITY: f64 = 9.8;
const CART_MASS: f64 = 1.0;
const POLE_MASS: f64 = 0.1;
const TOTAL_MASS: f64 = CART_MASS + POLE_MASS;
/// Half the pole length.
const LENGTH: f64 = 0.5;
const POLE_MASS_LENGTH: f64 = POLE_MASS * LENGTH;
const FORCE_MAG: f64 = 10.0;
const TAU: f64 = 0.02;
const X_THRESHOLD: f64 = 2.4;
const THETA_THRESHOLD: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
const MAX_STEPS: usize = 500;

/// Pole balancing on a cart, explicit Euler integration.
///
/// State is `[x, x_dot, theta, theta_dot]`. Action 1 pushes right, 0 left.
/// Every step, including the one that ends the episode, pays +1.
#[derive(Debug, Clone)]
pub struct CartPole {
    spec: EnvSpec,
    state: [f64; 4],
    steps: usize,
    done: bool,
}

impl Default for CartPole {
    fn default() -> Self {
        Self::new()
    }
}

impl CartPole {
    pub fn new() -> Self {
        CartPole {
            spec: EnvSpec {
                name: "cartpole".into(),
                observations: vec![
                    ObsDim::Bounded { lo: -X_THRESHOLD, hi: X_THRESHOLD },
                    ObsDim::Bounded { lo: -3.0, hi: 3.0 },
                    ObsDim::Bounded { lo: -THETA_THRESHOLD, hi: THETA_THRESHOLD },
                    ObsDim::Bounded { lo: -3.5, hi: 3.5 },
                ],
                obs_bins: 256,
                action: ActionKind::Discrete { n: 2 },
                max_episode_steps: MAX_STEPS,
                reward_range: (0.0, MAX_STEPS as f64),
            },
            state: [0.0; 4],
            steps: 0,
            done: true,
        }
    }

    pub fn with_obs_bins(mut self, bins: u16) -> Self {
        self.spec = self.spec.with_obs_bins(bins);
        self
    }

    /// Start a live episode from an explicit state.
    pub fn set_state(&mut self, state: [f64; 4]) {
        self.state = state;
        self.steps = 0;
        self.done = false;
    }

    pub fn state(&self) -> [f64; 4] {
        self.state
    }
}

impl Environment for CartPole {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64> {
        let mut state = [0.0; 4];
        for v in &mut state {
            *v = rng.random_range(-0.05..=0.05);
        }
        self.set_state(state);
        state.to_vec()
    }

    fn step(&mut self, action: Action) -> Result<Transition, EnvError> {
        if self.done {
            return Err(EnvError::StepAfterTerminal);
        }
        let push_right = match action {
            Action::Discrete(0) => false,
            Action::Discrete(1) => true,
            other => return Err(EnvError::InvalidAction(other)),
        };
        let [x, x_dot, theta, theta_dot] = self.state;
        let force = if push_right { FORCE_MAG } else { -FORCE_MAG };
        let (sin, cos) = theta.sin_cos();
        let temp = (force + POLE_MASS_LENGTH * theta_dot * theta_dot * sin) / TOTAL_MASS;
        let theta_acc =
            (GRAVITY * sin - cos * temp) / (LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / TOTAL_MASS));
        let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos / TOTAL_MASS;

        self.state = [
            x + TAU * x_dot,
            x_dot + TAU * x_acc,
            theta + TAU * theta_dot,
            theta_dot + TAU * theta_acc,
        ];
        self.steps += 1;
        let [x, _, theta, _] = self.state;
        let fell = !(-X_THRESHOLD..=X_THRESHOLD).contains(&x)
            || !(-THETA_THRESHOLD..=THETA_THRESHOLD).contains(&theta);
        self.done = fell || self.steps >= MAX_STEPS;
        Ok(Transition {
            observation: self.state.to_vec(),
            reward: 1.0,
            terminal: self.done,
        })
    }
}
