use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingConfig {
    pub window: usize,
    pub patience: usize,
}

impl Default for StoppingConfig {
    fn default() -> Self {
        StoppingConfig {
            window: 2000,
            patience: 10000,
        }
    }
}

/// Stops a run once the reward trend has not been positive for `patience`
/// consecutive sprints.
///
/// The trend is the slope of an exponentially weighted least-squares line
/// through the last `window` rewards, with a half-life of half the window.
#[derive(Debug, Clone)]
pub struct TrendStopper {
    config: StoppingConfig,
    decay: f64,
    recent: VecDeque<f64>,
    seen: usize,
    flat_streak: usize,
}

impl TrendStopper {
    pub fn new(config: StoppingConfig) -> Self {
        let half_life = (config.window as f64 / 2.0).max(1.0);
        TrendStopper {
            config,
            decay: 0.5f64.powf(1.0 / half_life),
            recent: VecDeque::with_capacity(config.window + 1),
            seen: 0,
            flat_streak: 0,
        }
    }

    /// Record one sprint reward; returns whether the run should stop.
    ///
    /// The first `window` sprints only fill the window; patience counts the
    /// sprints after that, so a flat stream stops at sprint `window + patience`.
    pub fn push(&mut self, reward: f64) -> bool {
        self.seen += 1;
        self.recent.push_back(reward);
        if self.recent.len() > self.config.window {
            self.recent.pop_front();
        }
        if self.seen <= self.config.window {
            return false;
        }
        if self.slope() <= 0.0 {
            self.flat_streak += 1;
        } else {
            self.flat_streak = 0;
        }
        self.flat_streak >= self.config.patience
    }

    /// Weighted slope of reward against sprint index over the window.
    pub fn slope(&self) -> f64 {
        let n = self.recent.len();
        if n < 2 {
            return 0.0;
        }
        // Rewards are taken relative to the oldest one, so a constant stream
        // gives exactly zero.
        let base = self.recent[0];
        let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
        let mut w = 1.0;
        for (age, &y) in self.recent.iter().rev().enumerate() {
            let x = -(age as f64);
            sw += w;
            sx += w * x;
            sy += w * (y - base);
            w *= self.decay;
        }
        let (mx, my) = (sx / sw, sy / sw);
        let (mut sxy, mut sxx) = (0.0, 0.0);
        let mut w = 1.0;
        for (age, &y) in self.recent.iter().rev().enumerate() {
            let dx = -(age as f64) - mx;
            sxy += w * dx * ((y - base) - my);
            sxx += w * dx * dx;
            w *= self.decay;
        }
        sxy / sxx
    }
}

/// Replay `history` through a fresh [`TrendStopper`]; true if it would have
/// fired by the last sprint.
pub fn should_stop(history: &[f64], window: usize, patience: usize) -> bool {
    let mut stopper = TrendStopper::new(StoppingConfig { window, patience });
    history.iter().any(|&r| stopper.push(r))
}
