use rand::{Rng, RngCore};

use super::{Action, ActionKind, EnvError, EnvSpec, Environment, ObsDim, Transition};

/// The 5x5 grid; `|` marks a wall between two columns.
const MAP: [&[u8; 11]; 5] = [
    b"|R: | : :G|",
    b"| : | : : |",
    b"| : : : : |",
    b"| | : | : |",
    b"|Y| : |B: |",
];
const LANDMARKS: [(usize, usize); 4] = [(0, 0), (0, 4), (4, 0), (4, 3)];
/// Passenger location value meaning "riding in the taxi".
pub const IN_TAXI: usize = 4;
const MAX_STEPS: usize = 200;

pub const SOUTH: usize = 0;
pub const NORTH: usize = 1;
pub const EAST: usize = 2;
pub const WEST: usize = 3;
pub const PICKUP: usize = 4;
pub const DROPOFF: usize = 5;

/// Grid taxi: fetch the passenger from one landmark and drop them at another.
///
/// Observations are four small integers: taxi row, taxi column, passenger
/// location (landmark 0..3 or 4 for in-taxi) and destination landmark.
/// Actions follow the usual order: south, north, east, west, pickup, dropoff.
#[derive(Debug, Clone)]
pub struct Taxi {
    spec: EnvSpec,
    row: usize,
    col: usize,
    passenger: usize,
    destination: usize,
    steps: usize,
    done: bool,
}

impl Default for Taxi {
    fn default() -> Self {
        Self::new()
    }
}

impl Taxi {
    pub fn new() -> Self {
        Taxi {
            spec: EnvSpec {
                name: "taxi".into(),
                observations: vec![
                    ObsDim::Categorical { n: 5 },
                    ObsDim::Categorical { n: 5 },
                    ObsDim::Categorical { n: 5 },
                    ObsDim::Categorical { n: 4 },
                ],
                obs_bins: 256,
                action: ActionKind::Discrete { n: 6 },
                max_episode_steps: MAX_STEPS,
                reward_range: (-10.0 * MAX_STEPS as f64, 20.0),
            },
            row: 0,
            col: 0,
            passenger: 0,
            destination: 1,
            steps: 0,
            done: true,
        }
    }

    pub fn set_state(&mut self, row: usize, col: usize, passenger: usize, destination: usize) {
        assert!(row < 5 && col < 5 && passenger <= IN_TAXI && destination < 4);
        self.row = row;
        self.col = col;
        self.passenger = passenger;
        self.destination = destination;
        self.steps = 0;
        self.done = false;
    }

    /// `(row, col, passenger, destination)`.
    pub fn state(&self) -> (usize, usize, usize, usize) {
        (self.row, self.col, self.passenger, self.destination)
    }

    fn observation(&self) -> Vec<f64> {
        [self.row, self.col, self.passenger, self.destination]
            .iter()
            .map(|&v| v as f64)
            .collect()
    }
}

impl Environment for Taxi {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64> {
        let row = rng.random_range(0..5);
        let col = rng.random_range(0..5);
        let passenger = rng.random_range(0..4);
        // Destination uniform over the three other landmarks.
        let mut destination = rng.random_range(0..3);
        if destination >= passenger {
            destination += 1;
        }
        self.set_state(row, col, passenger, destination);
        self.observation()
    }

    fn step(&mut self, action: Action) -> Result<Transition, EnvError> {
        if self.done {
            return Err(EnvError::StepAfterTerminal);
        }
        let Action::Discrete(a) = action else {
            return Err(EnvError::InvalidAction(action));
        };
        let mut reward = -1.0;
        let mut delivered = false;
        let here = (self.row, self.col);
        match a {
            SOUTH => self.row = (self.row + 1).min(4),
            NORTH => self.row = self.row.saturating_sub(1),
            EAST if MAP[self.row][2 * self.col + 2] == b':' => self.col = (self.col + 1).min(4),
            WEST if MAP[self.row][2 * self.col] == b':' => self.col = self.col.saturating_sub(1),
            EAST | WEST => {}
            PICKUP => {
                if self.passenger < IN_TAXI && here == LANDMARKS[self.passenger] {
                    self.passenger = IN_TAXI;
                } else {
                    reward = -10.0;
                }
            }
            DROPOFF => {
                if self.passenger == IN_TAXI && here == LANDMARKS[self.destination] {
                    self.passenger = self.destination;
                    delivered = true;
                    reward = 20.0;
                } else if let (IN_TAXI, Some(spot)) =
                    (self.passenger, LANDMARKS.iter().position(|&l| l == here))
                {
                    self.passenger = spot;
                } else {
                    reward = -10.0;
                }
            }
            _ => return Err(EnvError::InvalidAction(action)),
        }
        self.steps += 1;
        self.done = delivered || self.steps >= MAX_STEPS;
        Ok(Transition {
            observation: self.observation(),
            reward,
            terminal: self.done,
        })
    }
}
