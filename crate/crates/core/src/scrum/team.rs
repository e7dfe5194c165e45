use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::developer::{Developer, DummyDeveloper, GeneticMember, NeuralMember};
use super::ScrumError;
use crate::genetic::{GeneticConfig, GeneticDeveloper};
use crate::neural::{NeuralDeveloper, TrainerConfig};
use crate::pomdp::EnvSpec;

#[derive(Debug, Clone, PartialEq)]
pub enum DeveloperKind {
    /// Stacked LSTM layer widths.
    Lstm(Vec<usize>),
    Genetic(GeneticConfig),
    Dummy,
}

/// A developer in team notation: `lstm(50,50)`, `gen(1/3,0.2)` or `dummy`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeveloperSpec {
    text: String,
    pub kind: DeveloperKind,
}

impl DeveloperSpec {
    pub fn as_str(&self) -> &str {
        &self.text
    }
}

impl fmt::Display for DeveloperSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl FromStr for DeveloperSpec {
    type Err = ScrumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let text: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = |why: &str| ScrumError::InvalidConfig(format!("developer spec {s:?}: {why}"));
        if text == "dummy" {
            return Ok(DeveloperSpec { text, kind: DeveloperKind::Dummy });
        }
        let (head, args) = text
            .strip_suffix(')')
            .and_then(|t| t.split_once('('))
            .ok_or_else(|| bad("expected name(args)"))?;
        let args: Vec<&str> = args.split(',').collect();
        let kind = match head {
            "lstm" => {
                let widths = args
                    .iter()
                    .map(|a| a.parse::<usize>().ok().filter(|&w| w > 0))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| bad("widths must be positive integers"))?;
                DeveloperKind::Lstm(widths)
            }
            "gen" => {
                let [p, e] = args[..] else {
                    return Err(bad("gen takes (p_ind, epsilon)"));
                };
                let p = parse_ratio(p).ok_or_else(|| bad("bad p_ind"))?;
                let e = parse_ratio(e).ok_or_else(|| bad("bad epsilon"))?;
                DeveloperKind::Genetic(GeneticConfig::new(p, e).map_err(|err| bad(&err.to_string()))?)
            }
            _ => return Err(bad("unknown developer kind")),
        };
        Ok(DeveloperSpec { text, kind })
    }
}

/// A decimal or a fraction like `1/3`.
fn parse_ratio(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((n, d)) => {
            let d: f64 = d.parse().ok()?;
            (d != 0.0).then_some(n.parse::<f64>().ok()? / d)
        }
        None => s.parse().ok(),
    }
}

impl Serialize for DeveloperSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for DeveloperSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

fn specs(list: &[&str]) -> Vec<DeveloperSpec> {
    list.iter().map(|s| s.parse().expect("built-in team spec")).collect()
}

pub fn t_small() -> Vec<DeveloperSpec> {
    specs(&["lstm(50,50)", "gen(0.2,0.2)", "dummy"])
}

pub fn t_large() -> Vec<DeveloperSpec> {
    specs(&[
        "lstm(10)",
        "lstm(50)",
        "lstm(256)",
        "lstm(10,10)",
        "lstm(50,50)",
        "lstm(256,256)",
        "gen(1/3,0.2)",
        "gen(1/6,0.2)",
        "gen(1/12,0.2)",
        "dummy",
    ])
}

pub fn t_neural() -> Vec<DeveloperSpec> {
    specs(&["lstm(50,50)", "dummy"])
}

/// One genetic developer plus the dummy.
pub fn t_genetic() -> Vec<DeveloperSpec> {
    specs(&["gen(0.2,0.2)", "dummy"])
}

/// Look up a named team: `small`, `large`, `neural` or `genetic`.
pub fn named_team(name: &str) -> Option<Vec<DeveloperSpec>> {
    match name {
        "small" => Some(t_small()),
        "large" => Some(t_large()),
        "neural" => Some(t_neural()),
        "genetic" => Some(t_genetic()),
        _ => None,
    }
}

/// An ordered list of developers; the order is the round-robin order.
pub struct Team {
    members: Vec<Box<dyn Developer>>,
}

impl Team {
    pub fn new(members: Vec<Box<dyn Developer>>) -> Result<Self, ScrumError> {
        if members.is_empty() {
            return Err(ScrumError::InvalidConfig("team is empty".into()));
        }
        Ok(Team { members })
    }

    /// Instantiate developers from specs. Neural weights are drawn from `rng`.
    /// Repeated specs get `#2`, `#3`, ... appended to their ids.
    pub fn from_specs(
        specs: &[DeveloperSpec],
        env: &EnvSpec,
        trainer: &TrainerConfig,
        rng: &mut dyn RngCore,
    ) -> Result<Self, ScrumError> {
        let mut members: Vec<Box<dyn Developer>> = Vec::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            let seen = specs[..i].iter().filter(|s| s.text == spec.text).count();
            let id = match seen {
                0 => spec.text.clone(),
                n => format!("{}#{}", spec.text, n + 1),
            };
            members.push(match &spec.kind {
                DeveloperKind::Dummy => Box::new(DummyDeveloper::new(id)),
                DeveloperKind::Genetic(cfg) => Box::new(GeneticMember::new(id, GeneticDeveloper::new(*cfg))),
                DeveloperKind::Lstm(widths) => {
                    let dev = NeuralDeveloper::new(widths, *trainer, env.reward_range, rng)
                        .map_err(|e| ScrumError::InvalidConfig(e.to_string()))?;
                    Box::new(NeuralMember::new(id, dev))
                }
            });
        }
        Team::new(members)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.members.iter().map(|d| d.id()).collect()
    }

    pub fn members(&self) -> &[Box<dyn Developer>] {
        &self.members
    }

    pub fn members_mut(&mut self) -> &mut [Box<dyn Developer>] {
        &mut self.members
    }
}
