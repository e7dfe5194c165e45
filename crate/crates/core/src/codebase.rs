//! The shared population of evaluated programs.
//!
//! Every evaluation appends one [`ScoredEntry`]. Statistics are kept per
//! distinct program text:
//!
//! - empirical reward `R(c)`: mean of the program's reward samples;
//! - empirical quality `Q(c)`: mean of `exp(reward)` over the samples.
//!
//! Raw `exp(reward)` overflows for rewards in the hundreds, so quality is
//! reported relative to a shift `S`: `Q_S(c) = mean(exp(R_i - S)) = e^{-S} Q(c)`.
//! The store uses `S = max reward seen`. Every ratio of qualities, and hence
//! every sampling probability and every quality ranking, is independent of `S`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genetic::OperatorId;
use crate::lang::Program;

#[derive(Debug, Error)]
pub enum CodebaseError {
    #[error("program {0:?} has no recorded samples")]
    ProgramUnknown(String),
    #[error("codebase is empty")]
    EmptyCodebase,
    #[error("reward {0} is not finite")]
    NonFiniteReward(f64),
    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),
    #[error("malformed record on line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoredEntry {
    pub program: Program,
    pub reward: f64,
    pub author: String,
    pub operator: Option<OperatorId>,
    pub sprint: u64,
    pub aborted: bool,
}

/// Which per-program statistic to rank by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Reward,
    Quality,
}

#[derive(Debug, Clone)]
struct ProgramStats {
    first_entry: usize,
    count: usize,
    reward_sum: f64,
    /// `ln(sum_i exp(r_i))`, accumulated stably.
    log_sum_exp: f64,
}

impl ProgramStats {
    fn new(first_entry: usize, reward: f64) -> Self {
        ProgramStats {
            first_entry,
            count: 1,
            reward_sum: reward,
            log_sum_exp: reward,
        }
    }

    fn add(&mut self, reward: f64) {
        self.count += 1;
        self.reward_sum += reward;
        let (hi, lo) = if reward > self.log_sum_exp {
            (reward, self.log_sum_exp)
        } else {
            (self.log_sum_exp, reward)
        };
        self.log_sum_exp = hi + (lo - hi).exp().ln_1p();
    }

    fn mean_reward(&self) -> f64 {
        self.reward_sum / self.count as f64
    }

    /// `ln Q(c)` without any shift.
    fn log_quality(&self) -> f64 {
        self.log_sum_exp - (self.count as f64).ln()
    }
}

/// Append-only multiset of evaluated programs.
#[derive(Debug, Clone, Default)]
pub struct Codebase {
    entries: Vec<ScoredEntry>,
    stats: Vec<ProgramStats>,
    programs: Vec<Program>,
    index: HashMap<Program, usize>,
    max_reward: Option<f64>,
}

impl PartialEq for Codebase {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl Codebase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = ScoredEntry>) -> Result<Self, CodebaseError> {
        let mut cb = Codebase::new();
        for e in entries {
            cb.record(e)?;
        }
        Ok(cb)
    }

    pub fn record(&mut self, entry: ScoredEntry) -> Result<(), CodebaseError> {
        if !entry.reward.is_finite() {
            return Err(CodebaseError::NonFiniteReward(entry.reward));
        }
        let at = self.entries.len();
        match self.index.get(&entry.program) {
            Some(&slot) => self.stats[slot].add(entry.reward),
            None => {
                self.index.insert(entry.program.clone(), self.programs.len());
                self.programs.push(entry.program.clone());
                self.stats.push(ProgramStats::new(at, entry.reward));
            }
        }
        self.max_reward = Some(self.max_reward.map_or(entry.reward, |m| m.max(entry.reward)));
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[ScoredEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct programs in order of first appearance.
    pub fn programs(&self) -> &[Program] {
        &self.programs
    }

    pub fn distinct_len(&self) -> usize {
        self.programs.len()
    }

    pub fn contains(&self, program: &Program) -> bool {
        self.index.contains_key(program)
    }

    fn stats_of(&self, program: &Program) -> Result<&ProgramStats, CodebaseError> {
        self.index
            .get(program)
            .map(|&slot| &self.stats[slot])
            .ok_or_else(|| CodebaseError::ProgramUnknown(program.to_string()))
    }

    pub fn sample_count(&self, program: &Program) -> usize {
        self.stats_of(program).map_or(0, |s| s.count)
    }

    /// The entry that first recorded `program`.
    pub fn first_entry(&self, program: &Program) -> Option<&ScoredEntry> {
        self.stats_of(program).ok().map(|s| &self.entries[s.first_entry])
    }

    /// Largest single reward sample; the shared quality shift.
    pub fn max_reward(&self) -> Option<f64> {
        self.max_reward
    }

    pub fn shift(&self) -> f64 {
        self.max_reward.unwrap_or(0.0)
    }

    pub fn empirical_reward(&self, program: &Program) -> Result<f64, CodebaseError> {
        Ok(self.stats_of(program)?.mean_reward())
    }

    /// `mean(exp(R_i - shift))` over the samples of `program`.
    pub fn empirical_quality(&self, program: &Program, shift: f64) -> Result<f64, CodebaseError> {
        Ok((self.stats_of(program)?.log_quality() - shift).exp())
    }

    /// Quality under the store's shared shift.
    pub fn quality(&self, program: &Program) -> Result<f64, CodebaseError> {
        self.empirical_quality(program, self.shift())
    }

    /// Shifted qualities of all distinct programs, in first-appearance order.
    pub fn quality_weights(&self, shift: f64) -> Vec<f64> {
        self.stats.iter().map(|s| (s.log_quality() - shift).exp()).collect()
    }

    /// Selection probabilities `Q(c) / sum Q` per distinct program.
    pub fn quality_probabilities(&self, shift: f64) -> Vec<f64> {
        let w = self.quality_weights(shift);
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }

    /// Draw a distinct program with probability proportional to its quality.
    pub fn sample_quality_weighted(&self, rng: &mut dyn RngCore) -> Result<&Program, CodebaseError> {
        if self.programs.is_empty() {
            return Err(CodebaseError::EmptyCodebase);
        }
        let weights = self.quality_weights(self.shift());
        Ok(&self.programs[weighted_index(&weights, rng)])
    }

    /// Distinct programs ranked by `by`, best first; ties keep first-appearance order.
    pub fn top_k(&self, k: usize, by: Statistic) -> Vec<(Program, f64)> {
        let shift = self.shift();
        let mut ranked: Vec<(usize, f64)> = self
            .stats
            .iter()
            .enumerate()
            .map(|(slot, s)| {
                let value = match by {
                    Statistic::Reward => s.mean_reward(),
                    Statistic::Quality => (s.log_quality() - shift).exp(),
                };
                (slot, value)
            })
            .collect();
        // Quality is compared in log space so underflowed weights still rank.
        let key = |slot: usize, value: f64| match by {
            Statistic::Reward => value,
            Statistic::Quality => self.stats[slot].log_quality(),
        };
        let cmp = |a: &(usize, f64), b: &(usize, f64)| {
            key(b.0, b.1).total_cmp(&key(a.0, a.1)).then(a.0.cmp(&b.0))
        };
        if k < ranked.len() {
            ranked.select_nth_unstable_by(k, cmp);
            ranked.truncate(k);
        }
        ranked.sort_by(cmp);
        ranked
            .into_iter()
            .map(|(slot, v)| (self.programs[slot].clone(), v))
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CodebaseError> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_jsonl(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_jsonl(&self, out: &mut dyn Write) -> Result<(), CodebaseError> {
        for e in &self.entries {
            serde_json::to_writer(&mut *out, e).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CodebaseError> {
        Self::read_jsonl(BufReader::new(File::open(path)?))
    }

    pub fn read_jsonl(reader: impl BufRead) -> Result<Self, CodebaseError> {
        let mut cb = Codebase::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: ScoredEntry = serde_json::from_str(&line).map_err(|e| {
                CodebaseError::MalformedRecord {
                    line: i + 1,
                    message: e.to_string(),
                }
            })?;
            cb.record(entry).map_err(|e| CodebaseError::MalformedRecord {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(cb)
    }
}

/// Inverse-CDF draw from unnormalized nonnegative weights.
pub(crate) fn weighted_index(weights: &[f64], rng: &mut dyn RngCore) -> usize {
    let total: f64 = weights.iter().sum();
    let mut target = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if target < w {
            return i;
        }
        target -= w;
    }
    // Rounding left a sliver past the last bucket.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}
