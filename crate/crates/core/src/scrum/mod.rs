//! Teams of developers sharing one codebase.
//!
//! The loop visits developers round-robin. Each sprint one developer proposes
//! a program, it is evaluated for one episode, the reward sample is recorded,
//! and the developer learns from it. Afterwards the best programs are
//! re-evaluated until their mean reward rests on enough episodes to report.

mod developer;
mod stopping;
mod team;

pub use developer::{Developer, DummyDeveloper, GeneticMember, NeuralMember, Proposal};
pub use stopping::{should_stop, StoppingConfig, TrendStopper};
pub use team::{named_team, t_genetic, t_large, t_neural, t_small, DeveloperKind, DeveloperSpec, Team};

use std::io::Write;
use std::time::{Duration, Instant};

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codebase::{Codebase, CodebaseError, ScoredEntry};
use crate::genetic::OperatorId;
use crate::lang::{CompiledProgram, LanguageConfig, Program};
use crate::pomdp::{eval_compiled, eval_program, Environment};

#[derive(Debug, Error)]
pub enum ScrumError {
    #[error("no developer could propose for a full round: the codebase needs initial programs")]
    DeadlockedTeam,
    #[error("codebase is empty")]
    EmptyCodebase,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Codebase(#[from] CodebaseError),
    #[error("sprint log: {0}")]
    Log(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Sprint budget.
    pub n_max: u64,
    /// Wall-clock limit in seconds.
    #[serde(default)]
    pub time_limit: Option<f64>,
    /// Trend-based early stopping; `None` runs the whole budget.
    #[serde(default)]
    pub stopping: Option<StoppingConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub language: LanguageConfig,
}

impl RunConfig {
    pub fn new(n_max: u64) -> Self {
        RunConfig {
            n_max,
            time_limit: None,
            stopping: None,
            seed: 0,
            language: LanguageConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ScrumError> {
        let bad = |m: String| Err(ScrumError::InvalidConfig(m));
        if self.n_max < 1 {
            return bad("n_max must be at least 1".into());
        }
        if let Some(s) = self.stopping {
            if s.patience < 1 || s.window < 2 {
                return bad(format!("stopping needs window >= 2 and patience >= 1, got {s:?}"));
            }
        }
        if let Some(t) = self.time_limit {
            if t.is_nan() || t <= 0.0 {
                return bad(format!("time_limit must be positive, got {t}"));
            }
        }
        self.language
            .validate()
            .map_err(|e| ScrumError::InvalidConfig(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SprintRecord {
    pub sprint: u64,
    pub developer: String,
    pub operator: Option<OperatorId>,
    pub reward: f64,
    pub length: usize,
    pub aborted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Budget,
    EarlyStop,
    TimeLimit,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SprintLog {
    pub records: Vec<SprintRecord>,
}

impl SprintLog {
    pub fn sprints(&self) -> u64 {
        self.records.last().map_or(0, |r| r.sprint)
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.reward).collect()
    }

    pub fn write_csv(&self, out: impl Write) -> Result<(), ScrumError> {
        let mut w = SprintCsv::new(out);
        for r in &self.records {
            w.write(r)?;
        }
        w.flush()
    }
}

/// Streams sprint records as CSV rows: sprint, developer, operator, reward,
/// length, aborted.
pub struct SprintCsv<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> SprintCsv<W> {
    pub fn new(out: W) -> Self {
        SprintCsv {
            inner: csv::Writer::from_writer(out),
        }
    }

    pub fn write(&mut self, r: &SprintRecord) -> Result<(), ScrumError> {
        self.inner.serialize(r)?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), ScrumError> {
        self.inner.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ScrumOutcome {
    pub log: SprintLog,
    pub stop: StopReason,
}

/// Draw an existing program with probability proportional to its quality.
pub fn dummy_propose(cb: &Codebase, rng: &mut dyn RngCore) -> Result<Program, ScrumError> {
    cb.sample_quality_weighted(rng)
        .cloned()
        .map_err(|_| ScrumError::EmptyCodebase)
}

/// Run the team against `env` until the budget, time limit or stopping rule ends it.
pub fn instant_scrum(
    team: &mut Team,
    cb: &mut Codebase,
    env: &mut dyn Environment,
    cfg: &RunConfig,
    rng: &mut dyn RngCore,
) -> Result<ScrumOutcome, ScrumError> {
    instant_scrum_with(team, cb, env, cfg, rng, &mut |_| Ok(()))
}

/// [`instant_scrum`] that hands each record to `on_sprint` as it is made.
pub fn instant_scrum_with(
    team: &mut Team,
    cb: &mut Codebase,
    env: &mut dyn Environment,
    cfg: &RunConfig,
    rng: &mut dyn RngCore,
    on_sprint: &mut dyn FnMut(&SprintRecord) -> Result<(), ScrumError>,
) -> Result<ScrumOutcome, ScrumError> {
    cfg.validate()?;
    let started = Instant::now();
    let deadline = cfg.time_limit.map(Duration::from_secs_f64);
    let mut stopper = cfg.stopping.map(TrendStopper::new);
    let mut log = SprintLog::default();
    let mut n: u64 = 0;
    loop {
        let mut proposed = false;
        for dev in team.members_mut() {
            if n >= cfg.n_max {
                return Ok(ScrumOutcome { log, stop: StopReason::Budget });
            }
            if deadline.is_some_and(|d| started.elapsed() >= d) {
                return Ok(ScrumOutcome { log, stop: StopReason::TimeLimit });
            }
            let Some(proposal) = dev.propose(cb, rng) else {
                continue;
            };
            proposed = true;
            let episode = eval_program(&proposal.program, env, &cfg.language, rng);
            n += 1;
            cb.record(ScoredEntry {
                program: proposal.program.clone(),
                reward: episode.total_reward,
                author: dev.id().to_string(),
                operator: proposal.operator,
                sprint: n,
                aborted: episode.aborted,
            })?;
            dev.update(&proposal, episode.total_reward, cb);
            let record = SprintRecord {
                sprint: n,
                developer: dev.id().to_string(),
                operator: proposal.operator,
                reward: episode.total_reward,
                length: proposal.program.len(),
                aborted: episode.aborted,
            };
            on_sprint(&record)?;
            log.records.push(record);
            if stopper.as_mut().is_some_and(|s| s.push(episode.total_reward)) {
                return Ok(ScrumOutcome { log, stop: StopReason::EarlyStop });
            }
        }
        if !proposed {
            return Err(ScrumError::DeadlockedTeam);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScoringConfig {
    /// How many programs, ranked by mean reward, to re-evaluate.
    pub top_n: usize,
    /// Episodes each of them must have before it is reported.
    pub min_samples: usize,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            top_n: 100,
            min_samples: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub program: Program,
    /// Mean reward over all samples.
    pub mean_reward: f64,
    pub samples: usize,
    /// Quality relative to the report's shift.
    pub quality: f64,
    /// Who first produced the program.
    pub author: String,
    pub operator: Option<OperatorId>,
}

/// Programs ranked by mean reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// Only programs with at least this many samples are ranked, unless none
    /// have; then every program is.
    pub min_samples: usize,
    /// The shared shift `S` that `quality` is relative to.
    pub shift: f64,
    pub entries: Vec<ReportEntry>,
}

impl Report {
    /// Rank the codebase's programs by mean reward, keeping at most `top_n`.
    pub fn from_codebase(cb: &Codebase, cfg: ScoringConfig) -> Report {
        let qualified = cb
            .programs()
            .iter()
            .any(|p| cb.sample_count(p) >= cfg.min_samples);
        let entries = cb
            .top_k(cb.distinct_len(), crate::codebase::Statistic::Reward)
            .into_iter()
            .filter(|(p, _)| !qualified || cb.sample_count(p) >= cfg.min_samples)
            .take(cfg.top_n)
            .map(|(program, mean_reward)| {
                let first = cb.first_entry(&program).expect("ranked programs are recorded");
                ReportEntry {
                    samples: cb.sample_count(&program),
                    quality: cb.quality(&program).expect("ranked programs are recorded"),
                    author: first.author.clone(),
                    operator: first.operator,
                    mean_reward,
                    program,
                }
            })
            .collect();
        Report {
            min_samples: cfg.min_samples,
            shift: if cb.is_empty() { 0.0 } else { cb.shift() },
            entries,
        }
    }

    pub fn best(&self) -> Option<&ReportEntry> {
        self.entries.first()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Bring the `top_n` programs by mean reward to `min_samples` episodes each,
/// then report.
pub fn final_scoring(
    cb: &mut Codebase,
    env: &mut dyn Environment,
    lang: &LanguageConfig,
    cfg: ScoringConfig,
    rng: &mut dyn RngCore,
) -> Result<Report, ScrumError> {
    if cb.is_empty() {
        return Err(ScrumError::EmptyCodebase);
    }
    let sprint = cb.entries().iter().map(|e| e.sprint).max().unwrap_or(0);
    let finalists = cb.top_k(cfg.top_n, crate::codebase::Statistic::Reward);
    for (program, _) in finalists {
        let compiled = CompiledProgram::new(&program);
        for _ in cb.sample_count(&program)..cfg.min_samples {
            let episode = eval_compiled(&compiled, env, lang, rng);
            cb.record(ScoredEntry {
                program: program.clone(),
                reward: episode.total_reward,
                author: "scoring".into(),
                operator: None,
                sprint,
                aborted: episode.aborted,
            })?;
        }
    }
    Ok(Report::from_codebase(cb, cfg))
}
