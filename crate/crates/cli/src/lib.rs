//! Experiment orchestration behind the `neurogen` binary.
//!
//! A run reads one JSON config, optionally seeds the codebase from a text
//! file, runs the team, re-scores the best programs and writes three files
//! into the output directory: `codebase.jsonl`, `sprints.csv`, `report.json`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use neurogen::codebase::{Codebase, CodebaseError, ScoredEntry};
use neurogen::lang::{tokenize, Program};
use neurogen::neural::{PolicyParameters, TrainerConfig};
use neurogen::pomdp::{eval_program, make_env_with_bins, Environment};
use neurogen::scrum::{
    final_scoring, instant_scrum_with, DeveloperSpec, Report, RunConfig, ScoringConfig, ScrumError,
    SprintCsv, StopReason, Team,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config at `{path}`: {message}")]
    ConfigInvalid { path: String, message: String },
    #[error("{path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Scrum(#[from] ScrumError),
    #[error(transparent)]
    Codebase(#[from] CodebaseError),
    #[error("codebase is empty: nothing to report")]
    EmptyReport,
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },
}

impl CliError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigInvalid { .. } => 2,
            CliError::Scrum(ScrumError::DeadlockedTeam) => 3,
            CliError::EmptyReport => 4,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::IoFailure {
        path: path.to_path_buf(),
        source,
    }
}

fn invalid(path: &str, message: impl ToString) -> CliError {
    CliError::ConfigInvalid {
        path: path.into(),
        message: message.to_string(),
    }
}

fn default_bins() -> u16 {
    256
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `cartpole`, `mountaincar` or `taxi`.
    pub environment: String,
    /// Levels per bounded observation dimension.
    #[serde(default = "default_bins")]
    pub obs_bins: u16,
    pub team: Vec<DeveloperSpec>,
    pub run: RunConfig,
    #[serde(default)]
    pub trainer: TrainerConfig,
    #[serde(default)]
    pub scoring: ScoringConfig,
    /// Initial programs, one per line. Relative paths are resolved against
    /// the config file's directory.
    #[serde(default)]
    pub seeds_path: Option<PathBuf>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Neural developer weights: loaded from here when present at the start,
    /// written here at the end. Relative to the config file's directory.
    #[serde(default)]
    pub checkpoint_dir: Option<PathBuf>,
}

/// Command-line values that replace config fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub time_limit: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Parse and validate; errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(&path, e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = ExperimentConfig::from_json(&text)?;
        if let Some(dir) = path.parent() {
            for p in [&mut cfg.seeds_path, &mut cfg.checkpoint_dir].into_iter().flatten() {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        make_env_with_bins(&self.environment, self.obs_bins).map_err(|e| invalid("environment", e))?;
        if !(1..=256).contains(&self.obs_bins) {
            return Err(invalid("obs_bins", "must be between 1 and 256"));
        }
        if self.team.is_empty() {
            return Err(invalid("team", "must list at least one developer"));
        }
        self.run.validate().map_err(|e| invalid("run", e))?;
        self.trainer.validate().map_err(|e| invalid("trainer", e))?;
        if self.scoring.top_n < 1 {
            return Err(invalid("scoring.top_n", "must be at least 1"));
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(seed) = o.seed {
            self.run.seed = seed;
        }
        if let Some(t) = o.time_limit {
            self.run.time_limit = Some(t);
        }
        if let Some(dir) = &o.out_dir {
            self.out_dir = dir.clone();
        }
        self.validate()
    }

    pub fn env(&self) -> Box<dyn Environment + Send> {
        make_env_with_bins(&self.environment, self.obs_bins).expect("validated environment")
    }
}

/// Non-blank lines of a seeds file, as programs.
pub fn read_seeds(path: &Path) -> Result<Vec<Program>, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(tokenize)
        .collect())
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub sprints: u64,
    pub stop: StopReason,
    pub report: Report,
}

/// Run one experiment and write its artifacts to `cfg.out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    let out = &cfg.out_dir;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
    let mut env = cfg.env();
    let mut team = Team::from_specs(&cfg.team, env.spec(), &cfg.trainer, &mut rng)?;

    if let Some(dir) = &cfg.checkpoint_dir {
        load_checkpoints(&mut team, dir)?;
    }

    let mut cb = Codebase::new();
    if let Some(path) = &cfg.seeds_path {
        for program in read_seeds(path)? {
            let episode = eval_program(&program, env.as_mut(), &cfg.run.language, &mut rng);
            cb.record(ScoredEntry {
                program,
                reward: episode.total_reward,
                author: "human".into(),
                operator: None,
                sprint: 0,
                aborted: episode.aborted,
            })?;
        }
    }

    let csv_path = out.join("sprints.csv");
    let csv_file = File::create(&csv_path).map_err(io_err(&csv_path))?;
    let mut csv = SprintCsv::new(BufWriter::new(csv_file));
    let outcome = instant_scrum_with(&mut team, &mut cb, env.as_mut(), &cfg.run, &mut rng, &mut |r| {
        csv.write(r)
    })?;
    csv.flush()?;
    if let Some(dir) = &cfg.checkpoint_dir {
        save_checkpoints(&team, dir)?;
    }

    let report = final_scoring(&mut cb, env.as_mut(), &cfg.run.language, cfg.scoring, &mut rng)?;
    cb.save(out.join("codebase.jsonl"))?;
    write_json(&out.join("report.json"), &report)?;
    Ok(RunSummary {
        sprints: outcome.log.sprints(),
        stop: outcome.stop,
        report,
    })
}

/// File holding a developer's weights inside a checkpoint directory.
pub fn checkpoint_path(dir: &Path, developer_id: &str) -> PathBuf {
    let stem: String = developer_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    dir.join(format!("{stem}.policy"))
}

fn load_checkpoints(team: &mut Team, dir: &Path) -> Result<(), CliError> {
    for dev in team.members_mut() {
        let path = checkpoint_path(dir, dev.id());
        let Some(policy) = dev.policy_mut() else { continue };
        if !path.exists() {
            continue;
        }
        let fail = |message: String| CliError::Checkpoint { path: path.clone(), message };
        let mut file = File::open(&path).map_err(io_err(&path))?;
        let loaded = PolicyParameters::read_from(&mut file).map_err(|e| fail(e.to_string()))?;
        if loaded.widths() != policy.widths() {
            return Err(fail(format!("widths {:?} do not match {:?}", loaded.widths(), policy.widths())));
        }
        *policy = loaded;
    }
    Ok(())
}

fn save_checkpoints(team: &Team, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for dev in team.members() {
        if let Some(policy) = dev.policy() {
            let path = checkpoint_path(dir, dev.id());
            let mut out = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
            policy.write_to(&mut out).and_then(|_| out.flush()).map_err(io_err(&path))?;
        }
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

/// Rebuild the report from a saved codebase and write it next to it as
/// `report.json`. An empty codebase is an error after the empty report is written.
pub fn emit_report(codebase_path: &Path, scoring: ScoringConfig) -> Result<Report, CliError> {
    let cb = Codebase::load(codebase_path)?;
    let report = Report::from_codebase(&cb, scoring);
    let dir = codebase_path.parent().unwrap_or(Path::new("."));
    write_json(&dir.join("report.json"), &report)?;
    if report.is_empty() {
        return Err(CliError::EmptyReport);
    }
    Ok(report)
}

/// Human-readable summary of a report's best program.
pub fn summarize(report: &Report, out: &mut dyn Write) -> std::io::Result<()> {
    let Some(best) = report.best() else {
        return writeln!(out, "no programs");
    };
    writeln!(out, "best program: {}", best.program)?;
    if best.samples >= report.min_samples {
        writeln!(out, "mean reward over {} episodes: {}", best.samples, best.mean_reward)?;
    } else {
        writeln!(
            out,
            "mean reward: {} (only {} episodes, fewer than {})",
            best.mean_reward, best.samples, report.min_samples
        )?;
    }
    let op = best.operator.map_or("none".to_string(), |o| o.to_string());
    writeln!(out, "author: {}, operator: {}", best.author, op)?;
    writeln!(out, "programs ranked: {}", report.entries.len())
}
