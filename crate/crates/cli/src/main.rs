use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use neurogen::lang::{prune, tokenize};
use neurogen::pomdp::{eval_program, make_env_with_bins};
use neurogen::scrum::ScoringConfig;
use neurogen_cli::{emit_report, run_experiment, summarize, CliError, ExperimentConfig, Overrides};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "neurogen", version, about = "Evolve and train agent programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a JSON config.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Wall-clock limit for the sprint loop, in seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Rank the programs of a saved codebase and write report.json beside it.
    Report {
        codebase: PathBuf,
        #[arg(long, default_value_t = 100)]
        min_samples: usize,
    },
    /// Evaluate one program for a number of episodes.
    Eval {
        env: String,
        program: String,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 256)]
        obs_bins: u16,
    },
    /// Print the pruned form of a program.
    Prune { program: String },
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    let stdout = &mut std::io::stdout();
    match command {
        Command::Run {
            config,
            seed,
            time_limit,
            out_dir,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.apply(&Overrides {
                seed,
                time_limit,
                out_dir,
            })?;
            let summary = run_experiment(&cfg)?;
            println!("sprints: {} (stopped by {:?})", summary.sprints, summary.stop);
            summarize(&summary.report, stdout).ok();
            println!("artifacts in {}", cfg.out_dir.display());
        }
        Command::Report { codebase, min_samples } => {
            let scoring = ScoringConfig {
                min_samples,
                ..ScoringConfig::default()
            };
            let report = emit_report(&codebase, scoring)?;
            summarize(&report, stdout).ok();
        }
        Command::Eval {
            env,
            program,
            episodes,
            seed,
            obs_bins,
        } => {
            let mut env = make_env_with_bins(&env, obs_bins).map_err(|e| CliError::ConfigInvalid {
                path: "env".into(),
                message: e.to_string(),
            })?;
            let program = tokenize(&program);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lang = Default::default();
            let (mut total, mut aborted) = (0.0, 0);
            for _ in 0..episodes {
                let ep = eval_program(&program, env.as_mut(), &lang, &mut rng);
                total += ep.total_reward;
                aborted += usize::from(ep.aborted);
            }
            println!("program: {program}");
            println!("mean reward over {episodes} episodes: {}", total / episodes.max(1) as f64);
            println!("aborted episodes: {aborted}");
        }
        Command::Prune { program } => println!("{}", prune(&tokenize(&program))),
    }
    Ok(())
}
