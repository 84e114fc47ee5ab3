//! Command-line entry point. Exit codes: 0 on success, 2 for configuration
//! errors, 3 for failures at run time (artifacts written so far are kept).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};
use lsdr::config::RunConfig;
use lsdr::run::{cmd_eval, cmd_plot, cmd_sweep, cmd_train, load_run_config};

/// Learn domain-randomization distributions together with a policy.
///
/// Any config key can be overridden with `--key=value`, using dots for
/// nested keys, e.g. `--lsdr.epochs=50 --ppo.clip=0.1`.
#[derive(Parser)]
#[command(name = "lsdr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON config file; unset keys take the environment's preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Root directory for the new run directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy and its training distribution.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Sample contexts from the fixed prior instead of learning it.
        #[arg(long)]
        fixed_dr: bool,
        /// Continue from the latest checkpoint of this run directory.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Fine-tune a trained policy on a test set and report ranges.
    Eval {
        run_dir: PathBuf,
        /// Second run evaluated on the same test set, e.g. a fixed-DR baseline.
        #[arg(long)]
        compare: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Train one policy per context grid cell.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Render SVG figures of one or more runs.
    Plot {
        #[arg(required = true)]
        run_dirs: Vec<PathBuf>,
    },
    /// List the built-in environments as JSON.
    Envs,
}

/// Splits `--key=value` config overrides from the arguments clap parses.
fn split_overrides(args: Vec<String>) -> (Vec<String>, Vec<(String, String)>) {
    let mut flags = Vec::new();
    let mut command = Cli::command();
    command.build();
    for sub in command.get_subcommands() {
        flags.extend(sub.get_arguments().filter_map(|a| a.get_long().map(str::to_string)));
    }
    flags.extend(["help".to_string(), "version".to_string()]);
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    for arg in args {
        match arg.strip_prefix("--").and_then(|a| a.split_once('=')) {
            Some((key, value)) if !flags.iter().any(|f| f == key) => {
                overrides.push((key.to_string(), value.to_string()));
            }
            _ => rest.push(arg),
        }
    }
    (rest, overrides)
}

fn run_overrides(run: &RunArgs, mut overrides: Vec<(String, String)>) -> Vec<(String, String)> {
    if let Some(seed) = run.seed {
        overrides.push(("lsdr.seed".into(), seed.to_string()));
    }
    if let Some(workers) = run.workers {
        overrides.push(("workers".into(), workers.to_string()));
    }
    if let Some(out) = &run.out {
        overrides.push(("output_dir".into(), serde_json::to_string(out).unwrap_or_default()));
    }
    overrides
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let (args, overrides) = split_overrides(std::env::args().collect());
    let cli = Cli::parse_from(args);
    match run(cli.command, overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<lsdr::Error>() {
                Some(lsdr::Error::Config(_)) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

fn run(command: Command, overrides: Vec<(String, String)>) -> anyhow::Result<()> {
    match command {
        Command::Train { run, fixed_dr, resume } => {
            let mut overrides = run_overrides(&run, overrides);
            if fixed_dr {
                overrides.push(("lsdr.fixed_dr".into(), "true".into()));
            }
            let config = match (&run.config, &resume) {
                (None, Some(dir)) => load_run_config(dir, &overrides)?,
                (path, _) => RunConfig::load(path.as_deref(), &overrides)?,
            };
            let outcome = cmd_train(&config, resume.as_deref())?;
            let range = outcome
                .record
                .final_distribution()
                .map(|d| d.fit_uniform_summary(config.eval.range_mass));
            println!("{}", outcome.run_dir.display());
            if let Some(r) = range {
                log::info!("converged range: lower {:?} upper {:?}", r.lower, r.upper);
            }
        }
        Command::Eval { run_dir, compare, workers } => {
            let mut overrides = overrides;
            if let Some(w) = workers {
                overrides.push(("workers".into(), w.to_string()));
            }
            let outcome = cmd_eval(&run_dir, compare.as_deref(), &overrides)?;
            println!("{}", outcome.eval_dir.display());
        }
        Command::Sweep { run } => {
            let config = RunConfig::load(run.config.as_deref(), &run_overrides(&run, overrides))?;
            let outcome = cmd_sweep(&config)?;
            println!("{}", outcome.run_dir.display());
        }
        Command::Plot { run_dirs } => {
            if !overrides.is_empty() {
                anyhow::bail!(lsdr::Error::Config("plot takes no config overrides".into()));
            }
            println!("{}", cmd_plot(&run_dirs)?.display());
        }
        Command::Envs => {
            let catalog: Vec<_> = lsdr::envs::env_catalog()
                .into_iter()
                .map(|d| {
                    serde_json::json!({
                        "id": d.id,
                        "context": d.context_names,
                        "prior_lower": d.context.prior.lower(),
                        "prior_upper": d.context.prior.upper(),
                        "nominal": d.nominal_context,
                        "observation_dim": d.observation_dim,
                        "action_dim": d.action_dim,
                        "horizon": d.horizon,
                        "reward": d.reward,
                        "exact_oracle": d.has_exact_oracle,
                    })
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&catalog)?);
        }
    }
    Ok(())
}
