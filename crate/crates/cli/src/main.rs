use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use logit_bandit::experiments::{self, ExperimentError};
use logit_bandit::ExperimentConfig;

/// Simulate optimistic logistic bandits and check their guarantees.
#[derive(Debug, Parser)]
#[command(name = "logit-bandit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run replicated bandit simulations; writes trace.csv, aggregate.csv and summary.json.
    Run(Common),
    /// Monte Carlo check of the self-normalized concentration bound; writes martingale.json.
    Martingale(Common),
    /// Boundary samples of both confidence sets at a checkpoint; writes figure2.csv.
    Figure2(Common),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed` from the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output` from the config file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Record per-arm optimism diagnostics and print the check report.
    #[arg(long)]
    diagnostics: bool,
}

fn load(common: &Common) -> Result<ExperimentConfig, ExperimentError> {
    let text = fs::read_to_string(&common.config).map_err(|e| {
        ExperimentError::Config(logit_bandit::ConfigError {
            path: common.config.display().to_string(),
            message: e.to_string(),
        })
    })?;
    let mut config = ExperimentConfig::parse(&text)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.output = out.clone();
    }
    Ok(config)
}

fn execute(command: Command) -> Result<(), ExperimentError> {
    match command {
        Command::Run(common) => {
            let config = load(&common)?;
            let output = experiments::run(&config, common.threads, common.diagnostics)?;
            if common.diagnostics {
                let report = experiments::validate_optimism(&output.results)?;
                println!("{}", serde_json::to_string_pretty(&report).expect("valid json"));
            }
            output.write(&config.output)?;
            log::info!("wrote run outputs to {}", config.output.display());
        }
        Command::Martingale(common) => {
            let config = load(&common)?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(common.threads.max(1))
                .build()
                .map_err(|e| ExperimentError::Numerical(e.to_string()))?;
            let reports = pool.install(|| experiments::run_martingale(&config))?;
            let text = serde_json::to_string_pretty(&reports).expect("valid json") + "\n";
            fs::create_dir_all(&config.output)?;
            fs::write(config.output.join("martingale.json"), text)?;
        }
        Command::Figure2(common) => {
            let config = load(&common)?;
            let csv = experiments::emit_confidence_figure_data(&config)?;
            fs::create_dir_all(&config.output)?;
            fs::write(config.output.join("figure2.csv"), csv)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                ExperimentError::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
