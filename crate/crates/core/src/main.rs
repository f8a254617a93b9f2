use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cvqnn::experiments::{self, Experiment, ExperimentConfig};
use cvqnn::{Error, Result};

#[derive(Parser)]
#[command(name = "cvqnn", version, about = "Train and compile continuous-variable quantum neural networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` config file; missing keys keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `seed` from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `out_dir` from the config file.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Classify MNIST digits by their largest x quadrature.
    Classify,
    /// Learn an image column by column as Fock amplitudes.
    Reconstruct,
    /// Remove additive Gaussian noise through two spectrum learners.
    Denoise,
    /// Denoise at every noise level in `sweep_stds`.
    Sweep,
    /// Compile weights or a trained checkpoint into a gate program.
    Decompose,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::Classify => Experiment::Classify,
            Command::Reconstruct => Experiment::Reconstruct,
            Command::Denoise => Experiment::Denoise,
            Command::Sweep => Experiment::Sweep,
            Command::Decompose => Experiment::Decompose,
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let experiment = Experiment::from(cli.command);
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::parse(&text, experiment)?
        }
        None => ExperimentConfig::defaults(experiment),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        config.out_dir = dir.clone();
    }
    config.validate()?;
    Ok(config)
}

fn execute(config: &ExperimentConfig) -> Result<()> {
    let report = experiments::run(config)?;
    report.write_to(&config.out_dir)?;
    for (name, value) in &report.metrics {
        println!("{name} = {value}");
    }
    if report.metric("violations").is_some_and(|v| v > 0.0) {
        return Err(Error::InvalidInput("denoising did not lower the error at every noise level".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match execute(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
