use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use monitored_sim::config::{parse_eta_list, parse_size_list};
use monitored_sim::{run_experiment, ExperimentConfig, ExperimentKind, Overrides, SimError};

type EtaList = Vec<f64>;
type SizeList = Vec<usize>;

/// Monitored qubit-chain simulations.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: ExperimentKind,
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace the seed list with one seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// η grid: "0.1,0.3" or "start:stop:step".
    #[arg(long, value_parser = parse_eta_list)]
    eta: Option<EtaList>,
    /// L grid: "6,8,10".
    #[arg(long, value_parser = parse_size_list)]
    sizes: Option<SizeList>,
    /// Horizon T for entropy, memory loss and spectrum runs.
    #[arg(long)]
    steps: Option<u64>,
    /// Fixed block length b for the gap engine.
    #[arg(long)]
    block_length: Option<u64>,
    /// Trajectories per purification cell.
    #[arg(long)]
    trajectories: Option<usize>,
    /// gaps.csv from a previous gap run.
    #[arg(long)]
    fit_input: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), SimError> {
    let mut config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    config.kind = cli.experiment;
    config.apply(&Overrides {
        output_dir: cli.out,
        seed: cli.seed,
        threads: cli.threads,
        etas: cli.eta,
        sizes: cli.sizes,
        steps: cli.steps,
        block_length: cli.block_length,
        trajectories: cli.trajectories,
        fit_input: cli.fit_input,
    });
    let outcome = run_experiment(&config)?;
    let dir = config.resolved_output_dir();
    println!("{}: {} artifacts in {}", config.kind.name(), outcome.manifest.artifacts.len(), dir.display());
    match outcome.error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
