use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use napaudit::synth::{generate, write_dataset, SynthSpec};
use napaudit::{AuditError, LoadedConfig, Outcome, Pipeline, RunConfig, Stage};

#[derive(Debug, Parser)]
#[command(
    name = "napaudit",
    version,
    about = "Bias audit of network activations: group profiles, topographic maps and linear probes"
)]
struct Cli {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output root; each stage writes into its own subdirectory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Rerun stages even when their inputs are unchanged.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate the dataset, lock its checksums and form capped groups.
    Ingest,
    /// Compute group profiles for every selected layer.
    Nap,
    /// Place channels in the plane.
    Layout,
    /// Render per-group maps and the composite per layer.
    Render,
    /// Train one linear probe per layer.
    Probe,
    /// Tabulate the most frequent probe confusions.
    Errors,
    /// Collate artifacts into report.json and a text summary.
    Report,
    /// Run every stage in order.
    Run,
    /// Write a synthetic dataset with planted group signals.
    Synth {
        /// Dataset directory to create.
        #[arg(long)]
        root: PathBuf,
        /// Minimum examples per intersectional group.
        #[arg(long, default_value_t = 8)]
        per_group: usize,
    },
}

fn run(cli: Cli) -> Result<(), AuditError> {
    if let Command::Synth { root, per_group } = &cli.command {
        let spec = SynthSpec {
            per_group: *per_group,
            seed: cli.seed.unwrap_or(0),
            ..SynthSpec::default()
        };
        return write_dataset(&generate(&spec)?, root);
    }
    let mut config = match &cli.config {
        Some(path) => LoadedConfig::load(path)?,
        None => LoadedConfig::from_config(RunConfig::default())?,
    };
    if let Some(seed) = cli.seed {
        config.config.seed = seed;
    }
    let pipeline = Pipeline {
        config,
        out: cli.out,
        force: cli.force,
        jobs: cli.jobs,
    };
    let stages: Vec<Stage> = match cli.command {
        Command::Ingest => vec![Stage::Ingest],
        Command::Nap => vec![Stage::Nap],
        Command::Layout => vec![Stage::Layout],
        Command::Render => vec![Stage::Render],
        Command::Probe => vec![Stage::Probe],
        Command::Errors => vec![Stage::Errors],
        Command::Report => vec![Stage::Report],
        Command::Run => Stage::ALL.to_vec(),
        Command::Synth { .. } => unreachable!(),
    };
    for stage in stages {
        match pipeline.run(stage)? {
            Outcome::Ran => eprintln!("{stage}: done"),
            Outcome::UpToDate => eprintln!("{stage}: up to date (use --force to rerun)"),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
