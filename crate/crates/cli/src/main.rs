use std::path::PathBuf;
use std::process::ExitCode;

use branchdiff::config::RunConfig;
use branchdiff::output::TableFormat;
use branchdiff::pipeline::{self, exit_code, Outcome, RunOptions};
use branchdiff::Result;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "branchdiff",
    version,
    about = "Branching Brownian motion in a localized rate field"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to the configuration's `output`, then `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the ensemble; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Principal eigenpair and limit-moment functions.
    Spectrum,
    /// Monte Carlo ensemble.
    Simulate,
    /// Statistical checks of the ensemble against the spectral predictions.
    Verify,
    /// Finite-population probabilities (d >= 3).
    Extinction,
    /// Everything above.
    All,
}

#[derive(ValueEnum, Clone, Copy)]
enum Format {
    Csv,
    Json,
}

fn run(cli: &Cli) -> Result<Outcome> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| branchdiff::Error::Invalid("--config is required".into()))?;
    let cfg = RunConfig::load(path)?;
    let opts = RunOptions {
        out: pipeline::output_dir(&cfg, cli.out.as_deref()),
        format: match cli.format {
            Format::Csv => TableFormat::Csv,
            Format::Json => TableFormat::Json,
        },
        seed: cli.seed,
    };
    match cli.command {
        Command::Spectrum => pipeline::cmd_spectrum(&cfg, &opts),
        Command::Simulate => pipeline::cmd_simulate(&cfg, &opts),
        Command::Verify => pipeline::cmd_verify(&cfg, &opts),
        Command::Extinction => pipeline::cmd_extinction(&cfg, &opts),
        Command::All => pipeline::cmd_all(&cfg, &opts),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = run(&cli);
    match &result {
        Err(e) => eprintln!("error: {e}"),
        Ok(Outcome::CheckFailure) => eprintln!("one or more checks failed"),
        Ok(Outcome::Pass) => {}
    }
    ExitCode::from(exit_code(&result) as u8)
}
