//! `lumicell` — CSV/JSON artifacts for the VLC broadcasting and
//! localization experiments, one subcommand per experiment.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CliError;
use config::Settings;

#[derive(Parser)]
#[command(
    name = "lumicell",
    version,
    about = "VLC beacon broadcasting and fingerprinting localization simulator",
    after_help = "Config keys are flat `section.key=value` pairs; see README.md for the schema.\n\
                  Exit codes: 0 success, 1 validation error, 2 acceptance failure, 3 I/O error."
)]
struct Cli {
    /// Config file of `key=value` lines (see README.md for the schema)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one config key, e.g. `--set mac.n_slots=50` (repeatable)
    #[arg(long, global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Root output directory; artifacts land in `<outdir>/<subcommand>/`
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    outdir: PathBuf,

    /// RNG seed (falls back to the LUMICELL_SEED env var, then 0)
    #[arg(long, global = true, value_name = "SEED")]
    seed: Option<u64>,

    /// Cap the worker thread count (default: all cores)
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Round-trip random payloads through the modulator, receiver chain, and
    /// demodulator; write pass/fail counts and an annotated sample waveform
    PhyRoundtrip {
        /// Also sweep single-symbol corruptions (only `--corrupt 1` is supported)
        #[arg(long, value_name = "SYMBOLS")]
        corrupt: Option<usize>,
    },
    /// Tabulate theoretical vs simulated slotted-ALOHA success rates over a
    /// sweep of slot counts
    SuccessRate,
    /// Histogram per-point success rates over the 81-luminaire floor scenario
    FloorSim,
    /// Run the full testbed localization study: fingerprints, maps,
    /// static/fixed-point/trajectory accuracy, and the light-off variant
    Localize,
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("LUMICELL_SEED") {
        Ok(v) => v.parse().map_err(|_| {
            CliError::Validation(format!("LUMICELL_SEED: expected an unsigned integer, got `{v}`"))
        }),
        Err(_) => Ok(0),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads: must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("--threads: {e}")))?;
    }
    let seed = resolve_seed(cli.seed)?;
    let settings = Settings::load(cli.config.as_deref(), &cli.set)?;
    match cli.command {
        Command::PhyRoundtrip { corrupt } => {
            commands::cmd_phy_roundtrip(&cli.outdir, seed, corrupt, settings)
        }
        Command::SuccessRate => commands::cmd_success_rate(&cli.outdir, seed, settings),
        Command::FloorSim => commands::cmd_floor_sim(&cli.outdir, seed, settings),
        Command::Localize => commands::cmd_localize(&cli.outdir, seed, settings),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
