use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fdci_cli::{parse_config, run, ExperimentKind, Overrides};

/// Full-duplex beamforming experiments.
#[derive(Parser)]
#[command(name = "fdci", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Downlink/uplink power trade-off over the λ grid.
    Tradeoff(Overrides),
    /// Powers over the downlink SINR grid at fixed λ.
    SinrSweep(Overrides),
    /// Robust schemes over the SINR and CSI-error grids.
    RobustSweep(Overrides),
    /// Per-optimisation and per-frame solve times.
    Timing(Overrides),
    /// Symbol error rate of CI precoding without equalisation.
    Ser(Overrides),
    /// Independent oracle checks on solved instances.
    Validate(Overrides),
    /// Complexity orders of the selected schemes.
    Complexity(Overrides),
}

fn main() -> ExitCode {
    let (kind, overrides) = match Cli::parse().command {
        Command::Tradeoff(o) => (ExperimentKind::Tradeoff, o),
        Command::SinrSweep(o) => (ExperimentKind::SinrSweep, o),
        Command::RobustSweep(o) => (ExperimentKind::RobustSweep, o),
        Command::Timing(o) => (ExperimentKind::Timing, o),
        Command::Ser(o) => (ExperimentKind::Ser, o),
        Command::Validate(o) => (ExperimentKind::Validate, o),
        Command::Complexity(o) => (ExperimentKind::Complexity, o),
    };
    let result = parse_config(kind, &overrides).and_then(|cfg| run(&cfg));
    match result {
        Ok(summary) => {
            for line in &summary.lines {
                println!("{line}");
            }
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("fdci: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
