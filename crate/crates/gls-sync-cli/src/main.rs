//! Batch experiment runner for the coupled-oscillator toolkit. Every
//! subcommand reads an optional plain-text config, writes CSV/JSON
//! artifacts into a content-addressed subdirectory, and leaves a manifest
//! describing the run.

mod commands;
mod config;
mod manifest;

use clap::{Args, Parser, Subcommand, ValueEnum};
use commands::Invocation;
use config::{CommandKind, Overrides, SweepPreset};
use gls_sync::Regime;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "gls-sync",
    version,
    about = "Coupled chaotic oscillators: simulation, sync metrics, stability checks, and chaos-masking communication"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Plain-text config file ([sim], [sigma], [comms], [stability] sections)
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base directory for output subdirectories
    #[arg(long, value_name = "DIR", default_value = "runs")]
    out: PathBuf,
    /// Worker threads for independent grid points
    #[arg(long, value_name = "N", default_value_t = 1)]
    workers: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    /// σ = (s,s,s), s from 0 to 1 in steps of 0.2
    Literal,
    /// σ = (1,1,s), s from −1 to 1 in steps of 0.2
    Figure,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    /// σ = (1,1,−1): third channel synchronized
    Positive,
    /// σ = (1,1,−0.2): third channel near-flat
    Zero,
    /// σ = (1,1,1): third channel anti-synchronized
    Negative,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the coupled pair and export t, states, and errors as CSV
    Simulate(CommonArgs),
    /// Slope/quality/correlation metrics over a σ grid
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Built-in σ grid (overrides [sigma] in the config)
        #[arg(long, value_enum)]
        preset: Option<PresetArg>,
    },
    /// Evaluate the error-contraction conditions and emit a JSON report
    Stability(CommonArgs),
    /// Encode sinusoids on the transmitted channels, decode, and fit
    Comms {
        #[command(flatten)]
        common: CommonArgs,
        /// Message frequency set
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        case: Option<u8>,
        /// σ preset for the third channel's slope
        #[arg(long, value_enum)]
        regime: Option<RegimeArg>,
    },
    /// Power spectrum of the free-running third master channel
    Spectrum(CommonArgs),
}

fn invocation(cli: Cli) -> Invocation {
    let (kind, common, preset, case, regime) = match cli.command {
        Command::Simulate(c) => (CommandKind::Simulate, c, None, None, None),
        Command::Sweep { common, preset } => (CommandKind::Sweep, common, preset, None, None),
        Command::Stability(c) => (CommandKind::Stability, c, None, None, None),
        Command::Comms {
            common,
            case,
            regime,
        } => (CommandKind::Comms, common, None, case, regime),
        Command::Spectrum(c) => (CommandKind::Spectrum, c, None, None, None),
    };
    Invocation {
        kind,
        config_path: common.config,
        out_dir: common.out,
        workers: common.workers.max(1),
        overrides: Overrides {
            preset: preset.map(|p| match p {
                PresetArg::Literal => SweepPreset::Literal,
                PresetArg::Figure => SweepPreset::Figure,
            }),
            case,
            regime: regime.map(|r| match r {
                RegimeArg::Positive => Regime::Positive,
                RegimeArg::Zero => Regime::Zero,
                RegimeArg::Negative => Regime::Negative,
            }),
        },
    }
}

fn main() -> ExitCode {
    // status lines go to stdout; when a downstream reader closes early
    // (gls-sync ... | head), die quietly like any pipe-aware tool instead
    // of panicking in println!
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match commands::run(&invocation(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
