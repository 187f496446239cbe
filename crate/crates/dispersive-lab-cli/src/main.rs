//! Batch experiment driver for the dispersive-lab toolkit.
//!
//! One experiment per invocation: `dispersive-lab <command> [--config path]
//! [--set key=value]... [--plots]`. Configuration comes from a flat TOML
//! document; `--set` overrides win. Every run writes its outputs plus a
//! `manifest.json` into `output_dir`. Exit codes: 0 ok, 2 config error,
//! 3 accuracy error, 4 blow-up.

mod config;
mod experiments;
mod output;

use clap::{Parser, Subcommand};

use config::Command as ExpCommand;

#[derive(Parser)]
#[command(
    name = "dispersive-lab",
    version,
    about = "Pseudospectral experiments for rotation-modified nonlocal dispersive equations"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// TOML config file (flat sections, scalar values).
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    /// Override a config key, e.g. --set gamma=0.5 --set grid.n=2048.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Emit SVG line plots alongside the CSV outputs (simulate only).
    #[arg(long)]
    plots: bool,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Integrate the nonlinear equation and record conserved-quantity diagnostics.
    Simulate(CommonArgs),
    /// Sample the resonance function against its two-term envelope.
    ResonanceScan(CommonArgs),
    /// Dyadic decomposition and square-function diagnostics on random fields.
    LpCheck(CommonArgs),
    /// Space-time trilinear vanishing dichotomy at measured onsets.
    TrilinearCheck(CommonArgs),
    /// Two-bump second-iterate norms and inflation quotients.
    InflationScan(CommonArgs),
    /// Finite-depth to deep-water solution comparison.
    LimitCheck(CommonArgs),
    /// Rescaled-solution consistency of the rotation coefficient.
    ScalingCheck(CommonArgs),
    /// Stepping-kernel throughput across grid sizes.
    Bench(CommonArgs),
}

fn main() {
    let cli = Cli::parse();
    let (cmd, args) = match &cli.command {
        CliCommand::Simulate(a) => (ExpCommand::Simulate, a),
        CliCommand::ResonanceScan(a) => (ExpCommand::ResonanceScan, a),
        CliCommand::LpCheck(a) => (ExpCommand::LpCheck, a),
        CliCommand::TrilinearCheck(a) => (ExpCommand::TrilinearCheck, a),
        CliCommand::InflationScan(a) => (ExpCommand::InflationScan, a),
        CliCommand::LimitCheck(a) => (ExpCommand::LimitCheck, a),
        CliCommand::ScalingCheck(a) => (ExpCommand::ScalingCheck, a),
        CliCommand::Bench(a) => (ExpCommand::Bench, a),
    };

    let threads = match read_thread_cap() {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("config error: {msg}");
            std::process::exit(2);
        }
    };

    let file_text = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => Some(text),
            Err(e) => {
                eprintln!("config error: cannot read {}: {e}", path.display());
                std::process::exit(2);
            }
        },
        None => None,
    };

    let cfg = match config::parse_config(cmd, file_text.as_deref(), &args.set, args.plots) {
        Ok(cfg) => cfg,
        Err(errors) => {
            eprintln!("config error ({} problem(s)):", errors.len());
            for e in &errors {
                eprintln!("  - {e}");
            }
            std::process::exit(2);
        }
    };

    match experiments::dispatch(&cfg, threads) {
        Ok(rec) => {
            println!(
                "{}: status {}, outputs in {}",
                cmd.name(),
                rec.status.as_str(),
                rec.dir.display()
            );
            std::process::exit(rec.status.exit_code());
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
    }
}

/// `DISPERSIVE_LAB_THREADS` caps internal parallelism. The computations in
/// this build are single-threaded, so any positive cap is honored as-is; the
/// value is validated and recorded in the manifest.
fn read_thread_cap() -> Result<Option<usize>, String> {
    match std::env::var("DISPERSIVE_LAB_THREADS") {
        Ok(v) => match v.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(format!(
                "DISPERSIVE_LAB_THREADS must be a positive integer, got \"{v}\""
            )),
        },
        Err(_) => Ok(None),
    }
}
