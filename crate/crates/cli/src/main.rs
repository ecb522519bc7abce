use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use geomv_cli::{execute, exit_code, Command, Invocation};

#[derive(Parser)]
#[command(name = "geomv", about = "Geospatial weather-linkage multiverse pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Run manifest (TOML).
    #[arg(long, global = true, default_value = "geomv.toml")]
    manifest: PathBuf,
    /// Worker threads; does not affect outputs.
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    /// Overrides the manifest seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Build spatial features (masked EA points, zones, admin polygons).
    Mask,
    /// Extract daily series for every feature and product.
    Extract,
    /// Compute seasonal weather metrics.
    Metrics,
    /// Run the regression lattice.
    Run,
    /// Relabel a blinded run and write its aggregates.
    Unblind,
    /// Generate synthetic fixtures and a manifest that runs on them.
    Synth,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Mask => Command::Mask,
        Cmd::Extract => Command::Extract,
        Cmd::Metrics => Command::Metrics,
        Cmd::Run => Command::Run,
        Cmd::Unblind => Command::Unblind,
        Cmd::Synth => Command::Synth,
    };
    let inv = Invocation {
        command,
        manifest: cli.manifest,
        parallelism: cli.parallelism,
        seed: cli.seed,
        out_root: std::env::var_os("GEOMV_OUT").map(PathBuf::from),
    };
    match execute(&inv) {
        Ok(out) => {
            println!("{}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
