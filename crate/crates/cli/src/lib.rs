//! Command-line front end for the geomv pipeline.

pub mod manifest;
pub mod pipeline;

use std::path::PathBuf;

use geomv::{Error, ErrorClass};

pub use manifest::RunManifest;
pub use pipeline::{Context, RunStats, StageStatus};

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Validation => EXIT_VALIDATION,
        ErrorClass::Data => EXIT_DATA,
        ErrorClass::Numeric => EXIT_NUMERIC,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Mask,
    Extract,
    Metrics,
    Run,
    Unblind,
    Synth,
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub manifest: PathBuf,
    pub parallelism: Option<usize>,
    pub seed: Option<u64>,
    /// Output root; defaults to the manifest's `out_dir`.
    pub out_root: Option<PathBuf>,
}

/// Loads the manifest, applies overrides and runs one command. Returns the output directory.
pub fn execute(inv: &Invocation) -> geomv::Result<PathBuf> {
    let mut m = RunManifest::load(&inv.manifest)?;
    if let Some(p) = inv.parallelism {
        m.parallelism = p;
    }
    if let Some(s) = inv.seed {
        m.seed = s;
    }
    m.validate_common()?;
    let ctx = Context::new(m, inv.out_root.clone())?;
    match inv.command {
        Command::Mask => ctx.mask().map(drop),
        Command::Extract => ctx.extract().map(drop),
        Command::Metrics => ctx.metrics().map(drop),
        Command::Run => ctx.run().map(drop),
        Command::Unblind => ctx.unblind().map(drop),
        Command::Synth => ctx.synth().map(drop),
    }?;
    Ok(ctx.out)
}
