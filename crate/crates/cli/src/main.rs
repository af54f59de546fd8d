//! `vortexforge` command-line driver.
//!
//! Exit status: 0 on success, 1 for invalid configuration or input, 2 when a
//! solver did not converge.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use config::{Mode, RunConfig};
use run::Status;

#[derive(Parser, Debug)]
#[command(name = "vortexforge", version, about = "Vortex soliton pairs: solve, refine, verify, sweep")]
struct Args {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the `mode` key (minimize, mpass, refine, verify, sweep, quadcheck).
    #[arg(long)]
    mode: Option<Mode>,
    /// Overrides the `output_dir` key.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(args: &Args) -> Result<RunConfig> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?,
        None => String::new(),
    };
    let mut cfg = RunConfig::from_text(&text, args.mode)?;
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("VORTEXFORGE_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("VORTEXFORGE_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    Ok(())
}

/// Solver breakdowns count as non-convergence; everything else is bad input.
fn exit_code(err: &anyhow::Error) -> u8 {
    use vortexforge::Error;
    match err.downcast_ref::<Error>() {
        Some(
            Error::SolverFailure(_)
            | Error::PathDegeneration(_)
            | Error::SingularSystem(_)
            | Error::DegenerateProjection
            | Error::UndefinedMultiplier(_),
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = configure_threads().and_then(|_| load(&args)).and_then(|cfg| run::run(&cfg));
    match result {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::NotConverged) => {
            eprintln!("vortexforge: solver did not converge");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("vortexforge: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
