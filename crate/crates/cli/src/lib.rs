//! Command-line surface of the nodal solver.

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Result;
use clap::{Parser, Subcommand};
use serde::Serialize;

pub mod battery;
pub mod commands;
pub mod config;
pub mod json;
pub mod svg;

#[derive(Debug, Parser)]
#[command(name = "nodal", version, about = "Radial nodal solutions of Minkowski-curvature problems")]
pub struct Cli {
    /// Run configuration (JSON); defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Seed for randomized validation.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Find boundary value solutions for the configured classes.
    Solve,
    /// Count solutions over a grid of parameter values.
    Sweep,
    /// Twist check and fixed points of the periodic return map.
    Periodic,
    /// Run the invariant battery.
    Validate,
    /// Redraw plots from an existing solve output.
    Plot,
}

#[derive(Serialize)]
struct RunMeta<'a> {
    command: Command,
    version: &'a str,
    threads: usize,
    seed: u64,
    config: Option<String>,
    unix_time: u64,
}

/// Runs the parsed command and returns the exit status.
pub fn run(cli: &Cli) -> Result<i32> {
    let threads = if cli.threads == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        cli.threads
    };
    // fails only if a pool already exists, e.g. when called twice in tests
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    let status = match cli.command {
        Command::Plot => commands::plot(&cli.out)?,
        cmd => {
            let loaded = config::load(cli.config.as_deref())?;
            std::fs::create_dir_all(&cli.out)?;
            match cmd {
                Command::Solve => commands::solve(&loaded, &cli.out)?,
                Command::Sweep => commands::sweep(&loaded, &cli.out)?,
                Command::Periodic => commands::periodic(&loaded, &cli.out)?,
                Command::Validate => commands::validate(&loaded, &cli.out, cli.seed)?,
                Command::Plot => unreachable!(),
            }
        }
    };
    let meta = RunMeta {
        command: cli.command,
        version: env!("CARGO_PKG_VERSION"),
        threads,
        seed: cli.seed,
        config: cli.config.as_ref().map(|p| p.display().to_string()),
        unix_time: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    json::write(&cli.out.join("run_meta.json"), &meta)?;
    Ok(status)
}
