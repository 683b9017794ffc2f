use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use pwlmap::cli_io::{parse_config, run_command, Command};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Sub {
    Orbit,
    Classify,
    ReturnMap,
    Rotation,
    Scan1d,
    Scan2d,
    Basin,
    CriticalImages,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Orbit => Command::Orbit,
            Sub::Classify => Command::Classify,
            Sub::ReturnMap => Command::ReturnMap,
            Sub::Rotation => Command::Rotation,
            Sub::Scan1d => Command::Scan1d,
            Sub::Scan2d => Command::Scan2d,
            Sub::Basin => Command::Basin,
            Sub::CriticalImages => Command::CriticalImages,
        }
    }
}

/// Orbits, return maps, rotation numbers, classification and scans of
/// piecewise-linear discontinuous maps.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Command to run; overrides `command` in the config.
    #[arg(value_enum)]
    command: Option<Sub>,
    /// Run configuration in `key = value` format.
    #[arg(long)]
    config: PathBuf,
    /// Output file; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for scans (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for extra initial conditions.
    #[arg(long)]
    seed: Option<u64>,
}

fn run(args: Args) -> anyhow::Result<()> {
    let text = fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let mut cfg = parse_config(&text).with_context(|| format!("in {}", args.config.display()))?;
    if let Some(c) = args.command {
        cfg.command = Some(c.into());
    }
    if let Some(o) = args.out {
        cfg.out = Some(o);
    }
    if let Some(t) = args.threads {
        cfg.threads = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let report = run_command(&cfg)?;
    println!("{}", report.summary);
    for a in &report.artifacts {
        eprintln!("wrote {}", a.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
