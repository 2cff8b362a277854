//! `barriers <module> <verb> [--config FILE] [--seed N] [--out DIR]`

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::Parser;

use crate::commands::{dispatch, Context};
use crate::config::{parse_config, ExperimentConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "barriers",
    version,
    about = "Barrier regions, Grassmannian geometry and harmonic-map flows"
)]
pub struct Args {
    /// grassmann | sphere | quadric | flow | gauss
    pub module: String,
    /// geodesic | tmax | region | disconnect | roundtrip | chart | run | audit
    pub verb: String,
    /// TOML experiment configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "barriers-out")]
    pub out: PathBuf,
    /// Independent flow runs with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
}

fn load(args: &Args) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn execute(args: Args) -> Result<(), CliError> {
    if args.runs == 0 {
        return Err(CliError::usage("--runs must be at least 1"));
    }
    let cfg = load(&args)?;
    let ctx = Context {
        cfg,
        out: args.out,
        runs: args.runs,
    };
    dispatch(&args.module, &args.verb, &ctx)
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                use std::io::Write;
                let _ = write!(std::io::stdout(), "{e}");
                return 0;
            }
            _ => {
                let first = e
                    .to_string()
                    .lines()
                    .next()
                    .unwrap_or("invalid arguments")
                    .trim_start_matches("error: ")
                    .to_string();
                let err = CliError::usage(first);
                eprintln!("{err}");
                return err.code;
            }
        },
    };
    match execute(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.code
        }
    }
}
