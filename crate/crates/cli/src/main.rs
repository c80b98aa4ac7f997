//! `retromark`: design and evaluate retrodirective metalens radar markers.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or inputs; nothing was computed.
    Validation(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid configuration: {m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "retromark", version, about = "Retrodirective metalens radar-marker toolkit")]
struct Cli {
    /// TOML experiment file; built-in defaults apply to anything it omits.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for every random draw (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the parallel kernels.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quantize the lens phase profile onto the unit-cell library.
    Synthesize,
    /// On-axis intensity behind the lens.
    FocusScan {
        /// Also write the x–z intensity slice.
        #[arg(long)]
        slice: bool,
    },
    /// Monostatic RCS versus azimuth for the tag and the bare patch plane.
    RcsSweep,
    /// Radar-equation report: gains, detection range, range factors.
    Link,
    /// Convert received powers to RCS with a sphere calibration.
    Calibrate,
    /// Simulate and process an FMCW MIMO frame into a range–azimuth map.
    Fmcw,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).map_err(CliError::Validation)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let ctx = commands::Context {
        out_dir: commands::resolve_out_dir(cli.out.as_deref(), &cfg),
        seed: cfg.seed,
    };
    match cli.command {
        Command::Synthesize => commands::synthesize(&cfg, &ctx),
        Command::FocusScan { slice } => commands::focus_scan(&cfg, &ctx, slice),
        Command::RcsSweep => commands::rcs_sweep(&cfg, &ctx),
        Command::Link => commands::link_budget(&cfg, &ctx),
        Command::Calibrate => commands::calibrate(&cfg, &ctx),
        Command::Fmcw => commands::fmcw_run(&cfg, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("retromark: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
