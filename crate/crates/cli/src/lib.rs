//! Command-line driver: reads a JSON run config, runs one subcommand and
//! writes `report.json`, `timings.json` and CSV series to an output directory.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 success with warnings,
//! 3 an inequality violated beyond tolerance, 4 configuration error.

pub mod commands;
pub mod config;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use commands::{execute, Command, Outputs};
pub use config::{parse_config, parse_config_with, ConfigError, RawConfig, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_WARN: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "dimest", version, about = "Dimension estimates for IFS attractors and expanding repellers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Singularity dimension from the zero of the pressure.
    DimS(Flags),
    /// Lyapunov dimension of every configured measure.
    DimL(Flags),
    /// Box-counting dimension of a chaos-game cloud.
    BoxDim(Flags),
    /// Packing dimension estimate from local dimensions.
    PackDim(Flags),
    /// Covering exponents t_n over word lengths and k.
    TnBound(Flags),
    /// Exponent of the stopping-family counts.
    ThetaSlope(Flags),
    /// Pressure over a grid of s.
    PressureCurve(Flags),
    /// Explicit ball cover of one cylinder, checked on samples.
    Cover(Flags),
    /// All dimension inequalities on the configured system.
    Verify(Flags),
}

#[derive(Debug, Clone, Args)]
pub struct Flags {
    /// JSON run config.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Also write CSV series.
    #[arg(long)]
    pub series: bool,
    /// Overrides the sampling seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the tolerance of the dimension solver.
    #[arg(long = "tol-s")]
    pub tol_s: Option<f64>,
    /// Overrides the budget of stored spectra per table.
    #[arg(long)]
    pub budget: Option<u64>,
}

impl Sub {
    pub fn split(&self) -> (Command, &Flags) {
        match self {
            Sub::DimS(f) => (Command::DimS, f),
            Sub::DimL(f) => (Command::DimL, f),
            Sub::BoxDim(f) => (Command::BoxDim, f),
            Sub::PackDim(f) => (Command::PackDim, f),
            Sub::TnBound(f) => (Command::TnBound, f),
            Sub::ThetaSlope(f) => (Command::ThetaSlope, f),
            Sub::PressureCurve(f) => (Command::PressureCurve, f),
            Sub::Cover(f) => (Command::Cover, f),
            Sub::Verify(f) => (Command::Verify, f),
        }
    }
}

/// Reads and validates the config with command-line overrides applied.
pub fn load_config(flags: &Flags) -> Result<RunConfig, ConfigError> {
    let label = flags.config.display().to_string();
    let src = fs::read_to_string(&flags.config)
        .map_err(|e| ConfigError { path: label.clone(), line: None, column: None, message: e.to_string() })?;
    parse_config_with(&src, &label, |raw| {
        if let Some(s) = flags.seed {
            raw.sampling.seed = s;
        }
        if let Some(t) = flags.tol_s {
            raw.solver.tol_s = Some(t);
        }
        if let Some(b) = flags.budget {
            raw.solver.budget = b;
        }
    })
}

fn write_outputs(dir: &Path, out: &Outputs) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut report = serde_json::to_string_pretty(&out.report).map_err(std::io::Error::other)?;
    report.push('\n');
    fs::write(dir.join("report.json"), report)?;
    let timings: serde_json::Map<String, serde_json::Value> =
        out.timings.iter().map(|(k, v)| (k.clone(), serde_json::json!((v * 1e3).round() / 1e3))).collect();
    let mut t = serde_json::to_string_pretty(&serde_json::json!({ "milliseconds": timings })).map_err(std::io::Error::other)?;
    t.push('\n');
    fs::write(dir.join("timings.json"), t)?;
    for (name, body) in &out.files {
        fs::write(dir.join(name), body)?;
    }
    Ok(())
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let (cmd, flags) = cli.command.split();
    let cfg = match load_config(flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(n) = flags.threads {
        if n == 0 {
            eprintln!("config error: --threads must be positive");
            return EXIT_CONFIG;
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out = match execute(cmd, &cfg, flags.series) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{}: {e}", cmd.name());
            return EXIT_FAILURE;
        }
    };
    if let Err(e) = write_outputs(&flags.out, &out) {
        eprintln!("cannot write outputs to {}: {e}", flags.out.display());
        return EXIT_FAILURE;
    }
    for w in &out.report.warnings {
        eprintln!("warning: {w}");
    }
    for v in out.report.verdicts.iter().filter(|v| v.status == report::VerdictStatus::Fail) {
        eprintln!("violation: {} ({}), slack {:.4}", v.check, v.measure.as_deref().unwrap_or("-"), v.slack.unwrap_or(f64::NAN));
    }
    println!("{}: {:?}, report in {}", cmd.name(), out.report.status, flags.out.join("report.json").display());
    out.report.status.exit_code()
}
