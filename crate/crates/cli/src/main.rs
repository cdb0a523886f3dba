//! Scenario-driven front end: parse a declarative config, dispatch to one
//! of the five analysis pipelines, and emit deterministic CSV/JSON
//! outputs plus a run manifest.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.
//! `SPINMECH_OUT` overrides the output directory.

#![allow(non_snake_case)]

mod config;
mod error;
mod output;
mod pipelines;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_scenario, ScenarioKind};
use error::CliError;
use output::OutputDir;

#[derive(Parser)]
#[command(
    name = "spinmech",
    version,
    about = "Spin-mechanical sensing workbench: resonances, calibration, force maps, sensitivities and inertial imaging"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config (TOML with unit-suffixed keys).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overridden by SPINMECH_OUT).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed override (replaces the config's seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Parse and validate the config, then exit without running.
    #[arg(long)]
    validate_only: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Spin resonances and ODMR spectra under stress and field.
    Resonances(RunArgs),
    /// Synthetic uniaxial-stress calibration and force inference.
    Calibrate(RunArgs),
    /// Nanopillar-array force-vector imaging.
    ForceMap(RunArgs),
    /// Single-pillar force sensitivity and design contours.
    Sensitivity(RunArgs),
    /// Nanobeam inertial detection and mass imaging.
    Inertial(RunArgs),
}

impl Command {
    fn kind(&self) -> ScenarioKind {
        match self {
            Command::Resonances(_) => ScenarioKind::Resonances,
            Command::Calibrate(_) => ScenarioKind::Calibrate,
            Command::ForceMap(_) => ScenarioKind::ForceMap,
            Command::Sensitivity(_) => ScenarioKind::Sensitivity,
            Command::Inertial(_) => ScenarioKind::Inertial,
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Resonances(a)
            | Command::Calibrate(a)
            | Command::ForceMap(a)
            | Command::Sensitivity(a)
            | Command::Inertial(a) => a,
        }
    }
}

fn execute(command: &Command) -> Result<(), CliError> {
    let args = command.args();
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", args.config.display())))?;
    let cfg = parse_scenario(&text)?;
    if cfg.kind != command.kind() {
        return Err(CliError::config(format!(
            "config kind \"{}\" does not match the \"{}\" subcommand",
            cfg.kind.name(),
            command.kind().name()
        )));
    }
    if args.validate_only {
        println!("config ok: kind = {}", cfg.kind.name());
        return Ok(());
    }

    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let out_dir = std::env::var_os("SPINMECH_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| args.out.clone());
    let mut out = OutputDir::create(&out_dir)?;

    pipelines::run(&cfg, &mut out, seed)?;

    for w in out.warnings() {
        eprintln!("warning: {w}");
    }
    let dir_display = out.path().display().to_string();
    out.finish(cfg.kind.name(), &text, args.seed.or(cfg.seed))?;
    println!("ok: outputs written to {dir_display}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
