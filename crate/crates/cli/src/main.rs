//! `dcproc`: simulate, predict, fit and compare duty-cycled contact processes.

mod cmd;
mod common;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::Result;
use clap::{Parser, Subcommand};
use dcproc_core::proc::DistSpec;
use dcproc_core::sched::DutyCycleSpec;
use log::info;
use serde_json::{json, Map};

use cmd::compare::CompareArgs;
use cmd::dc_joint::DcJointArgs;
use cmd::fit::FitArgs;
use cmd::predict::PredictArgs;
use cmd::simulate::SimulateArgs;
use cmd::synth::SynthArgs;
use cmd::Command;

#[derive(Debug, Parser)]
#[command(name = "dcproc", version, about)]
struct Cli {
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Root seed; every random draw of the run derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker-thread cap. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON config: a flat key map, a run config, or any output file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Repeat for more log detail.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Filter a contact process through a duty cycle by Monte Carlo.
    Simulate(SimulateArgs),
    /// Analytic prediction of the measured contact process.
    Predict(PredictArgs),
    /// Fit exponential and Pareto laws per node pair of a trace.
    Fit(FitArgs),
    /// Score a simulation against a prediction of the same configuration.
    Compare(CompareArgs),
    /// Sample a stochastic joint duty cycle and report its statistics.
    DcJoint(DcJointArgs),
    /// Generate a synthetic interval trace.
    Synth(SynthArgs),
}

pub(crate) fn parse_dist(s: &str) -> std::result::Result<DistSpec, String> {
    DistSpec::from_str(s).map_err(|e| e.to_string())
}

pub(crate) fn parse_dc(s: &str) -> std::result::Result<DutyCycleSpec, String> {
    DutyCycleSpec::from_str(s).map_err(|e| e.to_string())
}

fn execute<C: Command>(cli: &Cli, args: &C) -> Result<()> {
    let mut flags = args.cli_map()?;
    if let Some(seed) = cli.seed {
        flags.insert("seed".into(), json!(seed));
    }
    if let Some(out) = &cli.out {
        flags.insert("out".into(), json!(out));
    }
    let file = match &cli.config {
        Some(path) => config::read_file(path, C::NAME)?,
        None => Map::new(),
    };
    let cfg = config::resolve::<C::Params>(C::NAME, config::merge(file, flags)?)?;
    info!(
        "{} config: {}",
        C::NAME,
        serde_json::to_string(&cfg.to_value())?
    );
    C::run(&cfg)
}

fn dispatch(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        anyhow::ensure!(n > 0, "--threads must be positive");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    match &cli.command {
        Cmd::Simulate(a) => execute(cli, a),
        Cmd::Predict(a) => execute(cli, a),
        Cmd::Fit(a) => execute(cli, a),
        Cmd::Compare(a) => execute(cli, a),
        Cmd::DcJoint(a) => execute(cli, a),
        Cmd::Synth(a) => execute(cli, a),
    }
}

/// 2 when the simulator starved, 1 for anything else.
fn exit_code(e: &anyhow::Error) -> u8 {
    let starved = e
        .chain()
        .any(|c| matches!(c.downcast_ref(), Some(dcproc_core::Error::Starved { .. })));
    if starved {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are config errors; help and version are not errors.
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
