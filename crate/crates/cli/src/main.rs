//! `paulient`: command-line driver for the paulient library.
//!
//! Exit status: 0 on success, 1 when a computation fails, 2 when the
//! configuration or an input file is invalid.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{
    Common, HaarMcParams, MpuPeParams, Params, PeBoundsParams, PeExactParams, PeSampleParams, PeTypicalParams,
    RunConfig, SelftestParams, SpinchainParams, Thm1CheckParams, Thm1FactorizeParams,
};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Compute(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn compute(msg: impl ToString) -> Self {
        CliError::Compute(msg.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Compute(m) => write!(f, "computation failed: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "paulient", version, about = "Pauli-entangling power and nonlocal magic toolkit")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Pauli-entangling power of a unitary.
    #[command(subcommand)]
    Pe(PeCmd),
    /// Product-preservation test and local/Clifford factorization.
    #[command(subcommand)]
    Thm1(Thm1Cmd),
    /// Matrix product unitaries.
    #[command(subcommand)]
    Mpu(MpuCmd),
    /// Spin-chain long-time averages.
    #[command(subcommand)]
    Spinchain(SpinchainCmd),
    /// Quick property checks over every module.
    Selftest {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        p: SelftestParams,
    },
    /// Run a config file; its `command` key picks the operation.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum PeCmd {
    /// Exact average over all Pauli strings.
    Exact {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        p: PeExactParams,
    },
    /// Monte Carlo over Pauli strings.
    Sample {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        p: PeSampleParams,
    },
    /// Closed-form Haar average.
    Typical {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        p: PeTypicalParams,
    },
    /// Exact value next to the local-magic upper bounds.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        p: PeBoundsParams,
    },
    /// Mean exact value over Haar-random unitaries.
    HaarMc {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        p: HaarMcParams,
    },
}

#[derive(Subcommand)]
enum Thm1Cmd {
    /// Does U† P U stay a product for every Pauli string P?
    Check {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        p: Thm1CheckParams,
    },
    /// Write U† = phase (V ⊗ W) C.
    Factorize {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        p: Thm1FactorizeParams,
    },
}

#[derive(Subcommand)]
enum MpuCmd {
    /// Pauli-entangling power from transfer matrices.
    Pe {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        p: MpuPeParams,
    },
}

#[derive(Subcommand)]
enum SpinchainCmd {
    /// Sweep one coupling and record long-time averages.
    Run {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        p: SpinchainParams,
    },
}

fn resolve(cmd: Cmd, workers: Option<usize>) -> Result<RunConfig, CliError> {
    let (params, common) = match cmd {
        Cmd::Run { config } => return config::from_file(&config, workers),
        Cmd::Selftest { common, p } => (Params::Selftest(p), common),
        Cmd::Pe(PeCmd::Exact { common, p }) => (Params::PeExact(p), common),
        Cmd::Pe(PeCmd::Sample { common, p }) => (Params::PeSample(p), common),
        Cmd::Pe(PeCmd::Typical { common, p }) => (Params::PeTypical(p), common),
        Cmd::Pe(PeCmd::Bounds { common, p }) => (Params::PeBounds(p), common),
        Cmd::Pe(PeCmd::HaarMc { common, p }) => (Params::HaarMc(p), common),
        Cmd::Thm1(Thm1Cmd::Check { common, p }) => (Params::Thm1Check(p), common),
        Cmd::Thm1(Thm1Cmd::Factorize { common, p }) => (Params::Thm1Factorize(p), common),
        Cmd::Mpu(MpuCmd::Pe { common, p }) => (Params::MpuPe(p), common),
        Cmd::Spinchain(SpinchainCmd::Run { common, p }) => (Params::SpinchainRun(p), common),
    };
    config::resolve(params, common, workers)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve(cli.cmd, cli.workers)?;
    if let Some(w) = cfg.workers {
        if w == 0 {
            return Err(CliError::config("workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::config(format!("cannot start {w} workers: {e}")))?;
    }
    commands::execute(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("paulient: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
