//! Run configuration: TOML files and command-line flags share one schema.
//!
//! ```toml
//! command = "pe-exact"
//! seed = 7
//! out = "pe.csv"
//! workers = 4
//!
//! [params]
//! unitary = "u.txt"
//! n_a = 1
//! ```
//!
//! Every key under `[params]` is also a flag (`n_a` becomes `--n-a`). A flag
//! given on the command line replaces the file value.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    PeExact,
    PeSample,
    PeTypical,
    PeBounds,
    HaarMc,
    Thm1Check,
    Thm1Factorize,
    MpuPe,
    SpinchainRun,
    Selftest,
}

impl fmt::Display for CommandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CommandName::PeExact => "pe-exact",
            CommandName::PeSample => "pe-sample",
            CommandName::PeTypical => "pe-typical",
            CommandName::PeBounds => "pe-bounds",
            CommandName::HaarMc => "haar-mc",
            CommandName::Thm1Check => "thm1-check",
            CommandName::Thm1Factorize => "thm1-factorize",
            CommandName::MpuPe => "mpu-pe",
            CommandName::SpinchainRun => "spinchain-run",
            CommandName::Selftest => "selftest",
        })
    }
}

macro_rules! param_block {
    ($(#[$meta:meta])* $name:ident { $( $(#[doc = $doc:literal])* $field:ident : $ty:ty ),* $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Default, PartialEq, clap::Args, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $(
                $(#[doc = $doc])*
                #[arg(long)]
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }

        impl $name {
            /// Values set here win; the rest come from `file`.
            #[allow(unused_variables)]
            pub fn overlay(self, file: Self) -> Self {
                Self { $( $field: self.$field.or(file.$field), )* }
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Xyz,
    Tfim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MpuModeArg {
    Finite,
    Thermodynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MpuExample {
    Shift,
    Clifford,
    TLayer,
}

param_block!(PeExactParams {
    /// Unitary in the plain-text matrix format.
    unitary: PathBuf,
    /// Use a Haar-random unitary on this many qubits instead (seeded).
    haar: usize,
    /// Qubits in subsystem A, counted from the left; default N/2.
    n_a: usize,
});

param_block!(PeSampleParams {
    /// Unitary in the plain-text matrix format.
    unitary: PathBuf,
    /// Use a Haar-random unitary on this many qubits instead (seeded).
    haar: usize,
    /// Qubits in subsystem A; default N/2.
    n_a: usize,
    /// Fixed number of Pauli strings; overrides the SEM rule.
    samples: usize,
    /// Stop when 1.96 * SEM falls below this (default 0.02).
    sem_target: f64,
    /// Cap on the number of Pauli strings under the SEM rule.
    max_samples: usize,
});

param_block!(PeTypicalParams {
    /// Total Hilbert-space dimension.
    d: usize,
    /// Dimension of subsystem A.
    d_a: usize,
});

param_block!(PeBoundsParams {
    /// Unitary in the plain-text matrix format.
    unitary: PathBuf,
    /// Use a Haar-random unitary on this many qubits instead (seeded).
    haar: usize,
    /// Qubits in subsystem A; default N/2.
    n_a: usize,
});

param_block!(HaarMcParams {
    /// Number of qubits.
    n: usize,
    /// Qubits in subsystem A; default N/2.
    n_a: usize,
    /// Number of Haar unitaries (default 200).
    samples: usize,
});

param_block!(Thm1CheckParams {
    /// Unitary in the plain-text matrix format.
    unitary: PathBuf,
    /// Use a Haar-random unitary on this many qubits instead (seeded).
    haar: usize,
    /// Qubits in subsystem A; default N/2.
    n_a: usize,
    /// Threshold on the second Schmidt coefficient (default 1e-10).
    tol: f64,
});

param_block!(Thm1FactorizeParams {
    /// Unitary in the plain-text matrix format.
    unitary: PathBuf,
    /// Use a Haar-random unitary on this many qubits instead (seeded).
    haar: usize,
    /// Qubits in subsystem A; default N/2.
    n_a: usize,
    /// Threshold on the second Schmidt coefficient (default 1e-10).
    tol: f64,
    /// Where to write the phase, V, W and the tableau.
    factors: PathBuf,
});

param_block!(MpuPeParams {
    /// Site tensor file: chi, then chi*chi*4 complex entries over (l, r, out, in).
    tensor: PathBuf,
    /// Built-in tensor instead of a file.
    example: MpuExample,
    /// Sites in A (finite mode).
    n_a: usize,
    /// Sites in B (finite mode).
    n_b: usize,
    /// finite or thermodynamic (default finite).
    mode: MpuModeArg,
});

param_block!(SpinchainParams {
    /// xyz (sweeps Jz) or tfim (sweeps h).
    model: Model,
    /// Sweep values, e.g. Jz=0:0.25:1 (start:step:stop) or h=0,0.5.
    sweep: String,
    /// Number of sites.
    n: usize,
    /// exact or sampled P_E at each time step (default exact).
    mode: SweepMode,
    /// Time step (default 0.2).
    dt: f64,
    /// Stop once 1.96 sigma / sqrt(N_t) is below this for every observable (default 0.02).
    sem_threshold: f64,
    /// Minimum number of time steps (default 25).
    n_min: usize,
    /// Maximum number of time steps (default 5000).
    max_steps: usize,
    /// XYZ: J_x (default 0.75).
    jx: f64,
    /// XYZ: J_y (default 0.25).
    jy: f64,
    /// XYZ: field along z (default 0.5).
    h: f64,
    /// TFIM: ZZ coupling (default 1).
    j: f64,
    /// TFIM: transverse field (default 1).
    g: f64,
    /// Sampled mode: fixed Pauli strings per step.
    samples: usize,
    /// Sampled mode: per-step 1.96 * SEM target (default 0.02).
    sem_target: f64,
    /// Sampled mode: cap on Pauli strings per step.
    max_samples: usize,
});

param_block!(SelftestParams {});

/// Parameters of one command.
#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    PeExact(PeExactParams),
    PeSample(PeSampleParams),
    PeTypical(PeTypicalParams),
    PeBounds(PeBoundsParams),
    HaarMc(HaarMcParams),
    Thm1Check(Thm1CheckParams),
    Thm1Factorize(Thm1FactorizeParams),
    MpuPe(MpuPeParams),
    SpinchainRun(SpinchainParams),
    Selftest(SelftestParams),
}

macro_rules! params_dispatch {
    ($($variant:ident),*) => {
        impl Params {
            pub fn command(&self) -> CommandName {
                match self { $(Params::$variant(_) => CommandName::$variant,)* }
            }

            fn from_table(name: CommandName, table: toml::Table) -> Result<Self, toml::de::Error> {
                Ok(match name { $(CommandName::$variant => Params::$variant(table.try_into()?),)* })
            }

            /// `self` comes from flags, `file` from the config file.
            fn overlay(self, file: Self) -> Self {
                match (self, file) {
                    $((Params::$variant(a), Params::$variant(b)) => Params::$variant(a.overlay(b)),)*
                    (a, _) => a,
                }
            }

            fn to_toml(&self) -> String {
                match self { $(Params::$variant(p) => toml::to_string(p),)* }
                    .expect("parameter blocks serialize")
            }
        }
    };
}

params_dispatch!(
    PeExact,
    PeSample,
    PeTypical,
    PeBounds,
    HaarMc,
    Thm1Check,
    Thm1Factorize,
    MpuPe,
    SpinchainRun,
    Selftest
);

/// Settings outside `[params]`, as given on the command line.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Common {
    /// TOML config file; flags given alongside override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for every random draw (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    command: CommandName,
    seed: Option<u64>,
    out: Option<PathBuf>,
    workers: Option<usize>,
    #[serde(default)]
    params: toml::Table,
}

/// A fully resolved run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: Params,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl RunConfig {
    /// SHA-256 over the command, seed and parameters. The output path and
    /// worker count do not change results and are left out.
    pub fn digest(&self) -> String {
        let text = format!("command = \"{}\"\nseed = {}\n{}", self.params.command(), self.seed, self.params.to_toml());
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn load_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::config(format!("config {}: {e}", path.display())))
}

/// Merges flags over an optional config file. With a file, its `command`
/// must agree with the subcommand.
pub fn resolve(flags: Params, common: Common, workers: Option<usize>) -> Result<RunConfig, CliError> {
    let Some(path) = common.config else {
        return Ok(RunConfig {
            params: flags,
            seed: common.seed.unwrap_or(0),
            out: common.out,
            workers,
        });
    };
    let file = load_file(&path)?;
    if file.command != flags.command() {
        return Err(CliError::config(format!(
            "config {} is for command {}, not {}",
            path.display(),
            file.command,
            flags.command()
        )));
    }
    let from_file = Params::from_table(file.command, file.params)
        .map_err(|e| CliError::config(format!("config {} [params]: {e}", path.display())))?;
    Ok(RunConfig {
        params: flags.overlay(from_file),
        seed: common.seed.or(file.seed).unwrap_or(0),
        out: common.out.or(file.out),
        workers: workers.or(file.workers),
    })
}

/// `run --config file`: everything comes from the file.
pub fn from_file(path: &Path, workers: Option<usize>) -> Result<RunConfig, CliError> {
    let file = load_file(path)?;
    let params = Params::from_table(file.command, file.params)
        .map_err(|e| CliError::config(format!("config {} [params]: {e}", path.display())))?;
    Ok(RunConfig {
        params,
        seed: file.seed.unwrap_or(0),
        out: file.out,
        workers: workers.or(file.workers),
    })
}

/// `Jz=0:0.25:1` or `h=0,0.5`; the name, when present, must match `expected`.
pub fn parse_sweep(spec: &str, expected: &str) -> Result<Vec<f64>, String> {
    let body = match spec.split_once('=') {
        Some((name, rest)) => {
            if !name.trim().eq_ignore_ascii_case(expected) {
                return Err(format!("sweep variable {:?} does not match the model, expected {expected}", name.trim()));
            }
            rest
        }
        None => spec,
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("bad number {:?} in sweep {spec:?}", s.trim()));
    let values = if body.contains(':') {
        let parts: Vec<&str> = body.split(':').collect();
        let [start, step, stop] = parts[..] else {
            return Err(format!("range must be start:step:stop, got {body:?}"));
        };
        let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
        if !(step > 0.0) || stop < start {
            return Err(format!("empty or unbounded range {body:?}"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| start + k as f64 * step).collect()
    } else {
        body.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(format!("no usable values in sweep {spec:?}"));
    }
    Ok(values)
}
