//! Command-line front end for `vortexlab`.
//!
//! Every subcommand reads an optional sectioned configuration file, writes
//! CSV or JSON into the output directory and finishes with `manifest.json`
//! listing each file with its SHA-256.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use vortexlab::device::DeviceError;
use vortexlab::energetics::EnergeticsError;
use vortexlab::fitting::FitError;
use vortexlab::jumps::JumpError;
use vortexlab::rabi::RabiError;
use vortexlab::tunneling::TunnelError;

mod commands;
pub mod config;
pub mod input;
pub mod output;

pub use config::RunConfig;

pub const SEED_ENV: &str = "VORTEXLAB_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("input: {0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
    #[error("{kind}: {message}")]
    Numerical { kind: &'static str, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical { .. } => 2,
            _ => 1,
        }
    }

    fn numerical(kind: &'static str, e: impl std::fmt::Display) -> Self {
        CliError::Numerical {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<DeviceError> for CliError {
    fn from(e: DeviceError) -> Self {
        match e {
            DeviceError::DegenerateFit(_) => CliError::numerical("device", e),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<RabiError> for CliError {
    fn from(e: RabiError) -> Self {
        match e {
            RabiError::InvalidParams(_) | RabiError::InvalidOrientation { .. } => CliError::Config(e.to_string()),
            _ => CliError::numerical("rabi", e),
        }
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::InvalidData(_) => CliError::Config(e.to_string()),
            _ => CliError::numerical("fitting", e),
        }
    }
}

impl From<EnergeticsError> for CliError {
    fn from(e: EnergeticsError) -> Self {
        match e {
            EnergeticsError::InvalidSite(_) | EnergeticsError::InvalidInput(_) => CliError::Config(e.to_string()),
            _ => CliError::numerical("energetics", e),
        }
    }
}

impl From<TunnelError> for CliError {
    fn from(e: TunnelError) -> Self {
        match e {
            TunnelError::Energetics(inner) => inner.into(),
            TunnelError::InvalidGrid(_)
            | TunnelError::InvalidModel(_)
            | TunnelError::InvalidInput(_)
            | TunnelError::PotentialSize { .. }
            | TunnelError::TooManyLevels(_) => CliError::Config(e.to_string()),
            _ => CliError::numerical("tunneling", e),
        }
    }
}

impl From<JumpError> for CliError {
    fn from(e: JumpError) -> Self {
        match e {
            JumpError::InvalidParams(_) => CliError::Config(e.to_string()),
            JumpError::Fit(inner) => inner.into(),
            _ => CliError::numerical("jumps", e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "vortexlab", version, about = "Vortex qubit modelling and analysis")]
pub struct Cli {
    /// Sectioned configuration file
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, short, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for sweeps and batches (default: logical cores)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output format of analysis results
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derived device scales and entry thresholds
    Scales,
    /// Dressed transitions over the field sweep
    Spectrum,
    /// Dispersive shift over the field sweep, exact and perturbative
    Chi,
    /// Fit a qubit spectrum (hyperbola, or joint Rabi model with --joint)
    FitSpectrum {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        joint: bool,
        #[arg(long, default_value_t = 20)]
        n_fock: usize,
    },
    /// Exponential energy decay
    FitDecay {
        #[arg(long)]
        input: PathBuf,
    },
    /// Exponential Hahn-echo decay
    FitEcho {
        #[arg(long)]
        input: PathBuf,
    },
    /// Two-tone Ramsey fringes with a shared decay
    FitRamsey {
        #[arg(long)]
        input: PathBuf,
    },
    /// Rabi frequency against drive amplitude
    FitRabi {
        #[arg(long)]
        input: PathBuf,
    },
    /// Potential landscape of the strip with its pinning sites
    Landscape {
        #[arg(long = "field-uT", default_value_t = 0.0)]
        field_ut: f64,
        #[arg(long, default_value_t = 200)]
        nx: usize,
        #[arg(long, default_value_t = 41)]
        ny: usize,
        #[arg(long = "y-min-nm", default_value_t = -50.0)]
        y_min_nm: f64,
        #[arg(long = "y-max-nm", default_value_t = 50.0)]
        y_max_nm: f64,
    },
    /// Gyromagnetic ratio over well centre and separation
    GammaMap {
        #[arg(long, default_value_t = 200)]
        x_points: usize,
        #[arg(long, default_value_t = 200)]
        delta_points: usize,
        #[arg(long = "delta-min-nm", default_value_t = 5.0)]
        delta_min_nm: f64,
        #[arg(long = "delta-max-nm", default_value_t = 50.0)]
        delta_max_nm: f64,
    },
    /// Interaction of two pinned vortices
    Pair,
    /// Qubit frequency of a pinned double well over the field sweep
    Tunnel,
    /// Synthetic single-shot readout record
    SynthJumps,
    /// Latching filter, dwell statistics and temperature of a readout record
    AnalyzeJumps {
        #[arg(long)]
        input: PathBuf,
        /// Qubit frequency for the temperature (default: f_q0 of [qrm])
        #[arg(long = "f-q-GHz")]
        f_q_ghz: Option<f64>,
        #[arg(long, default_value_t = 1.5)]
        n_sigma: f64,
    },
    /// Fit every spectrum CSV in a directory
    BatchFit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        joint: bool,
        #[arg(long, default_value_t = 20)]
        n_fock: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Scales => "scales",
            Command::Spectrum => "spectrum",
            Command::Chi => "chi",
            Command::FitSpectrum { .. } => "fit-spectrum",
            Command::FitDecay { .. } => "fit-decay",
            Command::FitEcho { .. } => "fit-echo",
            Command::FitRamsey { .. } => "fit-ramsey",
            Command::FitRabi { .. } => "fit-rabi",
            Command::Landscape { .. } => "landscape",
            Command::GammaMap { .. } => "gamma-map",
            Command::Pair => "pair",
            Command::Tunnel => "tunnel",
            Command::SynthJumps => "synth-jumps",
            Command::AnalyzeJumps { .. } => "analyze-jumps",
            Command::BatchFit { .. } => "batch-fit",
        }
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    subcommand: &'a str,
    kind: &'a str,
    message: String,
    exit_code: i32,
}

fn resolve_seed(cfg: &RunConfig) -> Result<u64, CliError> {
    if let Ok(v) = std::env::var(SEED_ENV) {
        return v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{SEED_ENV} = `{v}` is not an unsigned integer")));
    }
    match cfg.section("jumps").map(|s| s.count("seed")).transpose()? {
        Some(Some(s)) => Ok(s as u64),
        _ => Ok(0),
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let (cfg, raw) = match &cli.config {
        Some(p) => {
            let bytes = std::fs::read(p).map_err(|e| CliError::Io(format!("cannot read {}: {e}", p.display())))?;
            let text = String::from_utf8(bytes.clone())
                .map_err(|_| CliError::Config(format!("{} is not UTF-8", p.display())))?;
            (RunConfig::parse(&text)?, Some(bytes))
        }
        None => (RunConfig::default(), None),
    };
    let seed = resolve_seed(&cfg)?;
    let mut out = output::OutputDir::create(&cli.out)?;
    let result = commands::dispatch(&cli.command, &cfg, seed, cli.format, &mut out);
    let config = cli.config.as_deref().zip(raw.as_deref());
    if let Err(CliError::Numerical { kind, message }) = &result {
        out.write_json(
            "error.json",
            &ErrorReport {
                subcommand: cli.command.name(),
                kind,
                message: message.clone(),
                exit_code: 2,
            },
        )?;
    }
    if matches!(result, Ok(()) | Err(CliError::Numerical { .. })) {
        out.finish(cli.command.name(), config.map(|(p, b)| (p as &Path, b)), seed)?;
    }
    result
}

/// Parses arguments and runs one subcommand. Returns the process exit code:
/// 0 on success, 1 for usage or configuration errors, 2 for numerical
/// failures (reported in `error.json`).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("vortexlab: cannot start worker pool: {e}");
            return 1;
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("vortexlab {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}
