//! Command-line front end. Every subcommand renders one report, either as
//! commented CSV or as a JSON envelope that echoes the full run configuration.

mod commands;
pub mod output;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::devices::SplitterKind;
use crate::error::Result;
use crate::fock::FockState;
use crate::fringes::PhaseGrid;

pub use output::{Cell, Envelope, Format, Report, Table};

/// Environment variable naming the directory of cached classical bounds.
pub const GOLDEN_DIR_ENV: &str = "MULTIPORT_GOLDEN_DIR";

#[derive(Debug, Parser)]
#[command(name = "multiport", version, about = "Multiport Fock-state interferometry toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Embed the wall-clock runtime (makes reruns differ byte-wise).
    #[arg(long, global = true)]
    pub timing: bool,
}

/// Everything that determines a run's output; echoed into every file. The
/// destination path is left out so a rerun written elsewhere is byte-identical.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub command: Command,
    pub format: Format,
    pub timing: bool,
}

impl From<&Cli> for RunConfig {
    fn from(cli: &Cli) -> Self {
        RunConfig {
            command: cli.command.clone(),
            format: cli.format,
            timing: cli.timing,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Unitarity and involution residuals of the device matrices.
    DevicesCheck(DevicesCheckArgs),
    /// Output fringe patterns over a phase grid.
    Fringes(FringesArgs),
    /// N-fold visibilities against the classical coherent-state bound.
    Visibility(VisibilityArgs),
    /// Classical and quantum Fisher information over a phase grid.
    Fisher(FisherArgs),
    /// Monte-Carlo run of the Bayesian phase-estimation protocol.
    Protocol(ProtocolArgs),
    /// Quantum Fisher matrix and bounds for simultaneous phases.
    Multiparam(MultiparamArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::DevicesCheck(_) => "devices-check",
            Command::Fringes(_) => "fringes",
            Command::Visibility(_) => "visibility",
            Command::Fisher(_) => "fisher",
            Command::Protocol(_) => "protocol",
            Command::Multiparam(_) => "multiparam",
        }
    }

    fn seed(&self) -> Option<u64> {
        match self {
            Command::Protocol(a) => Some(a.seed),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct DevicesCheckArgs {
    /// Perturbs one tritter entry before checking.
    #[arg(long, hide = true)]
    pub corrupt: bool,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct FringesArgs {
    #[arg(long, default_value = "tritter")]
    pub device: SplitterKind,
    /// Input occupations, e.g. `1,1,1`; one photon per mode by default.
    #[arg(long)]
    pub input: Option<FockState>,
    /// Output occupations, or `all`.
    #[arg(long, default_value = "all")]
    pub outcome: String,
    /// Half-open phase grid `start:stop:count`; angles accept `pi` forms.
    #[arg(long, default_value = "0:2pi:720")]
    pub grid: PhaseGrid,
    /// Compare against the tabulated closed forms; exits 1 past 1e-9.
    #[arg(long)]
    pub check_closed_form: bool,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct VisibilityArgs {
    #[arg(long, default_value = "tritter")]
    pub device: SplitterKind,
    #[arg(long)]
    pub input: Option<FockState>,
    /// Directory of cached bounds (`gamma_<device>.json`); falls back to
    /// the environment variable, then to computing without a cache.
    #[arg(long)]
    pub golden_dir: Option<PathBuf>,
    /// Recompute every bound and rewrite the cache.
    #[arg(long)]
    pub refresh: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeSelection {
    Fock,
    CoherentWithReference,
    CoherentPhaseAveraged,
    All,
}

impl ProbeSelection {
    fn fock(self) -> bool {
        matches!(self, ProbeSelection::Fock | ProbeSelection::All)
    }

    fn with_reference(self) -> bool {
        matches!(self, ProbeSelection::CoherentWithReference | ProbeSelection::All)
    }

    fn phase_averaged(self) -> bool {
        matches!(self, ProbeSelection::CoherentPhaseAveraged | ProbeSelection::All)
    }
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct FisherArgs {
    #[arg(long, default_value = "tritter")]
    pub device: SplitterKind,
    #[arg(long)]
    pub input: Option<FockState>,
    #[arg(long, value_enum, default_value_t = ProbeSelection::All)]
    pub probe: ProbeSelection,
    #[arg(long, default_value = "0:2pi:720")]
    pub grid: PhaseGrid,
    /// Mode carrying the phase, counted from 1; the last mode by default.
    #[arg(long)]
    pub phase_mode: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSelection {
    Adaptive,
    Nonadaptive,
    Both,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct ProtocolArgs {
    /// Measurements per trial.
    #[arg(long = "M", default_value_t = 10_000)]
    pub measurements: u64,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Number of true phases, at the cell midpoints of the phase interval.
    #[arg(long, default_value_t = 24, conflicts_with = "grid")]
    pub phases: usize,
    /// Explicit phase grid `start:stop:count` instead of `--phases`.
    #[arg(long)]
    pub grid: Option<PhaseGrid>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeSelection::Both)]
    pub mode: ModeSelection,
    /// Use M = 100000 measurements.
    #[arg(long)]
    pub full: bool,
    /// Plain three blocks with the working point at 2pi/3, no re-centring.
    #[arg(long)]
    pub three_step: bool,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct MultiparamArgs {
    #[arg(long, default_value = "tritter")]
    pub device: SplitterKind,
    #[arg(long)]
    pub input: Option<FockState>,
    /// Phase modes counted from 1; defaults to the last two modes.
    #[arg(long, value_delimiter = ',')]
    pub modes: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value_t = ProbeSelection::All)]
    pub probe: ProbeSelection,
    #[arg(long = "M", default_value_t = 1)]
    pub measurements: u64,
    /// Phase values at which the SLDs are evaluated; zeros by default.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lambda: Option<Vec<f64>>,
}

/// Rendered output of a run and whether its self-checks passed.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub text: String,
    pub failure: Option<String>,
}

/// Runs the command and renders its report.
pub fn execute(cli: &Cli) -> Result<RunOutput> {
    let config = RunConfig::from(cli);
    let started = Instant::now();
    let report = commands::dispatch(&cli.command)?;
    let envelope = Envelope {
        command: cli.command.name(),
        config: serde_json::to_value(&config)?,
        seed: cli.command.seed(),
        runtime_seconds: cli.timing.then(|| started.elapsed().as_secs_f64()),
    };
    Ok(RunOutput {
        text: envelope.render(&report, cli.format),
        failure: report.failure,
    })
}

/// Entry point of the binary: exit 0 on success, 1 on a failed self-check,
/// 2 on invalid input or a runtime error.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &output.text),
        None => std::io::stdout().lock().write_all(output.text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match output.failure {
        Some(msg) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        None => ExitCode::SUCCESS,
    }
}
