//! Batch front end: parameter sweeps, synthetic experiments, certification
//! of data files and Monte Carlo validation.

pub mod commands;
pub mod config;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{derive_seed, parse_grid, parse_int_grid, Settings};
pub use output::{Format, Output};

/// Exit status for success.
pub const EXIT_OK: i32 = 0;
/// Exit status for internal failures.
pub const EXIT_INTERNAL: i32 = 1;
/// Exit status for invalid input or flagged validation cells.
pub const EXIT_VALIDATION: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0} Monte Carlo cell(s) disagree with the analytic model by more than 5 standard errors")]
    Flagged(usize),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Flagged(_) => EXIT_VALIDATION,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::Io(_) | crate::Error::BracketFailure { .. } => CliError::Internal(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qcontrast", version, about = "Quantum-contrast modelling and entanglement-dimensionality certification")]
pub struct Cli {
    /// TOML config with top-level defaults and one section per command
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; tables go to stdout when absent
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Contrast over a grid of pair rate and noise-to-efficiency ratio
    ContrastSurface(ContrastSurfaceArgs),
    /// Contrast needed to certify k dimensions versus d
    RequiredContrast(RequiredContrastArgs),
    /// Built-in re-analysis of four measured (d, Q) pairs
    Table1,
    /// Synthetic experiments certified end to end
    Simulate(SimulateArgs),
    /// Certify a JSON record or a set of CSV matrices
    Certify(CertifyArgs),
    /// Monte Carlo check of the coincidence formulas
    ValidateMc(ValidateMcArgs),
    /// Steering functional over (d, q) and its boundary
    SteeringScan(SteeringScanArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::ContrastSurface(_) => "contrast-surface",
            Command::RequiredContrast(_) => "required-contrast",
            Command::Table1 => "table1",
            Command::Simulate(_) => "simulate",
            Command::Certify(_) => "certify",
            Command::ValidateMc(_) => "validate-mc",
            Command::SteeringScan(_) => "steering-scan",
        }
    }

    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        fn flag(on: bool) -> Option<String> {
            on.then(|| "true".to_string())
        }
        match self {
            Command::ContrastSurface(a) => vec![("mu", a.mu.clone()), ("n_over_eta", a.n_over_eta.clone())],
            Command::RequiredContrast(a) => vec![("k", a.k.clone()), ("d", a.d.clone())],
            Command::Table1 => vec![],
            Command::Simulate(a) => vec![
                ("d", a.d.clone()),
                ("sigma", a.sigma.clone()),
                ("target_q", a.target_q.clone()),
                ("mu", a.mu.clone()),
                ("n", a.n.clone()),
                ("eta", a.eta.clone()),
                ("events", a.events.clone()),
            ],
            Command::Certify(a) => vec![("mub_count", a.mub_count.map(|m| m.to_string()))],
            Command::ValidateMc(a) => vec![
                ("mu", a.mu.clone()),
                ("n", a.n.clone()),
                ("eta", a.eta.clone()),
                ("trials", a.trials.clone()),
                ("paired", flag(a.paired)),
                ("corrupt_formula", a.corrupt_formula.map(|f| f.to_string())),
            ],
            Command::SteeringScan(a) => vec![("d", a.d.clone()), ("q", a.q.clone()), ("events", a.events.clone())],
        }
    }
}

#[derive(Debug, Args)]
pub struct ContrastSurfaceArgs {
    /// Pair-rate grid
    #[arg(long)]
    pub mu: Option<String>,
    /// Noise-to-efficiency grid
    #[arg(long)]
    pub n_over_eta: Option<String>,
}

#[derive(Debug, Args)]
pub struct RequiredContrastArgs {
    /// Target dimensionalities
    #[arg(long)]
    pub k: Option<String>,
    /// Hilbert-space dimensions
    #[arg(long)]
    pub d: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub d: Option<String>,
    /// Gaussian envelope width in mode units; `inf` for a flat spectrum
    #[arg(long)]
    pub sigma: Option<String>,
    #[arg(long)]
    pub target_q: Option<String>,
    /// Physical noise model (all three of mu, n, eta replace target-q)
    #[arg(long)]
    pub mu: Option<String>,
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub eta: Option<String>,
    /// Draw this many coincidence events per matrix
    #[arg(long)]
    pub events: Option<String>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// One JSON record, or CSV matrices (one per MUB)
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Size of the MUB set the CSV matrices come from
    #[arg(long)]
    pub mub_count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ValidateMcArgs {
    #[arg(long)]
    pub mu: Option<String>,
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub eta: Option<String>,
    #[arg(long)]
    pub trials: Option<String>,
    /// Pair the mu and n grids element-wise instead of crossing them
    #[arg(long)]
    pub paired: bool,
    /// Test hook: scales the analytic matched-coincidence probability
    #[arg(long, hide = true)]
    pub corrupt_formula: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SteeringScanArgs {
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long)]
    pub q: Option<String>,
    /// Also classify finite-count records with this many events per matrix
    #[arg(long)]
    pub events: Option<String>,
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let name = cli.command.name();
    let mut flags = cli.command.flags();
    flags.push(("seed", cli.seed.map(|s| s.to_string())));
    flags.push(("out", cli.out.map(|p| p.display().to_string())));
    flags.push(("format", cli.format.map(|f| format!("{f:?}").to_lowercase())));
    let mut settings = Settings::resolve(name, cli.config.as_deref(), flags)?;
    let out_dir = settings.peek("out").map(PathBuf::from);
    let format: Format = settings.peek("format").map(|f| f.parse()).transpose()?.unwrap_or_default();
    log::info!("running {name}");
    match cli.command {
        Command::ContrastSurface(_) => commands::contrast_surface_cmd(&mut settings, out_dir, format),
        Command::RequiredContrast(_) => commands::required_contrast_cmd(&mut settings, out_dir, format),
        Command::Table1 => commands::table1_cmd(&mut settings, out_dir, format),
        Command::Simulate(_) => commands::simulate_cmd(&mut settings, out_dir, format),
        Command::Certify(args) => commands::certify_cmd(&mut settings, out_dir, &args.inputs),
        Command::ValidateMc(_) => commands::validate_mc_cmd(&mut settings, out_dir, format),
        Command::SteeringScan(_) => commands::steering_scan_cmd(&mut settings, out_dir, format),
    }
}
