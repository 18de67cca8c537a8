use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ionjcm::ansatz::{Branch, SolveFor};

mod commands;
mod config;
mod error;
mod output;
mod verify;

use config::{pick, FileConfig, Format, DEFAULT_BUFFER, DEFAULT_DIM};
use error::{CliError, EXIT_OK, EXIT_USAGE};

/// Exact eigenstates, spectra and crossing structure of a laser-driven trapped ion.
#[derive(Parser, Debug)]
#[command(name = "ionjcm", version)]
struct Cli {
    /// Interior Fock dimension N
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Extra Fock levels B used while building operators
    #[arg(long, global = true)]
    buffer: Option<usize>,
    /// Output file (stdout when omitted)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// JSON key-value config file; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Physics {
    /// Trap frequency
    #[arg(long, allow_negative_numbers = true)]
    pub nu: Option<f64>,
    /// Laser-ion detuning
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// Rabi coupling
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lowest eigenvalues over an eta scan, with tracked identities and crossing events
    Spectrum(SpectrumArgs),
    /// Roots of the compatibility determinant
    Roots(RootsArgs),
    /// Exact eigenstate at a root, checked in both pictures
    Ansatz(AnsatzArgs),
    /// Convergence of the spectrum towards the large-eta asymptotes
    Asymptotics(AsymptoticsArgs),
    /// Run the invariant suites and print a pass/fail table
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub phys: Physics,
    #[arg(long, allow_negative_numbers = true)]
    pub eta_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub eta_max: Option<f64>,
    /// Number of intervals; the grid has steps + 1 points
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub levels: Option<usize>,
}

#[derive(Args, Debug)]
pub struct RootsArgs {
    #[command(flatten)]
    pub phys: Physics,
    #[arg(long, allow_negative_numbers = true, conflicts_with = "eta2")]
    pub eta: Option<f64>,
    #[arg(long)]
    pub eta2: Option<f64>,
    /// Ansatz order
    #[arg(long)]
    pub m: Option<usize>,
    /// plus or minus
    #[arg(long)]
    pub branch: Option<Branch>,
    /// eta2, omega2 or delta
    #[arg(long)]
    pub solve_for: Option<SolveFor>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub range: Option<Vec<f64>>,
    /// Sign-change grid size
    #[arg(long)]
    pub grid_points: Option<usize>,
}

#[derive(Args, Debug)]
pub struct AnsatzArgs {
    #[command(flatten)]
    pub phys: Physics,
    #[arg(long, allow_negative_numbers = true, conflicts_with = "eta2")]
    pub eta: Option<f64>,
    #[arg(long)]
    pub eta2: Option<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub branch: Option<Branch>,
    /// Include the full state vectors in both pictures
    #[arg(long)]
    pub emit_state: bool,
    /// Snap eta^2 to the nearest determinant root within a relative 1e-4
    #[arg(long)]
    pub polish: bool,
}

#[derive(Args, Debug)]
pub struct AsymptoticsArgs {
    #[command(flatten)]
    pub phys: Physics,
    /// Comma-separated increasing eta values
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub eta_list: Option<Vec<f64>>,
    #[arg(long)]
    pub levels: Option<usize>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Reduced N = 60 subset
    #[arg(long)]
    pub quick: bool,
    /// Negative control: flips the sign of one block of T
    #[arg(long, hide = true)]
    pub corrupt_t: bool,
}

/// Globals resolved against the config file.
pub struct Context {
    pub file: FileConfig,
    pub dim: usize,
    pub buffer: usize,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

fn configure_threads() -> Result<(), CliError> {
    let raw = match std::env::var("IONJCM_THREADS") {
        Ok(v) => v,
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(e) => return Err(CliError::Usage(format!("IONJCM_THREADS: {e}"))),
    };
    let n = raw
        .trim()
        .parse::<usize>()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("IONJCM_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let file = FileConfig::load(cli.config.as_deref())?;
    let ctx = Context {
        dim: pick(cli.dim, file.dim, DEFAULT_DIM),
        buffer: pick(cli.buffer, file.buffer, DEFAULT_BUFFER),
        out: cli.out,
        format: cli.format.or(file.format),
        file,
    };
    match &cli.command {
        Command::Spectrum(a) => commands::spectrum(&ctx, a),
        Command::Roots(a) => commands::roots(&ctx, a),
        Command::Ansatz(a) => commands::ansatz(&ctx, a),
        Command::Asymptotics(a) => commands::asymptotics(&ctx, a),
        Command::Verify(a) => verify::run(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ionjcm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
