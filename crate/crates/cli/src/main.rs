//! `qproc`: stationary process pipelines, spec validation and dataset
//! generation.

mod commands;
mod validate;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

const CSV_HELP: &str = "\
CSV outputs (written to --output, default the current directory):
  eigenvalues.csv    n,index,value      ascending eigenvalues of the n x n Toeplitz
                                        section of T(theta) = 1/2 + cos(theta)/5 + sin(2 theta)/3
  entropy_curve.csv  n,H_n,increment,integral_target
                                        block entropies of a free-fermionic process
  figure1.csv        theta,T            1024 uniform angles on [-pi, pi)
  figure2.csv        n,index,value      eigenvalue lists for n = 1..50 and n = 100

Exit codes: 0 success, 1 validation or numerical failure, 2 usage or parse error.
QPROC_THREADS caps the worker thread count.";

#[derive(Debug, Parser)]
#[command(name = "qproc", version, about = "Stationary classical and quantum process toolkit", after_help = CSV_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON spec file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Directory for CSV and JSON artifacts.
    #[arg(long, default_value = ".")]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance for pass/fail checks.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Entropy rate and block entropies of a Markov chain spec {"T", "mu"?}.
    Markov {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 6)]
        nmax: usize,
    },
    /// Exact increments and Blackwell estimate for an HMM spec {"E", "seed"?, "mu"?}.
    HmmEntropy {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        nmax: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Checks a Davies spec {"T", "D", "mu"?} and reports its minimal output entropy.
    DaviesCheck {
        #[command(flatten)]
        common: Common,
    },
    /// Singlet weight optimisation (--mode) or a single SU(2) parameter point.
    FcsSu2 {
        #[command(flatten)]
        common: Common,
        /// exchangeable, separable, su2_stationary, period2, three_qubit_su2 or all.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        mu: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        nu: Option<f64>,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        eta: f64,
        #[arg(long, default_value_t = 6)]
        nmax: usize,
    },
    /// Block entropies of a free-fermionic spec {"A", "B", "X"}; writes entropy_curve.csv.
    FermionEntropy {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        nmax: usize,
        /// Built-in spec used without --input: scalar, normal or non_normal.
        #[arg(long, default_value = "scalar")]
        sample: String,
    },
    /// Szegő averages and increments against the limiting integral.
    SzegoDemo {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 128)]
        nmax: usize,
    },
    /// Eigenvalues of the n x n Toeplitz section; writes eigenvalues.csv.
    ToeplitzEigs {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        n: usize,
    },
    /// Every headline number in one JSON document, plus figure1.csv and figure2.csv.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 300)]
        n: usize,
    },
    /// Runs the invariant checks of whichever spec kind the file holds.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Figure datasets: 1 writes figure1.csv, 2 writes figure2.csv.
    Figure {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        figure: u8,
    },
}

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or unreadable input; exit 2.
    Usage(String),
    /// A check failed; the payload is printed before exiting with 1.
    Failed(serde_json::Value),
    Lib(qproc::Error),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failed(v) => write!(f, "{v}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl From<qproc::Error> for CliError {
    fn from(e: qproc::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn read_input(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

/// Typed parse; serde_json errors carry the line and column.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| {
        CliError::Usage(format!("{}: {e}", path.display()))
    })
}

pub fn load<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    parse_json(&read_input(path)?, path)
}

pub fn out_file(common: &Common, name: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(&common.output)?;
    Ok(common.output.join(name))
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("QPROC_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("QPROC_THREADS must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(CliError::Usage("QPROC_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<serde_json::Value> {
    configure_threads()?;
    match cli.command {
        Command::Markov { common, nmax } => commands::markov(&common, nmax),
        Command::HmmEntropy { common, nmax, samples } => commands::hmm_entropy(&common, nmax, samples),
        Command::DaviesCheck { common } => commands::davies_check(&common),
        Command::FcsSu2 {
            common,
            mode,
            alpha,
            mu,
            nu,
            eta,
            nmax,
        } => commands::fcs_su2(&common, mode.as_deref(), alpha, mu, nu, eta, nmax),
        Command::FermionEntropy { common, nmax, sample } => commands::fermion_entropy(&common, nmax, &sample),
        Command::SzegoDemo { common, nmax } => commands::szego_demo(&common, nmax),
        Command::ToeplitzEigs { common, n } => commands::toeplitz_eigs(&common, n),
        Command::Report { common, n } => commands::report(&common, n),
        Command::Validate { common } => validate::validate(&common),
        Command::Figure { common, figure } => commands::figure(&common, figure),
    }
}

fn print_json(v: &serde_json::Value) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    // a closed pipe downstream is not an error worth reporting
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(v).expect("serialisable"));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(v) => {
            print_json(&v);
            ExitCode::SUCCESS
        }
        Err(CliError::Failed(v)) => {
            print_json(&v);
            ExitCode::from(1)
        }
        Err(e @ CliError::Usage(_)) => {
            eprintln!("qproc: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("qproc: {e}");
            ExitCode::from(1)
        }
    }
}
