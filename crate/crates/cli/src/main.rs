mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "logconc", version, about = "Log-concave density estimation experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (a directory for `family-gen`); standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the log-concave MLE to a sample file with one comma-separated point per line.
    Estimate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Iteration cap for the planar solver.
        #[arg(long)]
        max_iterations: Option<usize>,
    },
    /// Distance between two densities stored as JSON.
    Metrics {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: PathBuf,
        #[arg(long, value_enum, default_value_t = MetricKind::HellingerSq)]
        metric: MetricKind,
        #[arg(long)]
        mc_samples: Option<usize>,
        #[arg(long)]
        force_mc: bool,
    },
    /// Build a perturbation family and write a manifest plus member densities to a directory.
    FamilyGen {
        #[arg(long)]
        variant: String,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        /// Explicit member as a bit string such as `0110`.
        #[arg(long)]
        alpha: Vec<String>,
        /// Number of additional random members.
        #[arg(long, default_value_t = 2)]
        members: usize,
    },
    /// Greedy packing of the unit sphere with pairwise distances above `2 eps`.
    Packing {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        eps: f64,
    },
    /// Envelope slack report for a corpus of densities.
    Envelope {
        #[arg(long)]
        d: usize,
        /// JSON array of densities; the standardized generator is used when omitted in one dimension.
        #[arg(long)]
        check: Option<PathBuf>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long, default_value_t = 2000)]
        probes: usize,
        #[arg(long, default_value_t = 6.0)]
        scale: f64,
        /// Points at which to check the mean-zero bound `f(x0) ≤ 1/|x0|` in one dimension.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Vec<f64>,
    },
    /// Run a risk experiment described by a TOML config.
    RiskSweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Assouad lower bounds against the closed-form minimax constants.
    LowerBound {
        #[arg(long)]
        d: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u64>,
    },
    /// Render a risk result as CSV, JSON or SVG.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum MetricKind {
    HellingerSq,
    L2Sq,
    L1,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

/// Error with the exit status it maps to.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<logconcave::Error> for CliError {
    fn from(e: logconcave::Error) -> Self {
        match e {
            logconcave::Error::Io(io) => CliError::Io(io.to_string()),
            e if e.is_validation() => CliError::Validation(e.to_string()),
            e => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.common.threads {
        if t == 0 {
            return Err(CliError::Validation("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    let c = &cli.common;
    match cli.command {
        Command::Estimate { input, dim, tol, max_iterations } => commands::estimate(c, &input, dim, tol, max_iterations),
        Command::Metrics { f, g, metric, mc_samples, force_mc } => commands::metrics(c, &f, &g, metric, mc_samples, force_mc),
        Command::FamilyGen { variant, dim, n, eps, eta, alpha, members } => {
            commands::family_gen(c, &variant, dim, n, eps, eta, &alpha, members)
        }
        Command::Packing { dim, eps } => commands::packing(c, dim, eps),
        Command::Envelope { d, check, a, b, probes, scale, x0 } => {
            commands::envelope(c, d, check.as_deref(), a, b, probes, scale, &x0)
        }
        Command::RiskSweep { config } => commands::risk_sweep(c, &config),
        Command::LowerBound { d, n } => commands::lower_bound(c, d, &n),
        Command::Report { input, format } => commands::report(c, &input, format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("logconc: {e}");
            ExitCode::from(e.code())
        }
    }
}
