//! The `formality` command line: graph listings, weights, star products,
//! identity suites, Duflo and trace reports, all as JSON run reports.

pub mod commands;
pub mod config;
pub mod report;
pub mod suites;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::Config;
pub use report::RunReport;

#[derive(Debug, Parser)]
#[command(name = "formality", version, about = "Graph weights, star products and formality checks")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON config file (also FORMALITY_CONFIG).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed of every random stream in the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo samples per graph.
    #[arg(long, global = true)]
    pub samples: Option<u64>,
    /// Weight cache directory (also FORMALITY_WEIGHT_CACHE).
    #[arg(long, global = true)]
    pub cache_root: Option<PathBuf>,
    #[arg(long, global = true)]
    pub no_cache: bool,
    /// Pass threshold in standard errors.
    #[arg(long, global = true)]
    pub k_sigma: Option<f64>,
    /// Render a table instead of JSON.
    #[arg(long, global = true)]
    pub table: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FlavorArg {
    Halfplane,
    Disk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Symbolic,
    Calibration,
    Associativity,
    Chain,
    Tangent,
    Probes,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List admissible graphs with counts and zero-weight flags.
    Graphs {
        #[arg(long, value_enum)]
        flavor: FlavorArg,
        #[arg(short, default_value_t = 0)]
        n: usize,
        #[arg(short, default_value_t = 0)]
        m: usize,
        /// Only the wheel with this many spokes.
        #[arg(long)]
        wheels: Option<usize>,
    },
    /// Weight of one graph, from a JSON file or a named graph
    /// (mu, wedge, vector, wheelK).
    Weight {
        #[arg(long, conflicts_with = "id", required_unless_present = "id")]
        graph: Option<PathBuf>,
        #[arg(long)]
        id: Option<String>,
    },
    /// Star product and commutator of two polynomials.
    Star {
        #[arg(long)]
        dim: usize,
        /// const01, so3, affine2, heisenberg3, zero, or a bivector such as "x0*d0^d1".
        #[arg(long)]
        poisson: String,
        #[arg(long, default_value_t = 1)]
        order: usize,
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
    },
    /// Run an identity suite.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Random instances per identity.
        #[arg(long)]
        cases: Option<usize>,
    },
    /// Multiplicativity of the Duflo map on invariants.
    Duflo {
        /// so3, heisenberg3, affine2, abelianN, or a JSON file of structure constants.
        #[arg(long)]
        algebra: String,
        #[arg(long, default_value_t = 4)]
        degree: u32,
    },
    /// The trace map exp(Σ ħ^k w_k Tr_k) on a polynomial, with the wheel weights.
    Trace {
        #[arg(long)]
        algebra: String,
        #[arg(long)]
        a: String,
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Also evaluate the disk graph sum and compare.
        #[arg(long)]
        direct: bool,
    },
}

/// Failures, each with its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent input.
    Validation(String),
    /// A Monte Carlo run did not reach its error target.
    Convergence(String),
    /// A resource guard stopped the computation.
    Resource(String),
    /// Files, caches, serialization.
    Io(String),
}

pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;
pub const EXIT_RESOURCE: i32 = 5;
pub const EXIT_IO: i32 = 6;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Convergence(_) => EXIT_CONVERGENCE,
            CliError::Resource(_) => EXIT_RESOURCE,
            CliError::Io(_) => EXIT_IO,
        }
    }

    pub fn code_name(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Convergence(_) => "convergence",
            CliError::Resource(_) => "resource",
            CliError::Io(_) => "io",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Convergence(m) | CliError::Resource(m) | CliError::Io(m) => m,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "error": self.code_name(), "message": self.message() })
    }
}

impl From<formality::Error> for CliError {
    fn from(e: formality::Error) -> Self {
        use formality::Error as E;
        let msg = e.to_string();
        match e {
            E::Resource(_) => CliError::Resource(msg),
            E::Nonconvergence(_) => CliError::Convergence(msg),
            E::Io(_) | E::Json(_) | E::WeightsUnavailable(_) => CliError::Io(msg),
            _ => CliError::Validation(msg),
        }
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Validation(e.0)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// The effective configuration of a run.
pub fn resolve_config(global: &GlobalArgs) -> CliResult<Config> {
    let mut cfg = Config::load(global.config.as_deref())?;
    if let Some(s) = global.seed {
        cfg.seed = s;
    }
    if let Some(s) = global.samples {
        cfg.samples = s;
    }
    if let Some(dir) = &global.cache_root {
        cfg.cache_root = dir.clone();
    }
    if global.no_cache {
        cfg.use_cache = false;
    }
    if let Some(k) = global.k_sigma {
        cfg.k_sigma = k;
    }
    if cfg.samples == 0 {
        return Err(CliError::Validation("samples must be positive".into()));
    }
    Ok(cfg)
}

/// Runs one command and stamps the elapsed time.
pub fn run(cli: &Cli) -> CliResult<RunReport> {
    let cfg = resolve_config(&cli.global)?;
    let start = Instant::now();
    let mut report = commands::dispatch(&cli.command, &cfg)?;
    report.timing.elapsed_ms = start.elapsed().as_millis();
    Ok(report)
}

/// Exit code of a finished report: failed checks exit with 1, weights
/// flagged as nonconverged with the convergence code.
pub fn report_exit_code(report: &RunReport) -> i32 {
    if report.results.get("nonconverged").is_some_and(|v| v == true) {
        return EXIT_CONVERGENCE;
    }
    match report.passed {
        Some(false) => EXIT_CHECK_FAILED,
        _ => 0,
    }
}
