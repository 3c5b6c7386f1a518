//! Batch front end: `solve`, `verify`, `sweep` and `iterate-demo`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

pub mod commands;
pub mod config;

pub use config::ExperimentConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

/// Environment variable consulted for the output directory when `--out` is
/// absent.
pub const OUT_DIR_ENV: &str = "NLDP_OUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] nldp_core::Error),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "nldp", version, about = "Solve and check discrete nonlocal double phase problems")]
pub struct Cli {
    /// Worker threads; 0 uses all available cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides the config and the NLDP_OUT_DIR variable.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the seed of the config and of the solver.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize the energy and write the solution.
    Solve(CommonArgs),
    /// Run the configured checks on a solution file.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Solution CSV; `<out>/solution.csv` by default.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Evaluate assumption flags and solver statistics over parameter lists.
    Sweep(CommonArgs),
    /// Print the trace of `y_{i+1} = b1 b2^i y_i^{1+beta}` as CSV.
    IterateDemo {
        #[arg(long, default_value_t = 1.0)]
        b1: f64,
        #[arg(long, default_value_t = 2.0)]
        b2: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long, default_value_t = 0.5)]
        y0: f64,
        #[arg(long, default_value_t = 50)]
        imax: usize,
    },
}

/// Loads the config, applies the seed override and resolves the output
/// directory.
pub fn prepare(common: &CommonArgs) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
        cfg.solver.seed = seed;
    }
    let out = common
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    cfg.output.dir = Some(out.clone());
    Ok((cfg, out))
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Solve(common) => {
            let (cfg, out) = prepare(&common)?;
            commands::cmd_solve(&cfg, &out)
        }
        Command::Verify { common, solution } => {
            let (cfg, out) = prepare(&common)?;
            let solution = solution.unwrap_or_else(|| out.join("solution.csv"));
            commands::cmd_verify(&cfg, &solution, &out)
        }
        Command::Sweep(common) => {
            let (cfg, out) = prepare(&common)?;
            commands::cmd_sweep(&cfg, &out)
        }
        Command::IterateDemo { b1, b2, beta, y0, imax } => {
            commands::cmd_iterate_demo(b1, b2, beta, y0, imax, std::io::stdout().lock())
        }
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FAILURE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return EXIT_FAILURE;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

pub(crate) fn create_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))
}
