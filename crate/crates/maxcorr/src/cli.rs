//! Command-line surface: `maxcorr screen` and `maxcorr simulate`.
//!
//! Results go to standard output, messages to standard error. Exit codes:
//! 0 success, 2 bad input (flags, files, malformed rows), 1 internal error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use maxcorr_core::{est_psi, Error as CoreError, EstError, ScreenConfig};

use crate::io::{self, CsvObservations, GridDefaults, IoError, ScreenReport, YColumn};
use crate::sim::{run_power_study, SimError};

#[derive(Debug, Parser)]
#[command(
    name = "maxcorr",
    version,
    about = "Single-pass screen for the maximal absolute correlation between an outcome and many predictors"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Screen a CSV dataset: point estimate, confidence interval, test decision
    Screen(ScreenArgs),
    /// Run a Monte Carlo power study over a scenario grid
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct ScreenArgs {
    /// Input CSV path; standard input when omitted (then --n is required)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Outcome column: a name or a 1-based position [default: "y", else the last column]
    #[arg(long = "y-col")]
    y_col: Option<String>,
    /// Two-sided miscoverage of the confidence interval
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Burn-in schedule exponent
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// Fixed burn-in, overriding the schedule
    #[arg(long)]
    ell: Option<usize>,
    /// Refresh the selection at this many chunk boundaries instead of every step
    #[arg(long)]
    chunks: Option<usize>,
    /// Map every value through 2/(1+e^-z) - 1 into (-1, 1) before screening
    #[arg(long)]
    sigmoid: bool,
    /// Number of data rows; when omitted, counted with an extra pass over the file
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Scenario grid CSV with columns model,n,p,rho,method[,reps,alpha,seed]
    #[arg(long)]
    grid: PathBuf,
    /// Master seed for rows without a seed column
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replications for rows without a reps column
    #[arg(long, default_value_t = 500)]
    reps: u32,
    /// Test level for rows without an alpha column
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Output stem or path; the table is written as <out>.csv and <out>.json
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Error)]
enum AppError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl AppError {
    fn exit_code(&self) -> ExitCode {
        match self {
            // An empty accumulator after a validated run is a bug, not bad input.
            AppError::Core(CoreError::Empty) => ExitCode::from(1),
            _ => ExitCode::from(2),
        }
    }
}

fn flatten(err: EstError<IoError>) -> AppError {
    match err {
        EstError::Core(e) => AppError::Core(e),
        EstError::Source(e) => AppError::Io(e),
    }
}

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Screen(args) => run_screen(args),
        Command::Simulate(args) => run_simulate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run_screen(args: ScreenArgs) -> Result<(), AppError> {
    let config = ScreenConfig {
        alpha: args.alpha,
        epsilon: args.epsilon,
        ell_override: args.ell,
        chunk_count: args.chunks,
        apply_sigmoid: args.sigmoid,
        ..ScreenConfig::default()
    };
    config.validate()?;
    let y_col = args
        .y_col
        .as_deref()
        .map(YColumn::parse)
        .unwrap_or_default();

    let report = match &args.input {
        Some(path) => {
            let n = match args.n {
                Some(n) => n,
                None => io::count_csv_rows(path)?,
            };
            let reader = io::open_csv(path, &y_col)?;
            let names = reader.predictor_names().to_vec();
            let result = est_psi(reader, n, &config).map_err(flatten)?;
            ScreenReport::from_result(&result, &names)
        }
        None => {
            let n = args.n.ok_or_else(|| {
                AppError::Usage(
                    "reading from standard input requires --n (the row count)".to_string(),
                )
            })?;
            let reader = CsvObservations::new(std::io::stdin().lock(), &y_col)?;
            let names = reader.predictor_names().to_vec();
            let result = est_psi(reader, n, &config).map_err(flatten)?;
            ScreenReport::from_result(&result, &names)
        }
    };

    if report.rows_outside_unit_range > 0 {
        eprintln!(
            "warning: {} rows have values outside [-1, 1]; the interval's guarantees \
             assume bounded data (consider --sigmoid)",
            report.rows_outside_unit_range
        );
    }
    match args.format {
        OutputFormat::Json => print!("{}", report.to_json()),
        OutputFormat::Csv => print!("{}", report.to_csv()),
    }
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<(), AppError> {
    let defaults = GridDefaults {
        reps: args.reps,
        alpha: args.alpha,
        seed: args.seed,
    };
    let specs = io::read_grid(&args.grid, defaults)?;
    if specs.is_empty() {
        return Err(AppError::Usage(format!(
            "grid {} contains no scenarios",
            args.grid.display()
        )));
    }
    eprintln!("running {} scenarios...", specs.len());
    let rows = run_power_study(&specs)?;

    let csv_path = args.out.with_extension("csv");
    let json_path = args.out.with_extension("json");
    let csv = io::power_table_csv(&rows);
    std::fs::write(&csv_path, &csv).map_err(|source| AppError::Write {
        path: csv_path.clone(),
        source,
    })?;
    std::fs::write(&json_path, io::power_table_json(&rows)).map_err(|source| {
        AppError::Write {
            path: json_path.clone(),
            source,
        }
    })?;
    eprintln!("wrote {} and {}", csv_path.display(), json_path.display());
    print!("{csv}");
    Ok(())
}
