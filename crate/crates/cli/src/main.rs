mod config;
mod plot;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use svie_core::experiment::format_significant;
use svie_core::randomness::generate_fine_noise;
use svie_core::{
    estimate_rate, simulate, strong_error, ErrorRow, ErrorTable, GridSpec, SchemeTag,
    StudyOptions, SvieError, SvieProblem,
};

use config::{load_config, FileConfig, Settings};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numeric(#[from] SvieError),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
        }
    }
}

fn io_error(path: &Path, err: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {err}", path.display()))
}

/// Simulate stochastic Volterra integral equations with weakly singular kernels.
#[derive(Debug, Parser)]
#[command(name = "svie", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one trajectory and write "n,t,x" rows.
    Simulate(SimulateArgs),
    /// Estimate strong errors against a fine reference and fit the rate.
    Convergence(ConvergenceArgs),
    /// Fit the convergence rate of an existing error table.
    Rate(RateArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, default_value = svie_core::problem::PAPER_SIN_COS)]
    problem: String,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    /// Coarse steps on [0, 1].
    #[arg(long)]
    n: usize,
    /// Brownian cells per coarse step.
    #[arg(long, default_value_t = 1)]
    refine: usize,
    #[arg(long, default_value_t = config::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "rmilstein")]
    scheme: SchemeTag,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ConvergenceArgs {
    /// JSON file with any of: problem, alpha, beta, levels, ref, paths, seed, scheme, out, plot.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    #[arg(long = "ref")]
    reference: Option<usize>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// One or more of rmilstein, rem, em, comma separated.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Worker threads; the global pool is used when absent.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct RateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn run_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let problem = SvieProblem::builtin(&args.problem, args.alpha, args.beta)?;
    let grid = GridSpec::new(problem.horizon(), args.n, args.refine)?;
    let noise = generate_fine_noise(args.seed, 0, &grid, &[args.n])?;
    let trajectory = simulate(&problem, &grid, &noise, args.scheme)?;

    let mut writer = csv::Writer::from_path(&args.out).map_err(|e| io_error(&args.out, e))?;
    writer.write_record(["n", "t", "x"]).map_err(|e| io_error(&args.out, e))?;
    for (n, t, x) in trajectory.nodes() {
        writer
            .write_record([n.to_string(), t.to_string(), x.to_string()])
            .map_err(|e| io_error(&args.out, e))?;
    }
    writer.flush().map_err(|e| io_error(&args.out, e))
}

/// `errors.csv` for the first scheme, `errors.<scheme>.csv` for the others.
fn table_path(out: &Path, index: usize, scheme: SchemeTag) -> PathBuf {
    if index == 0 {
        return out.to_path_buf();
    }
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("errors");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    out.with_file_name(format!("{stem}.{}.{ext}", scheme.cli_name()))
}

fn run_convergence(args: ConvergenceArgs) -> Result<(), CliError> {
    let file = match &args.config {
        Some(path) => load_config(path)?,
        None => FileConfig::default(),
    };
    let flags = FileConfig {
        problem: args.problem,
        alpha: args.alpha,
        beta: args.beta,
        levels: args.levels,
        reference: args.reference,
        paths: args.paths,
        seed: args.seed,
        scheme: args.scheme,
        out: args.out,
        plot: args.plot,
    };
    let settings = Settings::resolve(file.overlay(flags))?;
    println!("{}", settings.to_json());

    let problem = SvieProblem::builtin(&settings.problem, settings.alpha, settings.beta)?;
    let mut series = Vec::with_capacity(settings.scheme.len());
    for (i, &scheme) in settings.scheme.iter().enumerate() {
        let options = StudyOptions {
            levels: settings.levels.clone(),
            reference_n: settings.reference,
            paths: settings.paths,
            seed: settings.seed,
            scheme,
            threads: args.threads,
        };
        let table = strong_error(&problem, &options)?;
        write_file(&table_path(&settings.out, i, scheme), &table.to_csv())?;
        series.push((scheme, table));
    }

    let fit = estimate_rate(&series[0].1, settings.alpha, settings.beta);
    match &fit {
        Ok(fit) => println!(
            "{}: empirical slope {} / theoretical min{{1-2beta,1-alpha}} = {}",
            series[0].0.cli_name(),
            format_significant(fit.slope, 4),
            format_significant(fit.theoretical, 4)
        ),
        Err(e) => eprintln!("rate fit unavailable: {e}"),
    }
    if let Some(path) = &settings.plot {
        let fit = fit?;
        write_file(path, &plot::render_svg(&series, &fit))?;
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    #[serde(rename = "N")]
    coarse_n: usize,
    h: f64,
    l2_error: f64,
    std_error: f64,
    paths: usize,
}

fn run_rate(args: RateArgs) -> Result<(), CliError> {
    svie_core::problem::problem_exponent("alpha", args.alpha)?;
    svie_core::problem::problem_exponent("beta", args.beta)?;
    let mut reader = csv::Reader::from_path(&args.input).map_err(|e| io_error(&args.input, e))?;
    let rows = reader
        .deserialize()
        .map(|row| {
            let r: CsvRow = row.map_err(|e| io_error(&args.input, e))?;
            Ok(ErrorRow {
                coarse_n: r.coarse_n,
                h: r.h,
                l2_error: r.l2_error,
                std_error: r.std_error,
                paths: r.paths,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let fit = estimate_rate(&ErrorTable::new(rows), args.alpha, args.beta)?;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "slope {}", format_significant(fit.slope, 10));
    let _ = writeln!(out, "intercept {}", format_significant(fit.intercept, 10));
    let _ = writeln!(out, "r_squared {}", format_significant(fit.r_squared, 10));
    let _ = writeln!(out, "theoretical {}", format_significant(fit.theoretical, 10));
    let _ = writeln!(out, "holder {}", format_significant(fit.holder, 10));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let rendered = e.to_string();
            let line = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("svie: {}", line.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => run_simulate(args),
        Command::Convergence(args) => run_convergence(args),
        Command::Rate(args) => run_rate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("svie: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
