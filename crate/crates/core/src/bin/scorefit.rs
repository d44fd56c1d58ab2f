use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use scorefit::commands::{self, ClosedFormRequest, FitCheckOptions};
use scorefit::io::{parse_loadings, parse_matrix, MatrixFile};
use scorefit::report::Format;
use scorefit::simulation::{Execution, LoadingPattern, SimulationConfig};

#[derive(Debug, Parser)]
#[command(
    name = "scorefit",
    version,
    about = "SRMR fit of factor score and unit-weighted scale models"
)]
struct Cli {
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,

    /// Master seed for the simulation.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutputFormat {
    Table,
    Csv,
    Json,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Table => Format::Table,
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Json => Format::Json,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// SRMR of the unit-weighted, factor score and reflective models.
    FitCheck(FitCheckArgs),
    /// Closed-form SRMR for parallel measurements and its inversions.
    ClosedForm(ClosedFormArgs),
    /// Monte Carlo study of the unit-weighted scale SRMR.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Demo {
    Stai,
}

#[derive(Debug, Args)]
struct FitCheckArgs {
    /// Correlation or covariance matrix file.
    #[arg(required_unless_present = "demo", conflicts_with = "demo")]
    matrix: Option<PathBuf>,

    /// One loading per line, enabling the factor score model.
    #[arg(long)]
    loadings: Option<PathBuf>,

    /// Use embedded example data instead of files.
    #[arg(long, value_enum)]
    demo: Option<Demo>,

    /// Also fit the reflective one-factor model.
    #[arg(long)]
    reflective: bool,

    /// Include residual matrices.
    #[arg(long)]
    residuals: bool,

    /// Accept a covariance matrix (diagonal other than one).
    #[arg(long)]
    covariance: bool,
}

#[derive(Debug, Args)]
struct ClosedFormArgs {
    /// Common inter-correlation.
    #[arg(long)]
    r: Option<f64>,

    /// Number of indicators.
    #[arg(long)]
    p: Option<usize>,

    /// Solve for the r that gives this SRMR (with --p).
    #[arg(long, conflicts_with_all = ["min_p", "curve"])]
    solve_r: Option<f64>,

    /// Smallest p that reaches this SRMR (with --r).
    #[arg(long, conflicts_with = "curve")]
    min_p: Option<f64>,

    /// Comma-separated SRMR levels for the required-r curve (with --p-range).
    #[arg(long, value_delimiter = ',')]
    curve: Option<Vec<f64>>,

    /// Inclusive range such as 4..100.
    #[arg(long, default_value = "4..100")]
    p_range: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PatternArg {
    Constant,
    Variable,
    Both,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [150, 300, 900])]
    n: Vec<usize>,

    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.4, 0.6, 0.8])]
    l: Vec<f64>,

    #[arg(long, value_delimiter = ',', default_values_t = [6, 12, 24])]
    p: Vec<usize>,

    #[arg(long, value_enum, default_value_t = PatternArg::Both)]
    pattern: PatternArg,

    #[arg(long, default_value_t = 1000)]
    reps: usize,

    /// Run replications on the current thread only.
    #[arg(long)]
    sequential: bool,
}

fn parse_range(s: &str) -> Result<std::ops::RangeInclusive<usize>> {
    let (a, b) = s
        .split_once("..")
        .or_else(|| s.split_once('-'))
        .ok_or_else(|| anyhow!("expected a range like 4..100, got {s:?}"))?;
    let a: usize = a.trim().parse().with_context(|| format!("bad range start in {s:?}"))?;
    let b: usize = b
        .trim()
        .trim_start_matches('=')
        .parse()
        .with_context(|| format!("bad range end in {s:?}"))?;
    if a > b {
        bail!("empty range {s:?}");
    }
    Ok(a..=b)
}

fn closed_form_request(args: &ClosedFormArgs) -> Result<ClosedFormRequest> {
    if let Some(levels) = &args.curve {
        return Ok(ClosedFormRequest::Curve {
            levels: levels.clone(),
            p_range: parse_range(&args.p_range)?,
        });
    }
    if let Some(target) = args.solve_r {
        let p = args.p.ok_or_else(|| anyhow!("--solve-r needs --p"))?;
        return Ok(ClosedFormRequest::SolveR { target, p });
    }
    if let Some(target) = args.min_p {
        let r = args.r.ok_or_else(|| anyhow!("--min-p needs --r"))?;
        return Ok(ClosedFormRequest::MinP { target, r });
    }
    match (args.r, args.p) {
        (Some(r), Some(p)) => Ok(ClosedFormRequest::Value { r, p }),
        _ => bail!("give --r and --p, or one of --solve-r, --min-p, --curve"),
    }
}

fn run(cli: &Cli) -> Result<scorefit::report::ReportDocument> {
    match &cli.command {
        Command::FitCheck(args) => {
            let options = FitCheckOptions {
                reflective: args.reflective,
                residuals: args.residuals,
            };
            if args.demo.is_some() {
                return Ok(commands::fit_check_stai(options)?);
            }
            let path = args.matrix.as_ref().expect("clap enforces a matrix or --demo");
            let file = MatrixFile {
                require_correlation: !args.covariance,
                ..MatrixFile::new(path)
            };
            let matrix = parse_matrix(&file).with_context(|| format!("reading {}", path.display()))?;
            let loadings = match &args.loadings {
                Some(lp) => Some(
                    parse_loadings(&MatrixFile::new(lp), Some(matrix.matrix.p()))
                        .with_context(|| format!("reading {}", lp.display()))?,
                ),
                None => None,
            };
            Ok(commands::fit_check(matrix, loadings.as_deref(), options)?)
        }
        Command::ClosedForm(args) => Ok(commands::closed_form(&closed_form_request(args)?)?),
        Command::Simulate(args) => {
            let patterns = match args.pattern {
                PatternArg::Constant => vec![LoadingPattern::Constant],
                PatternArg::Variable => vec![LoadingPattern::Variable],
                PatternArg::Both => vec![LoadingPattern::Constant, LoadingPattern::Variable],
            };
            let config = SimulationConfig {
                sample_sizes: args.n.clone(),
                mean_loadings: args.l.clone(),
                indicator_counts: args.p.clone(),
                patterns,
                replications: args.reps,
                seed: cli.seed,
            };
            let execution = if args.sequential {
                Execution::Sequential
            } else {
                Execution::default()
            };
            Ok(commands::simulate(&config, execution)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let doc = match run(&cli) {
        Ok(doc) => doc,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    for w in &doc.warnings {
        eprintln!("warning: {w}");
    }
    let text = doc.render(cli.format.into());
    let written = match &cli.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .context("writing to stdout"),
    };
    if let Err(e) = written {
        eprintln!("error: {e:#}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
