use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use invsens_bench::auditcmd::run_audit;
use invsens_bench::config::{load, Experiment};
use invsens_bench::emit::emit_results;
use invsens_bench::error::BenchError;
use invsens_bench::stepfig::{rows_to_records, run_step_figure};
use invsens_bench::sweeps::{run_median_sweep, run_regression_sweep};

/// Benchmarks and audits for inverse-sensitivity mechanisms.
#[derive(Parser)]
#[command(name = "invsens-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON experiment config; built-in defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path. CSV for sweeps (with `.times.log` and `.summary.json`
    /// sidecars), JSON for audit.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Median accuracy sweep: inverse sensitivity vs smooth Laplace vs Laplace.
    Median(CommonArgs),
    /// Robust regression release via MH vs privately tuned SGD.
    Regression(CommonArgs),
    /// Confidence-interval widths for the step statistic across all datasets.
    StepFigure(CommonArgs),
    /// Density-ratio privacy audits plus structural length-oracle checks.
    Audit(CommonArgs),
}

fn run(command: Command) -> invsens_bench::Result<u8> {
    match command {
        Command::Median(args) => {
            let config = load(args.config.as_deref(), Experiment::MedianSweep, args.seed)?;
            let outcome = run_median_sweep(&config)?;
            let paths = emit_results(&outcome.records, &args.out)?;
            println!("wrote {} ({} records)", paths.csv.display(), outcome.records.len());
            Ok(0)
        }
        Command::Regression(args) => {
            let config = load(args.config.as_deref(), Experiment::RegressionSweep, args.seed)?;
            let outcome = run_regression_sweep(&config)?;
            let paths = emit_results(&outcome.records, &args.out)?;
            println!("wrote {} ({} records)", paths.csv.display(), outcome.records.len());
            if outcome.infeasible {
                eprintln!(
                    "privacy target infeasible at some epsilon: SGD rows emitted with empty output"
                );
                return Ok(3);
            }
            Ok(0)
        }
        Command::StepFigure(args) => {
            let config = load(args.config.as_deref(), Experiment::StepFigure, args.seed)?;
            let rows = run_step_figure(&config)?;
            let records = rows_to_records(&rows, &config);
            let paths = emit_results(&records, &args.out)?;
            println!("wrote {} ({} records)", paths.csv.display(), records.len());
            Ok(0)
        }
        Command::Audit(args) => {
            let config = load(args.config.as_deref(), Experiment::Audit, args.seed)?;
            let outcome = run_audit(&config)?;
            for line in &outcome.lines {
                println!("{line}");
            }
            let json =
                serde_json::to_string_pretty(&outcome.records).expect("audit records serialize");
            std::fs::write(&args.out, json + "\n").map_err(|e| BenchError::io(&args.out, e))?;
            println!("wrote {}", args.out.display());
            // Failed audits are findings, not runtime errors; the JSON carries
            // the verdicts.
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
