//! `riskcast`: simulate or ingest data, tune, backtest, report and diagnose.
//!
//! Every command writes its artifacts and a `manifest.json` into `--out`; a
//! short summary goes to stdout. Exit codes: 0 success, 2 usage or
//! configuration error, 3 data error, 4 numerical failure.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use riskcast::data::{Preset, WorkerClass};
use riskcast::validation::Metric;

use manifest::Manifest;

#[derive(Debug, Parser)]
#[command(name = "riskcast", version, about = "Short-term accident-risk forecasting from inspection data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a synthetic dataset bundle.
    Simulate(SimulateArgs),
    /// Aggregate raw inspection and accident logs into a dataset bundle.
    Ingest(IngestArgs),
    /// Grid search by expanding-window cross-validation.
    Tune(TuneArgs),
    /// Rolling-origin evaluation on a held-out span.
    Backtest(BacktestArgs),
    /// Weekly risk reports from a prediction log or a saved model.
    Report(ReportArgs),
    /// Rate evolution, serial kappa and calendar profile of a dataset.
    Diagnose(DiagnoseArgs),
    /// Re-run the command recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Calibrated imbalance preset.
    #[arg(long, value_parser = parse_preset, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<Preset>,
    /// TOML simulation config; missing fields keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the number of days.
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    inspections: PathBuf,
    #[arg(long)]
    accidents: PathBuf,
    /// Keep one department only.
    #[arg(long)]
    department: Option<String>,
    /// Keep accidents of one worker class only (ITW or ExW).
    #[arg(long, value_parser = parse_worker_class)]
    worker_class: Option<WorkerClass>,
    /// First day of the series; defaults to the earliest record.
    #[arg(long)]
    start: Option<NaiveDate>,
    /// Last day of the series; defaults to the latest record.
    #[arg(long)]
    end: Option<NaiveDate>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TuneArgs {
    /// Dataset bundle directory.
    #[arg(long)]
    dataset: PathBuf,
    /// TOML grid of `[[model]]` blocks.
    #[arg(long)]
    grid: PathBuf,
    /// First held-out day; tuning sees only earlier days. Defaults to none held out.
    #[arg(long)]
    split_date: Option<NaiveDate>,
    /// Initial training window in days; defaults to 60% of the training span.
    #[arg(long)]
    initial_window: Option<usize>,
    /// Validation window in days.
    #[arg(long, default_value_t = 7)]
    step: usize,
    #[arg(long, default_value_t = 7)]
    horizon: usize,
    /// Selection metric, e.g. period_ba, period_f1, daily_recall.
    #[arg(long, default_value = "period_ba", value_parser = parse_metric)]
    metric: Metric,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BacktestArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// `tune.json` from the tune command: best model and threshold.
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    tuned: Option<PathBuf>,
    /// TOML grid holding exactly one model.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Decision threshold; overrides the tuned one (default 0.5 with --model).
    #[arg(long)]
    tau: Option<f64>,
    /// First test day.
    #[arg(long)]
    split_date: NaiveDate,
    #[arg(long, default_value_t = 7)]
    retrain_every: usize,
    #[arg(long, default_value_t = 7)]
    horizon: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Label of the model in the prediction log; defaults to its family.
    #[arg(long)]
    model_id: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Prediction log written by backtest.
    #[arg(long, conflicts_with_all = ["dataset", "model"], required_unless_present = "model")]
    predictions: Option<PathBuf>,
    /// Model saved by backtest, for a live forecast.
    #[arg(long, requires = "dataset", requires = "week")]
    model: Option<PathBuf>,
    /// Dataset whose history feeds the live forecast.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Monday the reported week starts on; every complete week of the log when omitted.
    #[arg(long)]
    week: Option<NaiveDate>,
    /// Decision threshold; defaults to the saved model's, else 0.5.
    #[arg(long)]
    tau: Option<f64>,
    /// Which model of a multi-model log.
    #[arg(long)]
    model_id: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Largest kappa lag.
    #[arg(long, default_value_t = 14)]
    max_lag: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RerunArgs {
    /// A manifest.json written by an earlier run.
    manifest: PathBuf,
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse()
}

fn parse_worker_class(s: &str) -> Result<WorkerClass, String> {
    s.parse()
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: riskcast::Error| e.to_string())
}

/// Error carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { code: EXIT_DATA, message: message.into() }
    }
}

impl From<riskcast::Error> for Failure {
    fn from(e: riskcast::Error) -> Self {
        use riskcast::Error as E;
        let code = match e {
            E::Config(_) => EXIT_USAGE,
            E::Numerical(_) => EXIT_NUMERICAL,
            _ => EXIT_DATA,
        };
        Self { code, message: e.to_string() }
    }
}

fn run(args: Vec<String>) -> Result<(), Failure> {
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            // help and version land here too
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return if code == 0 { Ok(()) } else { Err(Failure { code, message: String::new() }) };
        }
    };
    if let Command::Rerun(r) = &cli.command {
        let recorded = Manifest::load(&r.manifest)?;
        println!("re-running `riskcast {}`", recorded.args.join(" "));
        let mut argv = vec!["riskcast".to_string()];
        argv.extend(recorded.args);
        return run(argv);
    }
    let mut manifest = Manifest::start(&args[1..]);
    let outcome = match &cli.command {
        Command::Simulate(a) => commands::simulate(a, &mut manifest),
        Command::Ingest(a) => commands::ingest(a, &mut manifest),
        Command::Tune(a) => commands::tune(a, &mut manifest),
        Command::Backtest(a) => commands::backtest(a, &mut manifest),
        Command::Report(a) => commands::report(a, &mut manifest),
        Command::Diagnose(a) => commands::diagnose(a, &mut manifest),
        Command::Rerun(_) => unreachable!("handled above"),
    };
    let written = manifest.finish(outcome.as_ref().err().map(|f| f.message.as_str()));
    outcome?;
    written.map_err(Failure::from)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
