use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use riskcast::data::{
    aggregate_daily, load_accidents, load_dataset, load_inspections, save_dataset, simulate_dataset,
    DatasetBundle, DateRange, RecordFilter, SimulationConfig, GROUND_TRUTH_FILE, META_FILE,
};
use riskcast::evaluation::{
    calendar_profile, kappa_autocorr, rate_evolution, weekly_report, write_calendar_profile, write_json,
    write_kappa, write_metrics_csv, write_rate_evolution, write_weekly_reports, MetricReport, MetricsRow,
    WeeklyReport,
};
use riskcast::models::{load_checkpoint, save_checkpoint};
use riskcast::series::{EncodedHistory, EncodingSpec};
use riskcast::strategy::{Forecaster, HorizonForecast, DEFAULT_THRESHOLD};
use riskcast::validation::{
    backtest as run_backtest, derive_seed, initial_window, tune as run_tune, BacktestConfig, Candidate, Grid,
    PredictionLog, TscvConfig, TuneResult,
};

use crate::manifest::{dataset_id, Manifest};
use crate::{BacktestArgs, DiagnoseArgs, Failure, IngestArgs, ReportArgs, SimulateArgs, TuneArgs};

type Outcome = Result<(), Failure>;

/// A model refit on the whole dataset after a backtest, ready for live weekly
/// forecasts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeployedModel {
    pub model_id: String,
    pub candidate: Candidate,
    pub tau: f64,
    /// Last day of the data it was fit on.
    pub trained_through: NaiveDate,
    pub forecaster: Forecaster,
}

fn check_tau(tau: f64) -> Result<f64, Failure> {
    if (0.0..=1.0).contains(&tau) {
        Ok(tau)
    } else {
        Err(Failure::usage(format!("--tau must lie in [0, 1], got {tau}")))
    }
}

fn load_history(dir: &Path, manifest: &mut Manifest) -> Result<(DatasetBundle, EncodedHistory), Failure> {
    let bundle = load_dataset(dir)?;
    manifest.dataset_id = Some(dataset_id(dir)?);
    if bundle.dataset.is_empty() {
        return Err(Failure::data(format!("dataset {} has no days", dir.display())));
    }
    let history = EncodedHistory::new(&bundle.dataset, &EncodingSpec::default())?;
    Ok((bundle, history))
}

fn day_index(history: &EncodedHistory, date: NaiveDate, flag: &str) -> Result<usize, Failure> {
    history.index_of(date).ok_or_else(|| {
        Failure::data(format!(
            "{flag} {date} is outside the dataset ({} to {})",
            history.start_date(),
            history.date_at(history.len() - 1)
        ))
    })
}

fn summarize(m: &MetricReport) -> String {
    let f = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.3}"));
    format!(
        "TP={} FP={} FN={} TN={}  RE={} PR={:.3} F1={} SP={} BA={}",
        m.tp,
        m.fp,
        m.fn_,
        m.tn,
        f(m.recall),
        m.precision,
        f(m.f1),
        f(m.specificity),
        f(m.balanced_accuracy)
    )
}

pub fn simulate(a: &SimulateArgs, manifest: &mut Manifest) -> Outcome {
    manifest.set_out_dir(&a.out)?;
    manifest.seed = Some(a.seed);
    let mut cfg = match (&a.preset, &a.config) {
        (Some(p), _) => SimulationConfig::preset(*p, a.seed),
        (None, Some(path)) => {
            manifest.config_path = Some(path.clone());
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
        }
        (None, None) => return Err(Failure::usage("pass --preset or --config")),
    };
    cfg.seed = a.seed;
    if let Some(n) = a.length {
        cfg.length = n;
    }
    let sim = simulate_dataset(&cfg)?;
    let mut bundle = DatasetBundle::new(sim.dataset);
    bundle.ground_truth = Some(sim.probabilities);
    bundle.meta.preset = a.preset.map(|p| p.name().to_string());
    bundle.meta.seed = Some(a.seed);
    save_dataset(&bundle, &a.out)?;
    for f in [riskcast::data::SERIES_FILE, riskcast::data::COVARIATES_FILE, GROUND_TRUTH_FILE, META_FILE] {
        manifest.output(f);
    }
    write_json(manifest.output("simulation.json"), &cfg)?;
    manifest.dataset_id = Some(dataset_id(&a.out)?);

    let y = bundle.dataset.outcomes();
    let ones = y.iter().filter(|&&v| v == 1).count();
    println!(
        "simulated {} days from {} ({}, seed {}): {ones} accident days ({:.2}%)",
        y.len(),
        bundle.dataset.start_date(),
        bundle.meta.preset.as_deref().unwrap_or("custom config"),
        a.seed,
        100.0 * ones as f64 / y.len().max(1) as f64
    );
    println!("bundle written to {}", a.out.display());
    Ok(())
}

pub fn ingest(a: &IngestArgs, manifest: &mut Manifest) -> Outcome {
    manifest.set_out_dir(&a.out)?;
    let inspections = load_inspections(&a.inspections)?;
    let accidents = load_accidents(&a.accidents)?;
    let filter = RecordFilter { department: a.department.clone(), worker_class: a.worker_class };
    let dates: Vec<NaiveDate> = inspections
        .iter()
        .filter(|r| filter.keeps_inspection(r))
        .map(|r| r.date)
        .chain(accidents.iter().filter(|r| filter.keeps_accident(r)).map(|r| r.date))
        .collect();
    let start = a.start.or_else(|| dates.iter().min().copied());
    let end = a.end.or_else(|| dates.iter().max().copied());
    let (Some(start), Some(end)) = (start, end) else {
        return Err(Failure::data("no records pass the filter; pass --start and --end to build an empty-activity series"));
    };
    let range = DateRange::new(start, end).map_err(|e| Failure::usage(e.to_string()))?;
    let dataset = aggregate_daily(&inspections, &accidents, range, &filter)?;
    let mut bundle = DatasetBundle::new(dataset);
    bundle.meta.filter = Some(filter);
    save_dataset(&bundle, &a.out)?;
    for f in [riskcast::data::SERIES_FILE, riskcast::data::COVARIATES_FILE, META_FILE] {
        manifest.output(f);
    }
    manifest.dataset_id = Some(dataset_id(&a.out)?);
    let ones = bundle.dataset.outcomes().iter().filter(|&&v| v == 1).count();
    println!(
        "{} days from {start} to {end}: {ones} accident days, {} inspection records, {} accident records read",
        bundle.dataset.len(),
        inspections.len(),
        accidents.len()
    );
    Ok(())
}

pub fn tune(a: &TuneArgs, manifest: &mut Manifest) -> Outcome {
    manifest.set_out_dir(&a.out)?;
    manifest.seed = Some(a.seed);
    manifest.config_path = Some(a.grid.clone());
    let grid = Grid::load(&a.grid)?;
    let (_, history) = load_history(&a.dataset, manifest)?;
    let train_end = match a.split_date {
        Some(d) => day_index(&history, d, "--split-date")?,
        None => history.len(),
    };
    let cfg = TscvConfig {
        initial_window: a.initial_window.unwrap_or_else(|| initial_window(train_end)),
        step: a.step,
        metric: a.metric,
        horizon: a.horizon,
    };
    println!(
        "tuning {} candidate(s) on {train_end} days: initial window {}, step {}, metric {}",
        grid.candidates.len(),
        cfg.initial_window,
        cfg.step,
        cfg.metric
    );
    let result = run_tune(&history, train_end, &grid.candidates, &cfg, a.seed)?;
    write_json(manifest.output("tune.json"), &result)?;
    write_leaderboard(&manifest.output("leaderboard.csv"), &result)?;

    for (rank, e) in result.leaderboard.iter().enumerate().take(10) {
        let tau = e.tau.map_or("-".to_string(), |t| format!("{t:.2}"));
        match &e.error {
            None => println!("{:>3}. {:>7.4}  tau={tau}  {}", rank + 1, e.score, e.candidate.label()),
            Some(err) => println!("{:>3}. failed  {}: {err}", rank + 1, e.candidate.label()),
        }
    }
    println!("best: {} at tau={:.2}", result.best.label(), result.tau);
    Ok(())
}

fn write_leaderboard(path: &Path, r: &TuneResult) -> Result<(), Failure> {
    let err = |e: csv::Error| Failure::data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(["rank", "index", "score", "tau", "error", "candidate"]).map_err(err)?;
    for (rank, e) in r.leaderboard.iter().enumerate() {
        w.write_record([
            (rank + 1).to_string(),
            e.index.to_string(),
            e.score.to_string(),
            e.tau.map(|t| t.to_string()).unwrap_or_default(),
            e.error.clone().unwrap_or_default(),
            e.candidate.label(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

pub fn backtest(a: &BacktestArgs, manifest: &mut Manifest) -> Outcome {
    manifest.set_out_dir(&a.out)?;
    manifest.seed = Some(a.seed);
    let (candidate, tau) = match (&a.tuned, &a.model) {
        (Some(path), _) => {
            manifest.config_path = Some(path.clone());
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
            let t: TuneResult = serde_json::from_str(&text)
                .map_err(|e| Failure::usage(format!("{} is not a tune result: {e}", path.display())))?;
            (t.best, a.tau.unwrap_or(t.tau))
        }
        (None, Some(path)) => {
            manifest.config_path = Some(path.clone());
            let grid = Grid::load(path)?;
            let [c] = <[Candidate; 1]>::try_from(grid.candidates).map_err(|v| {
                Failure::usage(format!("{} expands to {} models; a backtest takes exactly one", path.display(), v.len()))
            })?;
            (c, a.tau.unwrap_or(DEFAULT_THRESHOLD))
        }
        (None, None) => return Err(Failure::usage("pass --tuned or --model")),
    };
    let tau = check_tau(tau)?;
    let (_, history) = load_history(&a.dataset, manifest)?;
    let split = day_index(&history, a.split_date, "--split-date")?;
    let model_id = a.model_id.clone().unwrap_or_else(|| candidate.model.family().to_string());
    let cfg = BacktestConfig {
        split,
        horizon: a.horizon,
        retrain_every: a.retrain_every,
        tau,
        seed: a.seed,
        model_id: model_id.clone(),
    };
    let result = run_backtest(&history, &candidate, &cfg)?;
    if !result.leaks().is_empty() {
        return Err(Failure {
            code: crate::EXIT_NUMERICAL,
            message: format!("leakage audit flagged {} forecast window(s)", result.leaks().len()),
        });
    }
    result.log.write_csv(manifest.output("predictions.csv"))?;
    write_json(manifest.output("audit.json"), &result.audit)?;
    if let Some(m) = &result.metrics {
        let row = MetricsRow {
            model: model_id.clone(),
            series: manifest.dataset_id.clone().unwrap_or_default(),
            report: m.clone(),
        };
        write_metrics_csv(manifest.output("metrics.csv"), std::slice::from_ref(&row))?;
        write_json(manifest.output("metrics.json"), &row)?;
    }

    // refit on everything for live use
    let lag = candidate.lag(a.horizon)?;
    let rows = history.view().build_rows(&lag, history.len())?;
    let forecaster = candidate.fit(&rows, &lag, derive_seed(a.seed, &[result.retrains as u64]))?;
    let deployed = DeployedModel {
        model_id: model_id.clone(),
        candidate: candidate.clone(),
        tau,
        trained_through: history.date_at(history.len() - 1),
        forecaster,
    };
    save_checkpoint(&deployed, manifest.output("model.json"))?;

    println!(
        "{model_id}: {} test days from {}, {} retrain(s), tau={tau}{}",
        result.log.len(),
        a.split_date,
        result.retrains,
        if result.log.truncated { " (last window truncated)" } else { "" }
    );
    match &result.metrics {
        Some(m) => println!("period metrics (H={}): {}", a.horizon, summarize(m)),
        None => println!("test span shorter than one period; no metrics"),
    }
    println!("leakage audit: {} windows, none read past its anchor", result.audit.len());
    Ok(())
}

fn require_monday(week: NaiveDate) -> Result<(), Failure> {
    if week.weekday() == Weekday::Mon {
        Ok(())
    } else {
        Err(Failure::usage(format!("--week {week} is a {}, not a Monday", week.weekday())))
    }
}

fn reports_from_log(a: &ReportArgs, path: &Path, tau: f64) -> Result<Vec<WeeklyReport>, Failure> {
    let log = PredictionLog::read_csv(path)?;
    let mut ids: Vec<&str> = log.records.iter().map(|r| r.model_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    let id = match (&a.model_id, ids.as_slice()) {
        (Some(id), _) => id.as_str(),
        (None, [only]) => only,
        (None, []) => return Err(Failure::data(format!("{} holds no predictions", path.display()))),
        (None, many) => {
            return Err(Failure::usage(format!("log holds several models ({}); pick one with --model-id", many.join(", "))))
        }
    };
    let by_date: BTreeMap<NaiveDate, (f64, u8)> = log
        .records
        .iter()
        .filter(|r| r.model_id == id)
        .map(|r| (r.date, (r.p_hat, r.y_true)))
        .collect();
    if by_date.is_empty() {
        return Err(Failure::data(format!("no predictions for model `{id}`")));
    }
    let week_of = |monday: NaiveDate| -> Option<(Vec<f64>, Vec<u8>)> {
        (0..7).map(|k| by_date.get(&(monday + Duration::days(k))).copied()).collect::<Option<Vec<_>>>().map(|v| v.into_iter().unzip())
    };
    let mondays: Vec<NaiveDate> = match a.week {
        Some(w) => vec![w],
        None => by_date.keys().copied().filter(|d| d.weekday() == Weekday::Mon).collect(),
    };
    let mut reports = Vec::new();
    for monday in mondays {
        let Some((probs, truth)) = week_of(monday) else {
            if a.week.is_some() {
                return Err(Failure::data(format!("the log does not cover all seven days from {monday}")));
            }
            continue;
        };
        let f = HorizonForecast::new(monday - Duration::days(1), probs, tau)?;
        reports.push(weekly_report(&f, Some(&truth))?);
    }
    if reports.is_empty() {
        return Err(Failure::data("the log covers no complete Monday-to-Sunday week"));
    }
    Ok(reports)
}

pub fn report(a: &ReportArgs, manifest: &mut Manifest) -> Outcome {
    manifest.set_out_dir(&a.out)?;
    if let Some(w) = a.week {
        require_monday(w)?;
    }
    let reports = match (&a.predictions, &a.model, &a.dataset) {
        (Some(path), _, _) => {
            manifest.config_path = Some(path.clone());
            let tau = check_tau(a.tau.unwrap_or(DEFAULT_THRESHOLD))?;
            reports_from_log(a, path, tau)?
        }
        (None, Some(model_path), Some(data)) => {
            manifest.config_path = Some(model_path.clone());
            let model: DeployedModel = load_checkpoint(model_path)?;
            let tau = check_tau(a.tau.unwrap_or(model.tau))?;
            let week = a.week.ok_or_else(|| Failure::usage("a live forecast needs --week"))?;
            let (_, history) = load_history(data, manifest)?;
            let lag = model.forecaster.lag();
            if lag.horizon != 7 {
                return Err(Failure::usage(format!("weekly reports need a 7-day model, this one forecasts {}", lag.horizon)));
            }
            let anchor = day_index(&history, week - Duration::days(1), "the day before --week")?;
            let state = history.view().anchor_state(anchor, lag)?;
            let forecast = model.forecaster.predict(&state)?.with_threshold(tau)?;
            let y = history.outcomes();
            let truth = (anchor + 7 < y.len()).then(|| &y[anchor + 1..anchor + 8]);
            vec![weekly_report(&forecast, truth)?]
        }
        _ => return Err(Failure::usage("pass --predictions, or --model with --dataset and --week")),
    };
    write_weekly_reports(manifest.output("weekly_report.csv"), &reports)?;
    for r in &reports {
        println!("{}", r.render());
    }
    let risky = reports.iter().filter(|r| r.status == riskcast::evaluation::PeriodStatus::Risky).count();
    println!("{} week(s), {risky} risky", reports.len());
    Ok(())
}

pub fn diagnose(a: &DiagnoseArgs, manifest: &mut Manifest) -> Outcome {
    manifest.set_out_dir(&a.out)?;
    let (bundle, _) = load_history(&a.dataset, manifest)?;
    let y = bundle.dataset.series()?;
    let rates = rate_evolution(&y)?;
    let kappa = kappa_autocorr(&y, a.max_lag).map_err(|e| Failure::usage(e.to_string()))?;
    let profile = calendar_profile(&y)?;
    write_rate_evolution(manifest.output("rate_evolution.csv"), &y, &rates)?;
    write_kappa(manifest.output("kappa.csv"), &kappa)?;
    write_calendar_profile(manifest.output("calendar_profile.csv"), &profile)?;

    let (s0, s1) = rates.terminal_slopes();
    println!(
        "{} days from {}: accident-day share {s1:.4}, accident-free share {s0:.4}",
        y.len(),
        y.start_date()
    );
    match &kappa.note {
        Some(note) => println!("kappa: {note}"),
        None => {
            let shown: Vec<String> =
                kappa.kappa.iter().take(7).enumerate().map(|(l, k)| format!("{}:{k:.3}", l + 1)).collect();
            println!("kappa by lag: {}", shown.join("  "));
        }
    }
    let days = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];
    let shares: Vec<String> =
        days.iter().zip(profile.weekday_shares).map(|(d, s)| format!("{d} {:.1}%", 100.0 * s)).collect();
    println!("accidents by weekday: {}", shares.join(", "));
    Ok(())
}
