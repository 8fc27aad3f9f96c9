//! Plot-ready CSV and JSON exports.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::diagnostics::{CalendarProfile, KappaCurve, RateEvolution};
use super::metrics::MetricReport;
use super::report::{WeeklyReport, WEEK_DAYS};
use crate::error::{Error, Result};
use crate::series::BinaryDailySeries;

const MONTHS: [&str; 12] = [
    "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec",
];

/// Metrics of one model on one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub model: String,
    pub series: String,
    #[serde(flatten)]
    pub report: MetricReport,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_metrics_csv(path: impl AsRef<Path>, rows: &[MetricsRow]) -> Result<()> {
    let header = [
        "model", "series", "tp", "fp", "fn", "tn", "recall", "precision", "f1", "specificity",
        "balanced_accuracy", "flags",
    ];
    write_rows(
        path.as_ref(),
        &header,
        rows.iter().map(|r| {
            let m = &r.report;
            let flags: Vec<String> = m
                .flags
                .iter()
                .map(|f| serde_json::to_value(f).unwrap().as_str().unwrap().to_string())
                .collect();
            vec![
                r.model.clone(),
                r.series.clone(),
                m.tp.to_string(),
                m.fp.to_string(),
                m.fn_.to_string(),
                m.tn.to_string(),
                opt(m.recall),
                m.precision.to_string(),
                opt(m.f1),
                opt(m.specificity),
                opt(m.balanced_accuracy),
                flags.join(";"),
            ]
        }),
    )
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Serde(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn write_rate_evolution(path: impl AsRef<Path>, y: &BinaryDailySeries, r: &RateEvolution) -> Result<()> {
    write_rows(
        path.as_ref(),
        &["date", "s0", "s1"],
        y.dates()
            .zip(r.zeros.iter().zip(&r.ones))
            .map(|(d, (s0, s1))| vec![d.to_string(), s0.to_string(), s1.to_string()]),
    )
}

pub fn write_kappa(path: impl AsRef<Path>, k: &KappaCurve) -> Result<()> {
    write_rows(
        path.as_ref(),
        &["lag", "kappa"],
        k.kappa
            .iter()
            .enumerate()
            .map(|(i, v)| vec![(i + 1).to_string(), v.to_string()]),
    )
}

pub fn write_calendar_profile(path: impl AsRef<Path>, p: &CalendarProfile) -> Result<()> {
    let weekdays = (0..7).map(|k| {
        vec![
            "weekday".into(),
            WEEK_DAYS[k].into(),
            p.weekday_days[k].to_string(),
            p.weekday_accidents[k].to_string(),
            p.weekday_shares[k].to_string(),
        ]
    });
    let months = (0..12).map(|k| {
        vec![
            "month".into(),
            MONTHS[k].into(),
            p.month_days[k].to_string(),
            p.month_accidents[k].to_string(),
            p.month_shares[k].to_string(),
        ]
    });
    write_rows(
        path.as_ref(),
        &["scale", "key", "days", "accidents", "share"],
        weekdays.chain(months),
    )
}

/// One row per week. Probabilities carry three decimals. The actual-accident
/// and bias columns appear only when every week has known outcomes.
pub fn write_weekly_reports(path: impl AsRef<Path>, reports: &[WeeklyReport]) -> Result<()> {
    let with_truth = !reports.is_empty() && reports.iter().all(|r| r.actual_accidents.is_some());
    let mut header: Vec<String> = vec!["week_start".into()];
    header.extend(WEEK_DAYS.iter().map(|d| format!("p_{d}")));
    header.extend(WEEK_DAYS.iter().map(|d| format!("forecast_{d}")));
    header.push("predicted_accidents".into());
    if with_truth {
        header.push("actual_accidents".into());
        header.push("bias".into());
    }
    header.push("status".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(
        path.as_ref(),
        &header,
        reports.iter().map(|r| {
            let mut row = vec![r.week_start.to_string()];
            row.extend(r.probabilities.iter().map(|p| format!("{p:.3}")));
            row.extend(r.forecasts.iter().map(|f| f.to_string()));
            row.push(r.predicted_accidents.to_string());
            if with_truth {
                row.push(r.actual_accidents.unwrap().to_string());
                row.push(r.bias.unwrap().to_string());
            }
            row.push(r.status.to_string());
            row
        }),
    )
}
