//! Threshold calibration and the scoring metric used for model selection.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::predictions::PredictionLog;
use crate::error::{Error, Result};
use crate::evaluation::{aggregate_periods, period_metrics, MetricReport};
use crate::strategy::{binarize, DEFAULT_THRESHOLD};

/// Threshold grid `0.00, 0.05, ..., 1.00`.
pub fn threshold_grid() -> impl Iterator<Item = f64> {
    (0..=20).map(|k| k as f64 / 20.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub tau: f64,
    /// Period balanced accuracy at `tau`, when defined.
    pub balanced_accuracy: Option<f64>,
    pub warning: Option<String>,
}

/// Picks the grid threshold with the highest period-level balanced accuracy;
/// ties go to the smallest threshold.
pub fn calibrate_threshold(log: &PredictionLog, horizon: usize) -> Result<Calibration> {
    let y = log.y_true();
    let p = log.p_hat();
    let agg = aggregate_periods(&y, &vec![0; y.len()], horizon)?;
    if agg.periods.len() < 2 {
        return Err(Error::invalid(format!(
            "calibration needs at least 2 periods of {horizon} days, the log has {} day(s)",
            y.len()
        )));
    }
    let risky = agg.periods.iter().filter(|q| q.risk_true == 1).count();
    if risky == 0 || risky == agg.periods.len() {
        let msg = format!(
            "every period of the calibration log is {}; threshold left at {DEFAULT_THRESHOLD}",
            if risky == 0 { "safe" } else { "risky" }
        );
        log::warn!("{msg}");
        return Ok(Calibration {
            tau: DEFAULT_THRESHOLD,
            balanced_accuracy: None,
            warning: Some(msg),
        });
    }
    let mut best: Option<(f64, f64)> = None;
    for tau in threshold_grid() {
        let ba = period_metrics(&y, &binarize(&p, tau)?, horizon)?
            .balanced_accuracy
            .expect("both classes present");
        if best.is_none_or(|(_, b)| ba > b) {
            best = Some((tau, ba));
        }
    }
    let (tau, ba) = best.unwrap();
    Ok(Calibration {
        tau,
        balanced_accuracy: Some(ba),
        warning: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Period,
    Daily,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Ba,
    F1,
    Recall,
    Precision,
    Specificity,
}

/// Selection metric, written `<granularity>_<kind>`, e.g. `period_ba`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metric {
    pub granularity: Granularity,
    pub kind: MetricKind,
}

impl Default for Metric {
    fn default() -> Self {
        Self {
            granularity: Granularity::Period,
            kind: MetricKind::Ba,
        }
    }
}

impl Metric {
    /// Undefined values (e.g. BA without positive periods) score as `None`.
    pub fn value(&self, report: &MetricReport) -> Option<f64> {
        match self.kind {
            MetricKind::Ba => report.balanced_accuracy,
            MetricKind::F1 => report.f1,
            MetricKind::Recall => report.recall,
            MetricKind::Precision => Some(report.precision),
            MetricKind::Specificity => report.specificity,
        }
    }

    /// Scores a log at threshold `tau`.
    pub fn score(&self, log: &PredictionLog, tau: f64, horizon: usize) -> Result<Option<f64>> {
        let period = match self.granularity {
            Granularity::Period => horizon,
            Granularity::Daily => 1,
        };
        Ok(self.value(&log.metrics(tau, period)?))
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = match self.granularity {
            Granularity::Period => "period",
            Granularity::Daily => "daily",
        };
        let k = match self.kind {
            MetricKind::Ba => "ba",
            MetricKind::F1 => "f1",
            MetricKind::Recall => "recall",
            MetricKind::Precision => "precision",
            MetricKind::Specificity => "specificity",
        };
        write!(f, "{g}_{k}")
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (g, k) = s
            .split_once('_')
            .ok_or_else(|| Error::Config(format!("metric `{s}` is not of the form <period|daily>_<name>")))?;
        let granularity = match g {
            "period" => Granularity::Period,
            "daily" => Granularity::Daily,
            _ => return Err(Error::Config(format!("unknown metric granularity `{g}`"))),
        };
        let kind = match k {
            "ba" => MetricKind::Ba,
            "f1" => MetricKind::F1,
            "recall" => MetricKind::Recall,
            "precision" => MetricKind::Precision,
            "specificity" => MetricKind::Specificity,
            _ => return Err(Error::Config(format!("unknown metric `{k}`"))),
        };
        Ok(Self { granularity, kind })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validation::predictions::PredictionRecord;
    use chrono::NaiveDate;

    fn log_of(y: &[u8], p: &[f64]) -> PredictionLog {
        let start = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
        let mut log = PredictionLog::new();
        for (i, (&y, &p)) in y.iter().zip(p).enumerate() {
            log.push(PredictionRecord {
                date: start + chrono::Duration::days(i as i64),
                y_true: y,
                p_hat: p,
                horizon: i % 7 + 1,
                retrain_id: 0,
                model_id: "m".into(),
            })
            .unwrap();
        }
        log
    }

    #[test]
    fn separable_case_takes_smallest_optimal_grid_point() {
        // risky weeks peak at 0.72 or more, safe weeks stay at or below 0.33
        let mut y = vec![0u8; 28];
        let mut p = vec![0.1; 28];
        y[3] = 1;
        p[3] = 0.72;
        y[17] = 1;
        p[17] = 0.9;
        p[9] = 0.33;
        let c = calibrate_threshold(&log_of(&y, &p), 7).unwrap();
        assert_eq!(c.tau, 0.35);
        assert_eq!(c.balanced_accuracy, Some(1.0));
    }

    #[test]
    fn flat_probabilities_tie_to_smallest() {
        let mut y = vec![0u8; 21];
        y[1] = 1;
        let c = calibrate_threshold(&log_of(&y, &[0.5; 21]), 7).unwrap();
        // every tau gives BA 0.5
        assert_eq!(c.tau, 0.0);
        assert_eq!(c.balanced_accuracy, Some(0.5));
    }

    #[test]
    fn table_weeks_admit_point_six() {
        let p = [
            0.996, 0.620, 0.002, 0.001, 0.012, 0.001, 0.013, 0.000, 0.001, 0.000, 0.000, 0.000, 0.000, 0.004,
        ];
        let mut y = vec![0u8; 14];
        y[0] = 1;
        let log = log_of(&y, &p);
        let ba = log.metrics(0.6, 7).unwrap().balanced_accuracy;
        assert_eq!(ba, Some(1.0));
        let c = calibrate_threshold(&log, 7).unwrap();
        assert_eq!(c.balanced_accuracy, Some(1.0));
        assert!(c.tau <= 0.6);
    }

    #[test]
    fn single_class_truth_falls_back() {
        let c = calibrate_threshold(&log_of(&[0; 14], &[0.2; 14]), 7).unwrap();
        assert_eq!(c.tau, 0.5);
        assert!(c.warning.is_some());
        assert!(calibrate_threshold(&log_of(&[0, 1, 0], &[0.2; 3]), 7).is_err());
    }

    #[test]
    fn metric_names_round_trip() {
        for s in ["period_ba", "daily_f1", "period_specificity"] {
            assert_eq!(s.parse::<Metric>().unwrap().to_string(), s);
        }
        assert!("weekly_ba".parse::<Metric>().is_err());
    }
}
