//! Period aggregation and the imbalance-robust metric set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PeriodStatus {
    Risky,
    Safe,
}

impl std::fmt::Display for PeriodStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PeriodStatus::Risky => "Risky",
            PeriodStatus::Safe => "Safe",
        })
    }
}

/// One complete block of `H` days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodOutcome {
    pub index: usize,
    /// Offset of the first day in the input sequences.
    pub first_day: usize,
    pub risk_true: u8,
    pub risk_pred: u8,
    pub predicted_accident_days: usize,
    pub actual_accident_days: usize,
    pub bias: i64,
    pub status: PeriodStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodAggregation {
    pub horizon: usize,
    pub periods: Vec<PeriodOutcome>,
    /// Trailing days that did not fill a period.
    pub dropped_days: usize,
}

/// Splits aligned daily truth and decisions into `floor(T / H)` periods. A
/// period is risky when any of its days is.
pub fn aggregate_periods(y_true: &[u8], y_pred: &[u8], horizon: usize) -> Result<PeriodAggregation> {
    if y_true.len() != y_pred.len() {
        return Err(Error::invalid(format!(
            "{} true days but {} predicted days",
            y_true.len(),
            y_pred.len()
        )));
    }
    if horizon == 0 || y_true.len() < horizon {
        return Err(Error::invalid(format!(
            "{} day(s) cannot form a period of {horizon}",
            y_true.len()
        )));
    }
    if y_true.iter().chain(y_pred).any(|&v| v > 1) {
        return Err(Error::invalid("daily outcomes must be binary"));
    }
    let periods = y_true
        .chunks_exact(horizon)
        .zip(y_pred.chunks_exact(horizon))
        .enumerate()
        .map(|(j, (t, p))| {
            let actual = t.iter().filter(|&&v| v == 1).count();
            let predicted = p.iter().filter(|&&v| v == 1).count();
            let risk_pred = u8::from(predicted > 0);
            PeriodOutcome {
                index: j,
                first_day: j * horizon,
                risk_true: u8::from(actual > 0),
                risk_pred,
                predicted_accident_days: predicted,
                actual_accident_days: actual,
                bias: predicted as i64 - actual as i64,
                status: if risk_pred == 1 { PeriodStatus::Risky } else { PeriodStatus::Safe },
            }
        })
        .collect();
    Ok(PeriodAggregation {
        horizon,
        periods,
        dropped_days: y_true.len() % horizon,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricFlag {
    /// No period was predicted risky; precision is reported as 0.
    NoPredictedPositives,
    /// No period was truly risky; recall and BA are undefined.
    InsufficientPositivePeriods,
    /// No period was truly safe; specificity and BA are undefined.
    InsufficientNegativePeriods,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub recall: Option<f64>,
    pub precision: f64,
    pub f1: Option<f64>,
    pub specificity: Option<f64>,
    pub balanced_accuracy: Option<f64>,
    pub flags: Vec<MetricFlag>,
}

impl MetricReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let mut flags = Vec::new();
        let ratio = |a: usize, b: usize| a as f64 / (a + b) as f64;
        let precision = if tp + fp == 0 {
            flags.push(MetricFlag::NoPredictedPositives);
            0.0
        } else {
            ratio(tp, fp)
        };
        let recall = if tp + fn_ == 0 {
            flags.push(MetricFlag::InsufficientPositivePeriods);
            None
        } else {
            Some(ratio(tp, fn_))
        };
        let specificity = if tn + fp == 0 {
            flags.push(MetricFlag::InsufficientNegativePeriods);
            None
        } else {
            Some(ratio(tn, fp))
        };
        let f1 = recall.map(|re| if precision + re > 0.0 { 2.0 * precision * re / (precision + re) } else { 0.0 });
        let balanced_accuracy = recall.zip(specificity).map(|(re, sp)| (re + sp) / 2.0);
        Self {
            tp,
            fp,
            fn_,
            tn,
            recall,
            precision,
            f1,
            specificity,
            balanced_accuracy,
            flags,
        }
    }

    pub fn periods(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Confusion counts over period indicators and the derived metrics.
pub fn compute_metrics(periods: &[PeriodOutcome]) -> Result<MetricReport> {
    if periods.is_empty() {
        return Err(Error::invalid("metrics need at least one period"));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for p in periods {
        match (p.risk_true, p.risk_pred) {
            (1, 1) => tp += 1,
            (0, 1) => fp += 1,
            (1, 0) => fn_ += 1,
            _ => tn += 1,
        }
    }
    Ok(MetricReport::from_counts(tp, fp, fn_, tn))
}

/// Aggregates at period length `horizon` and scores in one step.
pub fn period_metrics(y_true: &[u8], y_pred: &[u8], horizon: usize) -> Result<MetricReport> {
    compute_metrics(&aggregate_periods(y_true, y_pred, horizon)?.periods)
}
