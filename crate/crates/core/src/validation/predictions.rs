//! Flat record of every out-of-sample forecast day.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowError};
use crate::evaluation::{period_metrics, MetricReport};
use crate::strategy::binarize;

pub const LOG_COLUMNS: [&str; 6] = ["date", "y_true", "p_hat", "horizon", "retrain_id", "model_id"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub date: NaiveDate,
    pub y_true: u8,
    pub p_hat: f64,
    /// Days ahead of the anchor the forecast was issued from.
    pub horizon: usize,
    /// Fold number in tuning, retrain counter in backtests.
    pub retrain_id: usize,
    pub model_id: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PredictionLog {
    pub records: Vec<PredictionRecord>,
    /// Set when the last forecast window was cut short by the end of the data.
    pub truncated: bool,
}

impl PredictionLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record; dates must increase strictly within each model.
    pub fn push(&mut self, record: PredictionRecord) -> Result<()> {
        if let Some(prev) = self.records.iter().rev().find(|r| r.model_id == record.model_id) {
            if record.date <= prev.date {
                return Err(Error::invalid(format!(
                    "log for `{}` would go from {} back to {}",
                    record.model_id, prev.date, record.date
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    /// Concatenates logs in order.
    pub fn extend(&mut self, other: PredictionLog) -> Result<()> {
        for r in other.records {
            self.push(r)?;
        }
        self.truncated |= other.truncated;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn y_true(&self) -> Vec<u8> {
        self.records.iter().map(|r| r.y_true).collect()
    }

    pub fn p_hat(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.p_hat).collect()
    }

    /// Period metrics after thresholding at `tau`, periods of `horizon` days
    /// counted from the first record.
    pub fn metrics(&self, tau: f64, horizon: usize) -> Result<MetricReport> {
        period_metrics(&self.y_true(), &binarize(&self.p_hat(), tau)?, horizon)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(LOG_COLUMNS).map_err(|e| Error::csv(path, e))?;
        for r in &self.records {
            w.write_record([
                r.date.to_string(),
                r.y_true.to_string(),
                r.p_hat.to_string(),
                r.horizon.to_string(),
                r.retrain_id.to_string(),
                r.model_id.clone(),
            ])
            .map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a log written by [`PredictionLog::write_csv`]. The truncation
    /// flag is not part of the file and comes back unset.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut rd = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let headers = rd.headers().map_err(|e| Error::csv(path, e))?.clone();
        if headers.iter().ne(LOG_COLUMNS) {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                message: format!("expected columns {}, found {}", LOG_COLUMNS.join(","), headers.iter().collect::<Vec<_>>().join(",")),
            });
        }
        let mut log = PredictionLog::new();
        let mut errors = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let line = i as u64 + 2;
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let bad = |col: &str, msg: String| RowError { line, column: Some(col.to_string()), message: msg };
            let parsed = (|| -> std::result::Result<PredictionRecord, RowError> {
                let date = rec[0].parse().map_err(|e| bad("date", format!("{e}")))?;
                let y_true = match &rec[1] {
                    "0" => 0,
                    "1" => 1,
                    other => return Err(bad("y_true", format!("`{other}` is not 0 or 1"))),
                };
                let p_hat: f64 = rec[2].parse().map_err(|e| bad("p_hat", format!("{e}")))?;
                if !(0.0..=1.0).contains(&p_hat) {
                    return Err(bad("p_hat", format!("{p_hat} outside [0, 1]")));
                }
                let horizon = rec[3].parse().map_err(|e| bad("horizon", format!("{e}")))?;
                let retrain_id = rec[4].parse().map_err(|e| bad("retrain_id", format!("{e}")))?;
                Ok(PredictionRecord { date, y_true, p_hat, horizon, retrain_id, model_id: rec[5].to_string() })
            })();
            match parsed {
                Ok(r) => {
                    if let Err(e) = log.push(r) {
                        errors.push(RowError { line, column: Some("date".into()), message: e.to_string() });
                    }
                }
                Err(e) => errors.push(e),
            }
        }
        if !errors.is_empty() {
            return Err(Error::Rows { path: path.to_path_buf(), errors });
        }
        Ok(log)
    }
}
