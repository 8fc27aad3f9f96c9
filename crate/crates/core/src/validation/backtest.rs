//! Rolling-origin evaluation on a held-out span with periodic retraining.

use serde::{Deserialize, Serialize};

use super::engine::{AccessRecord, Walk};
use super::predictions::PredictionLog;
use super::spec::Candidate;
use crate::error::{Error, Result};
use crate::evaluation::MetricReport;
use crate::series::EncodedHistory;
use crate::strategy::binarize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    /// Index of the first test day; training uses only earlier days.
    pub split: usize,
    pub horizon: usize,
    /// Days between refits; the usual choice is the horizon.
    pub retrain_every: usize,
    pub tau: f64,
    pub seed: u64,
    pub model_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestResult {
    pub log: PredictionLog,
    pub audit: Vec<AccessRecord>,
    pub retrains: usize,
    /// Period metrics at the configured threshold; absent when the test span
    /// is shorter than one period.
    pub metrics: Option<MetricReport>,
}

impl BacktestResult {
    pub fn leaks(&self) -> Vec<&AccessRecord> {
        self.audit.iter().filter(|a| a.leaked()).collect()
    }

    pub fn decisions(&self, tau: f64) -> Result<Vec<u8>> {
        binarize(&self.log.p_hat(), tau)
    }
}

/// Forecasts every day from `split` to the end of the history exactly once,
/// `H` days at a time, refitting on all earlier days every `retrain_every`
/// days with the hyperparameters frozen.
pub fn backtest(history: &EncodedHistory, candidate: &Candidate, cfg: &BacktestConfig) -> Result<BacktestResult> {
    if cfg.horizon == 0 || cfg.retrain_every == 0 {
        return Err(Error::Config("horizon and retrain_every must be >= 1".into()));
    }
    if cfg.split == 0 || cfg.split >= history.len() {
        return Err(Error::Config(format!(
            "split index {} leaves no training or no test days in {} days",
            cfg.split,
            history.len()
        )));
    }
    let walk = Walk {
        history,
        candidate,
        lag: candidate.lag(cfg.horizon)?,
        start: cfg.split,
        end: history.len(),
        retrain_every: cfg.retrain_every,
        seed: cfg.seed,
        model_id: cfg.model_id.clone(),
        retrain_offset: 0,
    };
    let (log, audit) = walk.run()?;
    let retrains = audit.last().map_or(0, |a| a.retrain_id + 1);
    let metrics = if log.len() >= cfg.horizon {
        Some(log.metrics(cfg.tau, cfg.horizon)?)
    } else {
        None
    };
    Ok(BacktestResult {
        log,
        audit,
        retrains,
        metrics,
    })
}
