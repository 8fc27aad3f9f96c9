//! Walk-forward forecasting shared by tuning and backtests, with a record of
//! the latest day each fit and forecast read.

use serde::{Deserialize, Serialize};

use super::predictions::{PredictionLog, PredictionRecord};
use super::spec::{derive_seed, Candidate};
use crate::error::Result;
use crate::series::{EncodedHistory, LagConfig};
use crate::strategy::Forecaster;

/// Data access of one forecast window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessRecord {
    pub retrain_id: usize,
    /// Index of the first forecast day; nothing at or after it may be read.
    pub forecast_start: usize,
    /// Latest day read while building the training rows of the model in use.
    pub fit_max_read: Option<usize>,
    /// Latest day read while building the forecast input.
    pub predict_max_read: Option<usize>,
}

impl AccessRecord {
    pub fn leaked(&self) -> bool {
        [self.fit_max_read, self.predict_max_read]
            .iter()
            .flatten()
            .any(|&i| i >= self.forecast_start)
    }
}

pub(crate) struct Walk<'a> {
    pub history: &'a EncodedHistory,
    pub candidate: &'a Candidate,
    pub lag: LagConfig,
    /// Forecast days `start..end`.
    pub start: usize,
    pub end: usize,
    /// Refit once the anchor has moved this many days since the last fit.
    pub retrain_every: usize,
    pub seed: u64,
    pub model_id: String,
    /// Added to the fit counter in `retrain_id`.
    pub retrain_offset: usize,
}

impl Walk<'_> {
    /// Windows of `H` days from `start`, each forecast from the day before it.
    /// The model is refit on every day before the window when due.
    pub fn run(&self) -> Result<(PredictionLog, Vec<AccessRecord>)> {
        let h = self.lag.horizon;
        let truth = self.history.outcomes();
        let mut log = PredictionLog::new();
        let mut audit = Vec::new();
        let mut fitted: Option<(Forecaster, usize, Option<usize>)> = None;
        let mut fits = 0;
        let mut window = self.start;
        while window < self.end {
            let anchor = window - 1;
            let due = fitted
                .as_ref()
                .is_none_or(|(_, last, _)| window - last >= self.retrain_every);
            if due {
                let retrain_id = self.retrain_offset + fits;
                let view = self.history.view();
                let rows = view.build_rows(&self.lag, window)?;
                let model = self.candidate.fit(&rows, &self.lag, derive_seed(self.seed, &[retrain_id as u64]))?;
                fitted = Some((model, window, view.max_read()));
                fits += 1;
            }
            let (model, _, fit_read) = fitted.as_ref().unwrap();
            let view = self.history.view();
            let forecast = model.predict(&view.anchor_state(anchor, &self.lag)?)?;
            let retrain_id = self.retrain_offset + fits - 1;
            audit.push(AccessRecord {
                retrain_id,
                forecast_start: window,
                fit_max_read: *fit_read,
                predict_max_read: view.max_read(),
            });
            let stop = (window + h).min(self.end);
            log.truncated |= stop - window < h;
            for day in window..stop {
                let k = day - window;
                log.push(PredictionRecord {
                    date: self.history.date_at(day),
                    y_true: truth[day],
                    p_hat: forecast.probabilities[k],
                    horizon: k + 1,
                    retrain_id,
                    model_id: self.model_id.clone(),
                })?;
            }
            window = stop;
        }
        Ok((log, audit))
    }
}
