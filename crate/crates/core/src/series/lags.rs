//! Lag embedding: turns the daily outcome, covariate and calendar streams into
//! supervised rows anchored at a day `t`, with targets strictly after `t`.

use std::cell::Cell;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::calendar::{encode_calendar, CALENDAR_WIDTH};
use super::covariates::{encode_covariates, DailyCovariates, EncodingSpec, COVARIATE_WIDTH};
use super::dataset::{BinaryDailySeries, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagConfig {
    /// Number of lagged outcome days (d_y).
    pub outcome_lags: usize,
    /// Number of lagged covariate days (d_c).
    pub covariate_lags: usize,
    /// Forecast horizon in days (H).
    pub horizon: usize,
}

impl LagConfig {
    pub fn new(outcome_lags: usize, covariate_lags: usize, horizon: usize) -> Result<Self> {
        let cfg = Self {
            outcome_lags,
            covariate_lags,
            horizon,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.outcome_lags == 0 || self.covariate_lags == 0 || self.horizon == 0 {
            return Err(Error::invalid(format!(
                "lag depths and horizon must be >= 1, got d_y={} d_c={} H={}",
                self.outcome_lags, self.covariate_lags, self.horizon
            )));
        }
        Ok(())
    }

    /// Days of history needed before the first anchor: max(d_y, d_c).
    pub fn window(&self) -> usize {
        self.outcome_lags.max(self.covariate_lags)
    }

    /// Number of training rows a series of `len` days yields.
    pub fn row_count(&self, len: usize) -> usize {
        (len + 1).saturating_sub(self.horizon + self.window())
    }
}

/// Everything known at the end of day `t` that a forecaster may consume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorState {
    pub anchor: usize,
    pub anchor_date: NaiveDate,
    /// `y_t, y_{t-1}, ..., y_{t-d_y+1}`.
    pub outcome_lags: Vec<f64>,
    /// `c_t, ..., c_{t-d_c+1}`, each [`COVARIATE_WIDTH`] wide, flattened.
    pub covariate_lags: Vec<f64>,
    /// One-hot calendar rows for `t+1, ..., t+H`, flattened.
    pub calendar: Vec<f64>,
}

impl AnchorState {
    pub fn horizon(&self) -> usize {
        self.calendar.len() / CALENDAR_WIDTH
    }

    pub fn outcome_depth(&self) -> usize {
        self.outcome_lags.len()
    }

    pub fn covariate_depth(&self) -> usize {
        self.covariate_lags.len() / COVARIATE_WIDTH
    }

    /// Calendar encoding for `t+h` (1-based `h`).
    pub fn calendar_at(&self, h: usize) -> &[f64] {
        &self.calendar[(h - 1) * CALENDAR_WIDTH..h * CALENDAR_WIDTH]
    }

    /// Covariates of `t - lag` (0 = the anchor day).
    pub fn covariates_at(&self, lag: usize) -> &[f64] {
        &self.covariate_lags[lag * COVARIATE_WIDTH..(lag + 1) * COVARIATE_WIDTH]
    }

    pub fn base_width(&self) -> usize {
        self.outcome_lags.len() + self.covariate_lags.len()
    }

    /// Outcome lags followed by covariate lags.
    pub fn base_features(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.base_width());
        v.extend_from_slice(&self.outcome_lags);
        v.extend_from_slice(&self.covariate_lags);
        v
    }

    /// Input of the horizon-`h` learner of a direct-recursive ensemble:
    /// the `h-1` recycled values (most recent horizon first), the lag block
    /// and the calendar of `t+h`.
    pub fn recursive_features(&self, h: usize, recycled: &[f64]) -> Vec<f64> {
        debug_assert_eq!(recycled.len(), h - 1);
        let mut v = Vec::with_capacity(recycled.len() + self.base_width() + CALENDAR_WIDTH);
        v.extend_from_slice(recycled);
        v.extend_from_slice(&self.outcome_lags);
        v.extend_from_slice(&self.covariate_lags);
        v.extend_from_slice(self.calendar_at(h));
        v
    }

    /// Lag block followed by the whole calendar block.
    pub fn joint_features(&self) -> Vec<f64> {
        let mut v = self.base_features();
        v.extend_from_slice(&self.calendar);
        v
    }

    /// Width of each step of [`AnchorState::sequence`].
    pub const STEP_WIDTH: usize = 1 + COVARIATE_WIDTH;

    /// The lag window as a chronological sequence (oldest day first). Each step
    /// holds that day's outcome and covariates; slots beyond a block's lag
    /// depth are zero.
    pub fn sequence(&self) -> Vec<[f64; Self::STEP_WIDTH]> {
        let dy = self.outcome_depth();
        let dc = self.covariate_depth();
        let window = dy.max(dc);
        (0..window)
            .rev()
            .map(|lag| {
                let mut step = [0.0; Self::STEP_WIDTH];
                if lag < dy {
                    step[0] = self.outcome_lags[lag];
                }
                if lag < dc {
                    step[1..].copy_from_slice(self.covariates_at(lag));
                }
                step
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisedRow {
    pub state: AnchorState,
    /// `y_{t+1}, ..., y_{t+H}`.
    pub targets: Vec<u8>,
}

/// Encoded outcomes and covariates, ready for lag embedding.
#[derive(Debug, Clone)]
pub struct EncodedHistory {
    start_date: NaiveDate,
    outcomes: Vec<u8>,
    covariates: Vec<[f64; COVARIATE_WIDTH]>,
    spec: EncodingSpec,
}

impl EncodedHistory {
    pub fn new(dataset: &Dataset, spec: &EncodingSpec) -> Result<Self> {
        let covariates = dataset
            .covariates()
            .iter()
            .map(|c| encode_covariates(c, spec))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            start_date: dataset.start_date(),
            outcomes: dataset.outcomes().to_vec(),
            covariates,
            spec: spec.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.start_date + Duration::days(index as i64)
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = (date - self.start_date).num_days();
        (offset >= 0 && (offset as usize) < self.len()).then_some(offset as usize)
    }

    pub fn spec(&self) -> &EncodingSpec {
        &self.spec
    }

    /// Ground truth, for scoring only. Feature construction goes through a
    /// [`HistoryView`].
    pub fn outcomes(&self) -> &[u8] {
        &self.outcomes
    }

    pub fn view(&self) -> HistoryView<'_> {
        HistoryView {
            history: self,
            max_read: Cell::new(None),
        }
    }

    /// Calendar rows for the `horizon` days after `anchor`. Dates may run past
    /// the end of the history.
    fn calendar_block(&self, anchor: usize, horizon: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(horizon * CALENDAR_WIDTH);
        for h in 1..=horizon {
            let date = self.date_at(anchor + h);
            out.extend_from_slice(&encode_calendar(date, &self.spec.summer_break).one_hot());
        }
        out
    }
}

/// Read access to an [`EncodedHistory`] that remembers the latest day index
/// touched, so callers can prove which data a fit or forecast consumed.
pub struct HistoryView<'a> {
    history: &'a EncodedHistory,
    max_read: Cell<Option<usize>>,
}

impl HistoryView<'_> {
    fn touch(&self, index: usize) {
        let seen = self.max_read.get().map_or(index, |m| m.max(index));
        self.max_read.set(Some(seen));
    }

    pub fn outcome(&self, index: usize) -> f64 {
        self.touch(index);
        self.history.outcomes[index] as f64
    }

    pub fn covariates(&self, index: usize) -> &[f64; COVARIATE_WIDTH] {
        self.touch(index);
        &self.history.covariates[index]
    }

    /// Highest day index read so far, if any.
    pub fn max_read(&self) -> Option<usize> {
        self.max_read.get()
    }

    /// Inputs available at the end of day `anchor`.
    pub fn anchor_state(&self, anchor: usize, lag: &LagConfig) -> Result<AnchorState> {
        lag.validate()?;
        if anchor + 1 < lag.window() {
            return Err(Error::InsufficientHistory(format!(
                "anchor {anchor} has {} day(s) of history, {} needed",
                anchor + 1,
                lag.window()
            )));
        }
        if anchor >= self.history.len() {
            return Err(Error::InsufficientHistory(format!(
                "anchor {anchor} lies beyond the {} observed days",
                self.history.len()
            )));
        }
        let outcome_lags = (0..lag.outcome_lags).map(|k| self.outcome(anchor - k)).collect();
        let mut covariate_lags = Vec::with_capacity(lag.covariate_lags * COVARIATE_WIDTH);
        for k in 0..lag.covariate_lags {
            covariate_lags.extend_from_slice(self.covariates(anchor - k));
        }
        Ok(AnchorState {
            anchor,
            anchor_date: self.history.date_at(anchor),
            outcome_lags,
            covariate_lags,
            calendar: self.history.calendar_block(anchor, lag.horizon),
        })
    }

    /// Training rows that only use days `< end`: every anchor `t` with
    /// `t >= max(d_y, d_c) - 1` and `t + H <= end - 1`.
    pub fn build_rows(&self, lag: &LagConfig, end: usize) -> Result<Vec<SupervisedRow>> {
        lag.validate()?;
        let end = end.min(self.history.len());
        let count = lag.row_count(end);
        if count == 0 {
            return Err(Error::InsufficientHistory(format!(
                "{end} day(s) cannot hold a {}-day lag window plus a {}-day horizon",
                lag.window(),
                lag.horizon
            )));
        }
        let first = lag.window() - 1;
        (first..first + count)
            .map(|t| {
                let state = self.anchor_state(t, lag)?;
                let targets = (1..=lag.horizon).map(|h| self.outcome(t + h) as u8).collect();
                Ok(SupervisedRow { state, targets })
            })
            .collect()
    }
}

/// Supervised rows over the whole series.
pub fn build_rows(
    y: &BinaryDailySeries,
    covariates: &[DailyCovariates],
    lag: &LagConfig,
    spec: &EncodingSpec,
) -> Result<Vec<SupervisedRow>> {
    let dataset = Dataset::new(y.clone(), covariates.to_vec())?;
    let history = EncodedHistory::new(&dataset, spec)?;
    history.view().build_rows(lag, history.len())
}
