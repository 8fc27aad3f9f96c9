//! Seasonal naive baseline: each day repeats the outcome of the same weekday
//! one week earlier.

use serde::{Deserialize, Serialize};

use super::MultiOutputModel;
use crate::error::{Error, Result};
use crate::series::{AnchorState, BinaryDailySeries};

pub const WEEK: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveSeasonal {
    horizon: usize,
    period: usize,
}

impl NaiveSeasonal {
    pub fn new(horizon: usize) -> Self {
        Self { horizon, period: WEEK }
    }

    pub fn period(&self) -> usize {
        self.period
    }

    /// Lag (0 = anchor day) whose outcome is copied into horizon `h`.
    fn source_lag(&self, h: usize) -> usize {
        self.period * h.div_ceil(self.period) - h
    }

    /// `y_{t+h-7}` for `h = 1..=H`, read straight from the series.
    pub fn forecast(&self, y: &BinaryDailySeries, anchor: usize) -> Result<Vec<u8>> {
        if anchor + 1 < self.period || anchor >= y.len() {
            return Err(Error::InsufficientHistory(format!(
                "seasonal naive at anchor {anchor} needs days {}..={anchor} of a {}-day series",
                (anchor + 1).saturating_sub(self.period),
                y.len()
            )));
        }
        Ok((1..=self.horizon)
            .map(|h| y.values()[anchor - self.source_lag(h)])
            .collect())
    }
}

impl MultiOutputModel for NaiveSeasonal {
    fn horizon(&self) -> usize {
        self.horizon
    }

    /// Nothing to learn; only checks that states carry a full week of outcomes.
    fn fit(&mut self, states: &[AnchorState], targets: &[Vec<u8>], weights: &[Vec<f64>]) -> Result<()> {
        super::check_multi_inputs(states, targets, weights, self.horizon)?;
        if let Some(s) = states.iter().find(|s| s.outcome_depth() < self.period) {
            return Err(Error::InsufficientHistory(format!(
                "seasonal naive needs {} outcome lags, state has {}",
                self.period,
                s.outcome_depth()
            )));
        }
        Ok(())
    }

    /// # Panics
    /// If the state has fewer outcome lags than one period.
    fn predict_vector(&self, state: &AnchorState) -> Vec<f64> {
        (1..=self.horizon)
            .map(|h| state.outcome_lags[self.source_lag(h)])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn series(v: &[u8]) -> BinaryDailySeries {
        BinaryDailySeries::new(NaiveDate::from_ymd_opt(2022, 1, 3).unwrap(), v.to_vec()).unwrap()
    }

    #[test]
    fn copies_previous_week() {
        let y = series(&[1, 0, 0, 0, 0, 0, 0]);
        assert_eq!(NaiveSeasonal::new(7).forecast(&y, 6).unwrap(), vec![1, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn zeros_stay_zero() {
        let y = series(&[0; 20]);
        assert_eq!(NaiveSeasonal::new(7).forecast(&y, 13).unwrap(), vec![0; 7]);
    }

    #[test]
    fn short_history_is_an_error() {
        let y = series(&[1, 0, 1]);
        assert!(matches!(
            NaiveSeasonal::new(7).forecast(&y, 2),
            Err(Error::InsufficientHistory(_))
        ));
    }

    #[test]
    fn state_and_series_paths_agree() {
        let v: Vec<u8> = (0..30).map(|i| ((i * 3) % 5 == 0) as u8).collect();
        let y = series(&v);
        let m = NaiveSeasonal::new(10);
        let t = 20;
        let state = AnchorState {
            anchor: t,
            anchor_date: y.date_at(t),
            outcome_lags: (0..7).map(|k| v[t - k] as f64).collect(),
            covariate_lags: vec![],
            calendar: vec![],
        };
        let from_state: Vec<u8> = m.predict_vector(&state).iter().map(|&p| p as u8).collect();
        assert_eq!(from_state, m.forecast(&y, t).unwrap());
        // horizon 8 wraps to the week before the anchor week
        assert_eq!(from_state[7], v[t + 8 - 14]);
    }
}
