//! The weekly risk report: per-day probabilities and flags, accident counts
//! and the period status, one row per Monday-to-Sunday week.

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use super::metrics::{aggregate_periods, PeriodStatus};
use crate::error::{Error, Result};
use crate::strategy::HorizonForecast;

pub const WEEK_DAYS: [&str; 7] = ["mon", "tue", "wed", "thu", "fri", "sat", "sun"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeeklyReport {
    pub week_start: NaiveDate,
    pub probabilities: Vec<f64>,
    pub forecasts: Vec<u8>,
    pub predicted_accidents: usize,
    /// Present only when the week's outcomes are known.
    pub actual_accidents: Option<usize>,
    pub bias: Option<i64>,
    pub status: PeriodStatus,
}

/// Builds the report for a 7-day forecast whose first day is a Monday.
/// Without `truth` the actual-accident and bias fields stay empty.
pub fn weekly_report(forecast: &HorizonForecast, truth: Option<&[u8]>) -> Result<WeeklyReport> {
    if forecast.horizon() != 7 {
        return Err(Error::invalid(format!(
            "weekly reports need a 7-day forecast, got {}",
            forecast.horizon()
        )));
    }
    let week_start = forecast.date(1);
    if week_start.weekday() != Weekday::Mon {
        return Err(Error::invalid(format!(
            "forecast week starts on {week_start} ({}), not a Monday",
            week_start.weekday()
        )));
    }
    let (actual_accidents, bias) = match truth {
        Some(t) => {
            let agg = aggregate_periods(t, &forecast.decisions, 7)?;
            let p = &agg.periods[0];
            (Some(p.actual_accident_days), Some(p.bias))
        }
        None => (None, None),
    };
    let predicted = forecast.decisions.iter().filter(|&&d| d == 1).count();
    Ok(WeeklyReport {
        week_start,
        probabilities: forecast.probabilities.clone(),
        forecasts: forecast.decisions.clone(),
        predicted_accidents: predicted,
        actual_accidents,
        bias,
        status: if predicted > 0 { PeriodStatus::Risky } else { PeriodStatus::Safe },
    })
}

impl WeeklyReport {
    /// Text block with one line per report field, days as columns.
    pub fn render(&self) -> String {
        let days = ["M", "T", "W", "T", "F", "S", "S"];
        let mut out = format!("Week of {}\n", self.week_start);
        let row = |label: &str, cells: Vec<String>| {
            format!("{label:<20}{}\n", cells.iter().map(|c| format!("{c:>7}")).collect::<String>())
        };
        out += &row("Days of the week", days.iter().map(|d| d.to_string()).collect());
        out += &row("Daily probability", self.probabilities.iter().map(|p| format!("{p:.3}")).collect());
        out += &row("Forecast", self.forecasts.iter().map(|f| f.to_string()).collect());
        out += &format!("{:<20}{}\n", "Predicted accidents", self.predicted_accidents);
        if let (Some(a), Some(b)) = (self.actual_accidents, self.bias) {
            out += &format!("{:<20}{a}\n", "Actual accidents");
            out += &format!("{:<20}{b}\n", "Bias");
        }
        out += &format!("{:<20}{}\n", "Period status", self.status);
        out
    }
}
