//! Static calendar covariates, fully known for any past or future date.

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

/// Inclusive month/day window treated as the summer break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HolidayWindow {
    pub start_month: u32,
    pub start_day: u32,
    pub end_month: u32,
    pub end_day: u32,
}

impl Default for HolidayWindow {
    /// July 15 through August 31.
    fn default() -> Self {
        Self {
            start_month: 7,
            start_day: 15,
            end_month: 8,
            end_day: 31,
        }
    }
}

impl HolidayWindow {
    pub fn contains(&self, date: NaiveDate) -> bool {
        let key = (date.month(), date.day());
        let start = (self.start_month, self.start_day);
        let end = (self.end_month, self.end_day);
        if start <= end {
            start <= key && key <= end
        } else {
            // window wraps the year end
            key >= start || key <= end
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarFeatures {
    /// 1 = Monday ... 7 = Sunday.
    pub day_of_week: u32,
    pub month: u32,
    pub quarter: u32,
    pub semester: u32,
    pub holiday: bool,
}

/// Width of the one-hot calendar encoding: 7 weekdays, 12 months, 4 quarters,
/// 2 semesters and the holiday flag.
pub const CALENDAR_WIDTH: usize = 7 + 12 + 4 + 2 + 1;

pub fn encode_calendar(date: NaiveDate, summer_break: &HolidayWindow) -> CalendarFeatures {
    let month = date.month();
    CalendarFeatures {
        day_of_week: date.weekday().number_from_monday(),
        month,
        quarter: month.div_ceil(3),
        semester: month.div_ceil(6),
        holiday: summer_break.contains(date),
    }
}

impl CalendarFeatures {
    /// One-hot layout of [`CALENDAR_WIDTH`] entries.
    pub fn one_hot(&self) -> [f64; CALENDAR_WIDTH] {
        let mut out = [0.0; CALENDAR_WIDTH];
        out[(self.day_of_week - 1) as usize] = 1.0;
        out[7 + (self.month - 1) as usize] = 1.0;
        out[19 + (self.quarter - 1) as usize] = 1.0;
        out[23 + (self.semester - 1) as usize] = 1.0;
        out[25] = if self.holiday { 1.0 } else { 0.0 };
        out
    }
}
