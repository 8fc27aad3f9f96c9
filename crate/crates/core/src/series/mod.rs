//! Date-indexed containers, calendar and covariate encoding, and the lag
//! embedding shared by every forecasting strategy.

mod calendar;
mod covariates;
mod dataset;
mod lags;

pub use calendar::{encode_calendar, CalendarFeatures, HolidayWindow, CALENDAR_WIDTH};
pub use covariates::{
    encode_covariates, ordinal_median, DailyCovariates, EncodingSpec, Ordinal, OrdinalScale,
    COVARIATE_FIELDS, COVARIATE_WIDTH, HAZARD_SLOT,
};
pub use dataset::{BinaryDailySeries, Dataset};
pub use lags::{build_rows, AnchorState, EncodedHistory, HistoryView, LagConfig, SupervisedRow};
