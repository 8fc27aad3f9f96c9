//! Short-term occupational-accident risk forecasting.
//!
//! Daily accident occurrence is modelled as a binary time series driven by
//! safety-inspection covariates. Forecasters produce daily accident
//! probabilities for the next `H` days, which are thresholded and aggregated
//! into period-level (weekly) risk classifications.

pub mod data;
pub mod error;
pub mod evaluation;
pub mod models;
pub mod series;
pub mod strategy;
pub mod validation;

pub use error::{Error, Result};
