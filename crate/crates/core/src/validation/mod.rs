//! Expanding-window cross-validation, grid search, threshold calibration and
//! rolling backtests.

mod backtest;
mod calibrate;
mod engine;
mod folds;
mod grid;
mod predictions;
mod spec;
mod tune;

pub use backtest::{backtest, BacktestConfig, BacktestResult};
pub use calibrate::{calibrate_threshold, threshold_grid, Calibration, Granularity, Metric, MetricKind};
pub use engine::AccessRecord;
pub use folds::{initial_window, make_folds, Fold};
pub use grid::Grid;
pub use predictions::{PredictionLog, PredictionRecord, LOG_COLUMNS};
pub use spec::{derive_seed, Candidate, ModelSpec};
pub use tune::{tune, LeaderboardEntry, TscvConfig, TuneResult};
