//! Period-level scoring, weekly reports and series diagnostics.

mod diagnostics;
mod export;
mod metrics;
mod report;

pub use diagnostics::{
    calendar_profile, kappa_autocorr, rate_evolution, CalendarProfile, KappaCurve, RateEvolution,
};
pub use export::{
    write_calendar_profile, write_json, write_kappa, write_metrics_csv, write_rate_evolution,
    write_weekly_reports, MetricsRow,
};
pub use metrics::{
    aggregate_periods, compute_metrics, period_metrics, MetricFlag, MetricReport, PeriodAggregation,
    PeriodOutcome, PeriodStatus,
};
pub use report::{weekly_report, WeeklyReport, WEEK_DAYS};
