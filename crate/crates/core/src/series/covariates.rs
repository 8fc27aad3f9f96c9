//! Dynamic inspection covariates and their numeric encoding.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::calendar::HolidayWindow;
use crate::error::{Error, Result};

/// An ordinal inspection grade, or the explicit marker for days where nothing
/// was observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Ordinal {
    NoObservation,
    Level(u8),
}

impl Ordinal {
    pub fn level(self) -> Option<u8> {
        match self {
            Ordinal::NoObservation => None,
            Ordinal::Level(l) => Some(l),
        }
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ordinal::NoObservation => f.write_str("NA"),
            Ordinal::Level(l) => write!(f, "{l}"),
        }
    }
}

impl FromStr for Ordinal {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("na") || s.is_empty() {
            return Ok(Ordinal::NoObservation);
        }
        s.parse::<u8>()
            .map(Ordinal::Level)
            .map_err(|_| format!("`{s}` is not an ordinal level"))
    }
}

/// Lower median of a set of ordinal levels; `NoObservation` when empty.
pub fn ordinal_median(levels: &mut [u8]) -> Ordinal {
    if levels.is_empty() {
        return Ordinal::NoObservation;
    }
    levels.sort_unstable();
    Ordinal::Level(levels[(levels.len() - 1) / 2])
}

/// Aggregated inspection findings for one calendar day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailyCovariates {
    pub date: NaiveDate,
    pub num_safety_inspections: u32,
    pub num_hazardous_situations: u32,
    pub num_improvement_actions: u32,
    pub num_best_practices: u32,
    pub severity_median: Ordinal,
    pub cleanliness_median: Ordinal,
    pub days_off_median: u32,
    pub improvement_progress_median: Ordinal,
}

impl DailyCovariates {
    /// A day without any inspection.
    pub fn empty(date: NaiveDate) -> Self {
        Self {
            date,
            num_safety_inspections: 0,
            num_hazardous_situations: 0,
            num_improvement_actions: 0,
            num_best_practices: 0,
            severity_median: Ordinal::NoObservation,
            cleanliness_median: Ordinal::NoObservation,
            days_off_median: 0,
            improvement_progress_median: Ordinal::NoObservation,
        }
    }
}

/// Names of the encoded covariate slots, in vector order.
pub const COVARIATE_FIELDS: [&str; 8] = [
    "num_safety_inspections",
    "num_hazardous_situations",
    "num_improvement_actions",
    "num_best_practices",
    "severity_median",
    "cleanliness_median",
    "days_off_median",
    "improvement_progress_median",
];

pub const COVARIATE_WIDTH: usize = COVARIATE_FIELDS.len();

/// Index of the hazardous-situation count in the encoded vector.
pub const HAZARD_SLOT: usize = 1;

/// Declared level set of one ordinal field. Levels encode as their 1-based rank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrdinalScale {
    pub levels: Vec<u8>,
}

impl OrdinalScale {
    pub fn one_to(n: u8) -> Self {
        Self {
            levels: (1..=n).collect(),
        }
    }

    pub fn rank(&self, level: u8) -> Option<usize> {
        self.levels.iter().position(|&l| l == level).map(|i| i + 1)
    }

    pub fn contains(&self, level: u8) -> bool {
        self.levels.contains(&level)
    }
}

/// How covariates and calendar fields turn into numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingSpec {
    pub severity: OrdinalScale,
    pub cleanliness: OrdinalScale,
    pub improvement_progress: OrdinalScale,
    /// Code written in a median slot on days without observations. Must differ
    /// from every rank.
    pub no_observation_code: f64,
    pub summer_break: HolidayWindow,
}

impl Default for EncodingSpec {
    fn default() -> Self {
        Self {
            severity: OrdinalScale::one_to(4),
            cleanliness: OrdinalScale::one_to(4),
            improvement_progress: OrdinalScale::one_to(4),
            no_observation_code: 0.0,
            summer_break: HolidayWindow::default(),
        }
    }
}

impl EncodingSpec {
    fn ordinal_code(&self, field: &str, scale: &OrdinalScale, value: Ordinal) -> Result<f64> {
        match value {
            Ordinal::NoObservation => Ok(self.no_observation_code),
            Ordinal::Level(l) => scale.rank(l).map(|r| r as f64).ok_or_else(|| Error::Encoding {
                field: field.to_string(),
                value: l.to_string(),
            }),
        }
    }
}

/// Fixed-width numeric vector (see [`COVARIATE_FIELDS`]) for one day.
pub fn encode_covariates(c: &DailyCovariates, spec: &EncodingSpec) -> Result<[f64; COVARIATE_WIDTH]> {
    Ok([
        c.num_safety_inspections as f64,
        c.num_hazardous_situations as f64,
        c.num_improvement_actions as f64,
        c.num_best_practices as f64,
        spec.ordinal_code("severity_median", &spec.severity, c.severity_median)?,
        spec.ordinal_code("cleanliness_median", &spec.cleanliness, c.cleanliness_median)?,
        c.days_off_median as f64,
        spec.ordinal_code(
            "improvement_progress_median",
            &spec.improvement_progress,
            c.improvement_progress_median,
        )?,
    ])
}
