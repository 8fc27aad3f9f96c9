//! Raw inspection and accident logs: CSV reading and daily aggregation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowError};
use crate::series::{ordinal_median, DailyCovariates, Dataset, Ordinal};

pub const INSPECTION_COLUMNS: [&str; 9] = [
    "date",
    "department_id",
    "num_hazardous_situations",
    "severity_levels",
    "cleanliness",
    "num_improvement_actions",
    "improvement_progress",
    "num_best_practices",
    "days_off",
];

pub const ACCIDENT_COLUMNS: [&str; 3] = ["date", "department_id", "worker_class"];

/// One safety-inspection feedback form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InspectionRecord {
    pub date: NaiveDate,
    pub department_id: String,
    pub num_hazardous_situations: u32,
    /// One severity grade per hazardous situation.
    pub severity_levels: Vec<u8>,
    pub cleanliness: Ordinal,
    pub num_improvement_actions: u32,
    pub improvement_progress: Ordinal,
    pub num_best_practices: u32,
    pub days_off: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WorkerClass {
    /// Internal and temporary workers.
    Itw,
    /// External workers.
    Exw,
}

impl fmt::Display for WorkerClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WorkerClass::Itw => "ITW",
            WorkerClass::Exw => "ExW",
        })
    }
}

impl FromStr for WorkerClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "itw" => Ok(WorkerClass::Itw),
            "exw" => Ok(WorkerClass::Exw),
            other => Err(format!("unknown worker class `{other}` (expected ITW or ExW)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccidentRecord {
    pub date: NaiveDate,
    pub department_id: String,
    pub worker_class: WorkerClass,
}

/// Which records feed a series. `None` keeps everything.
///
/// Inspections carry no worker class, so only the department filter applies to
/// them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordFilter {
    pub department: Option<String>,
    pub worker_class: Option<WorkerClass>,
}

impl RecordFilter {
    fn keeps_department(&self, dept: &str) -> bool {
        self.department.as_deref().is_none_or(|d| d == dept)
    }

    pub fn keeps_inspection(&self, r: &InspectionRecord) -> bool {
        self.keeps_department(&r.department_id)
    }

    pub fn keeps_accident(&self, r: &AccidentRecord) -> bool {
        self.keeps_department(&r.department_id)
            && self.worker_class.is_none_or(|w| w == r.worker_class)
    }
}

/// Inclusive date range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if end < start {
            return Err(Error::invalid(format!("empty date range {start}..={end}")));
        }
        Ok(Self { start, end })
    }

    pub fn days(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }
}

/// Field-level parser with row/column error reporting.
struct RowReader<'r> {
    record: &'r csv::StringRecord,
    columns: &'r BTreeMap<&'static str, usize>,
    line: u64,
    errors: Vec<RowError>,
}

impl<'r> RowReader<'r> {
    fn raw(&self, col: &'static str) -> &'r str {
        self.record.get(self.columns[col]).unwrap_or("").trim()
    }

    fn fail(&mut self, col: &'static str, message: String) {
        self.errors.push(RowError {
            line: self.line,
            column: Some(col.to_string()),
            message,
        });
    }

    fn date(&mut self, col: &'static str) -> Option<NaiveDate> {
        let raw = self.raw(col);
        match NaiveDate::parse_from_str(raw, "%Y-%m-%d") {
            Ok(d) => Some(d),
            Err(_) => {
                self.fail(col, format!("`{raw}` is not an ISO-8601 date"));
                None
            }
        }
    }

    fn text(&mut self, col: &'static str) -> Option<String> {
        let raw = self.raw(col);
        if raw.is_empty() {
            self.fail(col, "empty value".to_string());
            return None;
        }
        Some(raw.to_string())
    }

    fn count(&mut self, col: &'static str) -> Option<u32> {
        let raw = self.raw(col);
        match raw.parse::<i64>() {
            Ok(v) if v < 0 => {
                self.fail(col, format!("negative count {v}"));
                None
            }
            Ok(v) if v > u32::MAX as i64 => {
                self.fail(col, format!("count {v} out of range"));
                None
            }
            Ok(v) => Some(v as u32),
            Err(_) => {
                self.fail(col, format!("`{raw}` is not an integer count"));
                None
            }
        }
    }

    fn ordinal(&mut self, col: &'static str) -> Option<Ordinal> {
        match self.raw(col).parse::<Ordinal>() {
            Ok(o) => Some(o),
            Err(msg) => {
                self.fail(col, msg);
                None
            }
        }
    }

    fn levels(&mut self, col: &'static str) -> Option<Vec<u8>> {
        let raw = self.raw(col);
        if raw.is_empty() {
            return Some(Vec::new());
        }
        let parsed: Result<Vec<u8>, _> = raw.split(';').map(|p| p.trim().parse::<u8>()).collect();
        match parsed {
            Ok(v) => Some(v),
            Err(_) => {
                self.fail(col, format!("`{raw}` is not a `;`-separated list of levels"));
                None
            }
        }
    }
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))
}

fn column_index(
    path: &Path,
    headers: &csv::StringRecord,
    required: &[&'static str],
) -> Result<BTreeMap<&'static str, usize>> {
    let mut map = BTreeMap::new();
    let mut missing = Vec::new();
    for &col in required {
        match headers.iter().position(|h| h == col) {
            Some(i) => {
                map.insert(col, i);
            }
            None => missing.push(col),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            message: format!("missing required column(s): {}", missing.join(", ")),
        });
    }
    Ok(map)
}

fn read_rows<T>(
    path: &Path,
    required: &[&'static str],
    mut parse: impl FnMut(&mut RowReader<'_>) -> Option<T>,
) -> Result<Vec<T>> {
    let mut reader = open_reader(path)?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let columns = column_index(path, &headers, required)?;
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for result in reader.records() {
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                errors.push(RowError {
                    line,
                    column: None,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let mut row = RowReader {
            record: &record,
            columns: &columns,
            line: record.position().map_or(0, |p| p.line()),
            errors: Vec::new(),
        };
        let parsed = parse(&mut row);
        errors.append(&mut row.errors);
        if let Some(v) = parsed {
            out.push(v);
        }
    }
    if !errors.is_empty() {
        return Err(Error::Rows {
            path: path.to_path_buf(),
            errors,
        });
    }
    Ok(out)
}

/// Reads an inspection log; records come back sorted by date.
pub fn load_inspections(path: impl AsRef<Path>) -> Result<Vec<InspectionRecord>> {
    let path = path.as_ref();
    let mut records = read_rows(path, &INSPECTION_COLUMNS, |row| {
        let date = row.date("date");
        let department_id = row.text("department_id");
        let num_hazardous_situations = row.count("num_hazardous_situations");
        let severity_levels = row.levels("severity_levels");
        let cleanliness = row.ordinal("cleanliness");
        let num_improvement_actions = row.count("num_improvement_actions");
        let improvement_progress = row.ordinal("improvement_progress");
        let num_best_practices = row.count("num_best_practices");
        let days_off = row.count("days_off");
        if let (Some(n), Some(levels)) = (num_hazardous_situations, &severity_levels) {
            if levels.len() != n as usize {
                row.fail(
                    "severity_levels",
                    format!("{} level(s) listed for {n} hazardous situation(s)", levels.len()),
                );
                return None;
            }
        }
        Some(InspectionRecord {
            date: date?,
            department_id: department_id?,
            num_hazardous_situations: num_hazardous_situations?,
            severity_levels: severity_levels?,
            cleanliness: cleanliness?,
            num_improvement_actions: num_improvement_actions?,
            improvement_progress: improvement_progress?,
            num_best_practices: num_best_practices?,
            days_off: days_off?,
        })
    })?;
    records.sort_by_key(|r| r.date);
    Ok(records)
}

/// Reads an accident log; records come back sorted by date.
pub fn load_accidents(path: impl AsRef<Path>) -> Result<Vec<AccidentRecord>> {
    let path = path.as_ref();
    let mut records = read_rows(path, &ACCIDENT_COLUMNS, |row| {
        let date = row.date("date");
        let department_id = row.text("department_id");
        let raw = row.raw("worker_class");
        let worker_class = match raw.parse::<WorkerClass>() {
            Ok(w) => Some(w),
            Err(msg) => {
                row.fail("worker_class", msg);
                None
            }
        };
        Some(AccidentRecord {
            date: date?,
            department_id: department_id?,
            worker_class: worker_class?,
        })
    })?;
    records.sort_by_key(|r| r.date);
    Ok(records)
}

pub fn write_inspections(path: impl AsRef<Path>, records: &[InspectionRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(INSPECTION_COLUMNS).map_err(|e| Error::csv(path, e))?;
    for r in records {
        let levels: Vec<String> = r.severity_levels.iter().map(|l| l.to_string()).collect();
        w.write_record([
            r.date.to_string(),
            r.department_id.clone(),
            r.num_hazardous_situations.to_string(),
            levels.join(";"),
            r.cleanliness.to_string(),
            r.num_improvement_actions.to_string(),
            r.improvement_progress.to_string(),
            r.num_best_practices.to_string(),
            r.days_off.to_string(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_accidents(path: impl AsRef<Path>, records: &[AccidentRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(ACCIDENT_COLUMNS).map_err(|e| Error::csv(path, e))?;
    for r in records {
        w.write_record([
            r.date.to_string(),
            r.department_id.clone(),
            r.worker_class.to_string(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn median_count(values: &mut [u32]) -> u32 {
    if values.is_empty() {
        return 0;
    }
    values.sort_unstable();
    values[(values.len() - 1) / 2]
}

/// Collapses raw logs into one outcome bit and one covariate vector per day.
///
/// `y_t = 1` iff at least one matching accident falls on day `t`. Counts are
/// summed over matching inspections; the severity median pools every
/// hazardous situation of the day, the other medians are taken over the day's
/// inspections. Days without inspections get zero counts and
/// `NoObservation` medians. Records outside `range` are ignored.
pub fn aggregate_daily(
    inspections: &[InspectionRecord],
    accidents: &[AccidentRecord],
    range: DateRange,
    filter: &RecordFilter,
) -> Result<Dataset> {
    DateRange::new(range.start, range.end)?;
    let days = range.days();
    let slot = |date: NaiveDate| -> Option<usize> {
        let off = (date - range.start).num_days();
        (off >= 0 && (off as usize) < days).then_some(off as usize)
    };

    let mut outcomes = vec![0u8; days];
    for a in accidents.iter().filter(|a| filter.keeps_accident(a)) {
        if let Some(i) = slot(a.date) {
            outcomes[i] = 1;
        }
    }

    #[derive(Default)]
    struct Pool {
        inspections: u32,
        hazards: u32,
        actions: u32,
        practices: u32,
        severities: Vec<u8>,
        cleanliness: Vec<u8>,
        progress: Vec<u8>,
        days_off: Vec<u32>,
    }
    let mut pools: Vec<Pool> = (0..days).map(|_| Pool::default()).collect();
    for r in inspections.iter().filter(|r| filter.keeps_inspection(r)) {
        let Some(i) = slot(r.date) else { continue };
        let p = &mut pools[i];
        p.inspections += 1;
        p.hazards += r.num_hazardous_situations;
        p.actions += r.num_improvement_actions;
        p.practices += r.num_best_practices;
        p.severities.extend_from_slice(&r.severity_levels);
        p.cleanliness.extend(r.cleanliness.level());
        p.progress.extend(r.improvement_progress.level());
        p.days_off.push(r.days_off);
    }

    let covariates = pools
        .into_iter()
        .enumerate()
        .map(|(i, mut p)| DailyCovariates {
            date: range.start + Duration::days(i as i64),
            num_safety_inspections: p.inspections,
            num_hazardous_situations: p.hazards,
            num_improvement_actions: p.actions,
            num_best_practices: p.practices,
            severity_median: ordinal_median(&mut p.severities),
            cleanliness_median: ordinal_median(&mut p.cleanliness),
            days_off_median: median_count(&mut p.days_off),
            improvement_progress_median: ordinal_median(&mut p.progress),
        })
        .collect();

    Dataset::from_parts(range.start, outcomes, covariates)
}
