//! On-disk dataset bundle: a directory holding `series.csv`, `covariates.csv`,
//! `meta.json` and, for simulated data, `ground_truth.csv`.

use std::fs;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::ingest::RecordFilter;
use crate::error::{Error, Result, RowError};
use crate::series::{DailyCovariates, Dataset, Ordinal, COVARIATE_FIELDS};

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

pub const SERIES_FILE: &str = "series.csv";
pub const COVARIATES_FILE: &str = "covariates.csv";
pub const META_FILE: &str = "meta.json";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";

const SERIES_HEADER: [&str; 2] = ["date", "y"];
const TRUTH_HEADER: [&str; 2] = ["date", "p_true"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub format_version: u32,
    pub start_date: NaiveDate,
    /// Last day, absent for an empty dataset.
    pub end_date: Option<NaiveDate>,
    pub days: usize,
    pub filter: Option<RecordFilter>,
    pub preset: Option<String>,
    pub seed: Option<u64>,
}

impl BundleMeta {
    pub fn describe(dataset: &Dataset) -> Self {
        Self {
            format_version: BUNDLE_FORMAT_VERSION,
            start_date: dataset.start_date(),
            end_date: (!dataset.is_empty()).then(|| dataset.date_at(dataset.len() - 1)),
            days: dataset.len(),
            filter: None,
            preset: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub dataset: Dataset,
    pub meta: BundleMeta,
    /// Per-day accident probabilities a simulator used, when known.
    pub ground_truth: Option<Vec<f64>>,
}

impl DatasetBundle {
    pub fn new(dataset: Dataset) -> Self {
        let meta = BundleMeta::describe(&dataset);
        Self {
            dataset,
            meta,
            ground_truth: None,
        }
    }
}

pub fn save_dataset(bundle: &DatasetBundle, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let ds = &bundle.dataset;

    let path = dir.join(SERIES_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
    w.write_record(SERIES_HEADER).map_err(|e| Error::csv(&path, e))?;
    for (i, y) in ds.outcomes().iter().enumerate() {
        w.write_record([ds.date_at(i).to_string(), y.to_string()])
            .map_err(|e| Error::csv(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(COVARIATES_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
    let mut header = vec!["date"];
    header.extend(COVARIATE_FIELDS);
    w.write_record(&header).map_err(|e| Error::csv(&path, e))?;
    for c in ds.covariates() {
        w.write_record([
            c.date.to_string(),
            c.num_safety_inspections.to_string(),
            c.num_hazardous_situations.to_string(),
            c.num_improvement_actions.to_string(),
            c.num_best_practices.to_string(),
            c.severity_median.to_string(),
            c.cleanliness_median.to_string(),
            c.days_off_median.to_string(),
            c.improvement_progress_median.to_string(),
        ])
        .map_err(|e| Error::csv(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let truth_path = dir.join(GROUND_TRUTH_FILE);
    if let Some(truth) = &bundle.ground_truth {
        if truth.len() != ds.len() {
            return Err(Error::invalid("ground truth length differs from dataset length"));
        }
        let mut w = csv::Writer::from_path(&truth_path).map_err(|e| Error::csv(&truth_path, e))?;
        w.write_record(TRUTH_HEADER).map_err(|e| Error::csv(&truth_path, e))?;
        for (i, p) in truth.iter().enumerate() {
            // `{:?}` prints the shortest representation that parses back exactly
            w.write_record([ds.date_at(i).to_string(), format!("{p:?}")])
                .map_err(|e| Error::csv(&truth_path, e))?;
        }
        w.flush().map_err(|e| Error::io(&truth_path, e))?;
    } else if truth_path.exists() {
        fs::remove_file(&truth_path).map_err(|e| Error::io(&truth_path, e))?;
    }

    let mut meta = bundle.meta.clone();
    meta.format_version = BUNDLE_FORMAT_VERSION;
    let path = dir.join(META_FILE);
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Serde(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

/// Reads every data row of a CSV whose header must equal `expected`.
fn read_exact(path: &Path, expected: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut r = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let header = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            message: format!(
                "header `{}` does not match expected `{}`",
                header.iter().collect::<Vec<_>>().join(","),
                expected.join(",")
            ),
        });
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((line, rec));
    }
    Ok(rows)
}

fn field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    idx: usize,
    name: &str,
    line: u64,
    errors: &mut Vec<RowError>,
) -> Option<T> {
    let raw = rec.get(idx).unwrap_or("");
    match raw.parse::<T>() {
        Ok(v) => Some(v),
        Err(_) => {
            errors.push(RowError {
                line,
                column: Some(name.to_string()),
                message: format!("cannot parse `{raw}`"),
            });
            None
        }
    }
}

fn check_date(
    date: NaiveDate,
    expected: NaiveDate,
    line: u64,
    errors: &mut Vec<RowError>,
) {
    if date != expected {
        errors.push(RowError {
            line,
            column: Some("date".into()),
            message: format!("expected {expected}, found {date} (days must be consecutive)"),
        });
    }
}

pub fn load_dataset(dir: impl AsRef<Path>) -> Result<DatasetBundle> {
    let dir = dir.as_ref();
    let meta_path = dir.join(META_FILE);
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let raw: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Schema {
            path: meta_path.clone(),
            message: e.to_string(),
        })?;
    let found = raw
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Schema {
            path: meta_path.clone(),
            message: "missing format_version".into(),
        })?;
    if found != BUNDLE_FORMAT_VERSION as u64 {
        return Err(Error::Version {
            found: found as u32,
            expected: BUNDLE_FORMAT_VERSION,
        });
    }
    let meta: BundleMeta = serde_json::from_value(raw).map_err(|e| Error::Schema {
        path: meta_path.clone(),
        message: e.to_string(),
    })?;
    let start = meta.start_date;

    let path = dir.join(SERIES_FILE);
    let mut errors = Vec::new();
    let mut outcomes = Vec::new();
    for (i, (line, rec)) in read_exact(&path, &SERIES_HEADER)?.into_iter().enumerate() {
        if let Some(date) = field::<NaiveDate>(&rec, 0, "date", line, &mut errors) {
            check_date(date, start + Duration::days(i as i64), line, &mut errors);
        }
        match field::<u8>(&rec, 1, "y", line, &mut errors) {
            Some(y) if y <= 1 => outcomes.push(y),
            Some(y) => errors.push(RowError {
                line,
                column: Some("y".into()),
                message: format!("{y} is not binary"),
            }),
            None => {}
        }
    }
    if !errors.is_empty() {
        return Err(Error::Rows { path, errors });
    }

    let path = dir.join(COVARIATES_FILE);
    let mut header = vec!["date"];
    header.extend(COVARIATE_FIELDS);
    let mut covariates = Vec::new();
    for (i, (line, rec)) in read_exact(&path, &header)?.into_iter().enumerate() {
        let e = &mut errors;
        let date = field::<NaiveDate>(&rec, 0, "date", line, e);
        if let Some(date) = date {
            check_date(date, start + Duration::days(i as i64), line, e);
        }
        let parsed = (|| {
            Some(DailyCovariates {
                date: date?,
                num_safety_inspections: field(&rec, 1, COVARIATE_FIELDS[0], line, e)?,
                num_hazardous_situations: field(&rec, 2, COVARIATE_FIELDS[1], line, e)?,
                num_improvement_actions: field(&rec, 3, COVARIATE_FIELDS[2], line, e)?,
                num_best_practices: field(&rec, 4, COVARIATE_FIELDS[3], line, e)?,
                severity_median: field::<Ordinal>(&rec, 5, COVARIATE_FIELDS[4], line, e)?,
                cleanliness_median: field::<Ordinal>(&rec, 6, COVARIATE_FIELDS[5], line, e)?,
                days_off_median: field(&rec, 7, COVARIATE_FIELDS[6], line, e)?,
                improvement_progress_median: field::<Ordinal>(&rec, 8, COVARIATE_FIELDS[7], line, e)?,
            })
        })();
        covariates.extend(parsed);
    }
    if !errors.is_empty() {
        return Err(Error::Rows { path, errors });
    }
    if outcomes.len() != meta.days || covariates.len() != meta.days {
        return Err(Error::Schema {
            path: dir.to_path_buf(),
            message: format!(
                "meta declares {} days but found {} outcomes and {} covariate rows",
                meta.days,
                outcomes.len(),
                covariates.len()
            ),
        });
    }

    let truth_path = dir.join(GROUND_TRUTH_FILE);
    let ground_truth = if truth_path.exists() {
        let mut truth = Vec::new();
        for (line, rec) in read_exact(&truth_path, &TRUTH_HEADER)? {
            truth.extend(field::<f64>(&rec, 1, "p_true", line, &mut errors));
        }
        if !errors.is_empty() {
            return Err(Error::Rows {
                path: truth_path,
                errors,
            });
        }
        Some(truth)
    } else {
        None
    };

    let dataset = Dataset::from_parts(start, outcomes, covariates)?;
    Ok(DatasetBundle {
        dataset,
        meta,
        ground_truth,
    })
}
