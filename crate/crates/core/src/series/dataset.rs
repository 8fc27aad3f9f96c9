use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::covariates::DailyCovariates;
use crate::error::{Error, Result};

/// Daily accident indicator: `1` when at least one accident happened that day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryDailySeries {
    start_date: NaiveDate,
    values: Vec<u8>,
}

impl BinaryDailySeries {
    pub fn new(start_date: NaiveDate, values: Vec<u8>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("a daily series needs at least one day"));
        }
        if let Some(pos) = values.iter().position(|&v| v > 1) {
            return Err(Error::invalid(format!(
                "value {} at index {pos} is not binary",
                values[pos]
            )));
        }
        Ok(Self { start_date, values })
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn end_date(&self) -> NaiveDate {
        self.date_at(self.values.len() - 1)
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.start_date + Duration::days(index as i64)
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = (date - self.start_date).num_days();
        (offset >= 0 && (offset as usize) < self.values.len()).then_some(offset as usize)
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.values.len()).map(|i| self.date_at(i))
    }

    pub fn positive_rate(&self) -> f64 {
        self.values.iter().map(|&v| v as f64).sum::<f64>() / self.values.len() as f64
    }
}

/// Outcomes and covariates on a shared, gap-free daily axis. May be empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    start_date: NaiveDate,
    outcomes: Vec<u8>,
    covariates: Vec<DailyCovariates>,
}

impl Dataset {
    pub fn new(series: BinaryDailySeries, covariates: Vec<DailyCovariates>) -> Result<Self> {
        Self::from_parts(series.start_date, series.values, covariates)
    }

    pub fn empty(start_date: NaiveDate) -> Self {
        Self {
            start_date,
            outcomes: Vec::new(),
            covariates: Vec::new(),
        }
    }

    pub fn from_parts(
        start_date: NaiveDate,
        outcomes: Vec<u8>,
        covariates: Vec<DailyCovariates>,
    ) -> Result<Self> {
        if outcomes.len() != covariates.len() {
            return Err(Error::invalid(format!(
                "{} outcomes but {} covariate days",
                outcomes.len(),
                covariates.len()
            )));
        }
        if let Some(pos) = outcomes.iter().position(|&v| v > 1) {
            return Err(Error::invalid(format!("outcome at index {pos} is not binary")));
        }
        for (i, c) in covariates.iter().enumerate() {
            let expected = start_date + Duration::days(i as i64);
            if c.date != expected {
                return Err(Error::invalid(format!(
                    "covariates for day {i} are dated {} instead of {expected}",
                    c.date
                )));
            }
        }
        Ok(Self {
            start_date,
            outcomes,
            covariates,
        })
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[u8] {
        &self.outcomes
    }

    pub fn covariates(&self) -> &[DailyCovariates] {
        &self.covariates
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.start_date + Duration::days(index as i64)
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = (date - self.start_date).num_days();
        (offset >= 0 && (offset as usize) < self.len()).then_some(offset as usize)
    }

    pub fn series(&self) -> Result<BinaryDailySeries> {
        BinaryDailySeries::new(self.start_date, self.outcomes.clone())
    }

    /// The first `len` days.
    pub fn head(&self, len: usize) -> Dataset {
        let len = len.min(self.len());
        Dataset {
            start_date: self.start_date,
            outcomes: self.outcomes[..len].to_vec(),
            covariates: self.covariates[..len].to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d0() -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 1, 4).unwrap()
    }

    #[test]
    fn rejects_non_binary_and_empty() {
        assert!(BinaryDailySeries::new(d0(), vec![0, 2]).is_err());
        assert!(BinaryDailySeries::new(d0(), vec![]).is_err());
        assert!(BinaryDailySeries::new(d0(), vec![0, 1, 1]).is_ok());
    }

    #[test]
    fn date_indexing() {
        let s = BinaryDailySeries::new(d0(), vec![0, 1, 0]).unwrap();
        assert_eq!(s.date_at(2), NaiveDate::from_ymd_opt(2021, 1, 6).unwrap());
        assert_eq!(s.index_of(s.end_date()), Some(2));
        assert_eq!(s.index_of(d0() - Duration::days(1)), None);
        assert_eq!(s.index_of(d0() + Duration::days(3)), None);
    }

    #[test]
    fn dataset_rejects_gaps() {
        let covs = vec![
            DailyCovariates::empty(d0()),
            DailyCovariates::empty(d0() + Duration::days(2)),
        ];
        assert!(Dataset::from_parts(d0(), vec![0, 0], covs).is_err());
    }
}
