//! Descriptive diagnostics of a binary daily series: cumulative class counts,
//! serial agreement by lag, and the weekday / month accident profile.

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::BinaryDailySeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEvolution {
    /// `S^(0)_t`: days without an accident up to and including `t`.
    pub zeros: Vec<u64>,
    /// `S^(1)_t`: accident days up to and including `t`.
    pub ones: Vec<u64>,
}

impl RateEvolution {
    /// Chord slopes `S_T / T` of both curves, i.e. the empirical class
    /// frequencies over the whole series.
    pub fn terminal_slopes(&self) -> (f64, f64) {
        let t = self.ones.len() as f64;
        (*self.zeros.last().unwrap() as f64 / t, *self.ones.last().unwrap() as f64 / t)
    }
}

pub fn rate_evolution(y: &BinaryDailySeries) -> Result<RateEvolution> {
    if y.is_empty() {
        return Err(Error::invalid("rate evolution of an empty series"));
    }
    let (mut s0, mut s1) = (0u64, 0u64);
    let mut zeros = Vec::with_capacity(y.len());
    let mut ones = Vec::with_capacity(y.len());
    for &v in y.values() {
        if v == 1 {
            s1 += 1;
        } else {
            s0 += 1;
        }
        zeros.push(s0);
        ones.push(s1);
    }
    Ok(RateEvolution { zeros, ones })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaCurve {
    /// `kappa[l - 1]` is the agreement statistic at lag `l`.
    pub kappa: Vec<f64>,
    /// Set (and `kappa` left empty) when the series has a single class.
    pub note: Option<String>,
}

/// Cohen's kappa between the series and its lag-`l` shift for `l = 1..=L`.
///
/// Observed agreement is the share of `t >= l` with `y_t = y_{t-l}`; chance
/// agreement is `p0^2 + p1^2` from the marginal frequencies of the whole
/// series, so both shifted copies share one marginal. On short series this
/// form can dip marginally below -1; values are clamped into `[-1, 1]`.
pub fn kappa_autocorr(y: &BinaryDailySeries, max_lag: usize) -> Result<KappaCurve> {
    let v = y.values();
    let t = v.len();
    if max_lag == 0 || t <= max_lag {
        return Err(Error::invalid(format!(
            "kappa up to lag {max_lag} needs more than {max_lag} days, got {t}"
        )));
    }
    let p1 = v.iter().filter(|&&x| x == 1).count() as f64 / t as f64;
    let p_chance = p1 * p1 + (1.0 - p1) * (1.0 - p1);
    if p1 == 0.0 || p1 == 1.0 {
        return Ok(KappaCurve {
            kappa: Vec::new(),
            note: Some("degenerate: single-class".into()),
        });
    }
    let kappa = (1..=max_lag)
        .map(|l| {
            let agree = (l..t).filter(|&i| v[i] == v[i - l]).count() as f64 / (t - l) as f64;
            ((agree - p_chance) / (1.0 - p_chance)).clamp(-1.0, 1.0)
        })
        .collect();
    Ok(KappaCurve { kappa, note: None })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalendarProfile {
    /// Monday first.
    pub weekday_days: [u64; 7],
    pub weekday_accidents: [u64; 7],
    /// Share of all accident days falling on each weekday.
    pub weekday_shares: [f64; 7],
    /// January first.
    pub month_days: [u64; 12],
    pub month_accidents: [u64; 12],
    pub month_shares: [f64; 12],
    pub note: Option<String>,
}

pub fn calendar_profile(y: &BinaryDailySeries) -> Result<CalendarProfile> {
    if y.is_empty() {
        return Err(Error::invalid("calendar profile of an empty series"));
    }
    let mut p = CalendarProfile {
        weekday_days: [0; 7],
        weekday_accidents: [0; 7],
        weekday_shares: [0.0; 7],
        month_days: [0; 12],
        month_accidents: [0; 12],
        month_shares: [0.0; 12],
        note: None,
    };
    for (date, &v) in y.dates().zip(y.values()) {
        let wd = date.weekday().num_days_from_monday() as usize;
        let m = date.month0() as usize;
        p.weekday_days[wd] += 1;
        p.month_days[m] += 1;
        if v == 1 {
            p.weekday_accidents[wd] += 1;
            p.month_accidents[m] += 1;
        }
    }
    let total: u64 = p.weekday_accidents.iter().sum();
    if total == 0 {
        p.note = Some("no accident days".into());
    } else {
        for k in 0..7 {
            p.weekday_shares[k] = p.weekday_accidents[k] as f64 / total as f64;
        }
        for k in 0..12 {
            p.month_shares[k] = p.month_accidents[k] as f64 / total as f64;
        }
    }
    Ok(p)
}
