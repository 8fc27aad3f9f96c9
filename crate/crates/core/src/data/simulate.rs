//! Synthetic inspection/accident data with a known, injected leading-indicator
//! signal.
//!
//! A two-state hazard process (normal / elevated) drives how many hazardous
//! situations inspections report. The accident probability of day `t` is
//!
//! ```text
//! p_t = logistic(logit(base_rate) + ln(weekday_multiplier) + signal_strength * z_{t - signal_lag})
//! ```
//!
//! where `z` is the standardized daily hazardous-situation count. With
//! `signal_strength = 0` the outcome is independent Bernoulli noise with a
//! weekday profile.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate};
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use super::ingest::{aggregate_daily, DateRange, InspectionRecord, RecordFilter};
use crate::error::{Error, Result};
use crate::series::{Dataset, Ordinal};

/// Latent hazard regime feeding the inspection findings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HazardProcess {
    /// Daily probability of entering the elevated state.
    pub episode_start_prob: f64,
    /// Daily probability of leaving the elevated state.
    pub episode_end_prob: f64,
    /// Mean hazardous situations per inspection in the normal state.
    pub normal_situations: f64,
    /// Mean hazardous situations per inspection in the elevated state.
    pub elevated_situations: f64,
}

impl Default for HazardProcess {
    fn default() -> Self {
        Self {
            episode_start_prob: 0.03,
            episode_end_prob: 0.3,
            normal_situations: 0.3,
            elevated_situations: 5.0,
        }
    }
}

/// Missing fields take their [`Default`] values when deserialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub start_date: NaiveDate,
    /// Number of days T.
    pub length: usize,
    /// Baseline daily accident probability, in (0, 1).
    pub base_rate: f64,
    /// Odds multipliers, Monday first. Zero forbids accidents on that weekday.
    pub weekday_multipliers: [f64; 7],
    /// Log-odds effect of one standard deviation of lagged hazardous situations.
    pub signal_strength: f64,
    pub signal_lag: usize,
    /// Mean inspections per (unthinned) day.
    pub inspection_rate: f64,
    /// Probability that a weekday keeps its inspections, Monday first.
    pub inspection_thinning: [f64; 7],
    pub hazard: HazardProcess,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            start_date: NaiveDate::from_ymd_opt(2019, 1, 1).expect("valid date"),
            length: 1397,
            base_rate: 0.046,
            weekday_multipliers: [1.0; 7],
            signal_strength: 0.0,
            signal_lag: 7,
            inspection_rate: 1.3,
            inspection_thinning: [1.0, 1.0, 1.0, 1.0, 1.0, 0.5, 0.3],
            hazard: HazardProcess::default(),
            seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_rate > 0.0 && self.base_rate < 1.0) {
            return Err(Error::Config(format!("base_rate {} outside (0, 1)", self.base_rate)));
        }
        if self.weekday_multipliers.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::Config("weekday multipliers must be finite and >= 0".into()));
        }
        if !self.signal_strength.is_finite() || self.signal_strength < 0.0 {
            return Err(Error::Config("signal_strength must be finite and >= 0".into()));
        }
        if !self.inspection_rate.is_finite() || self.inspection_rate < 0.0 {
            return Err(Error::Config("inspection_rate must be finite and >= 0".into()));
        }
        if self.inspection_thinning.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("inspection thinning must lie in [0, 1]".into()));
        }
        let h = &self.hazard;
        for (name, p) in [
            ("episode_start_prob", h.episode_start_prob),
            ("episode_end_prob", h.episode_end_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(h.normal_situations >= 0.0 && h.elevated_situations >= 0.0) {
            return Err(Error::Config("situation means must be >= 0".into()));
        }
        Ok(())
    }

    pub fn preset(preset: Preset, seed: u64) -> Self {
        let midweek = [1.15, 1.2, 1.25, 1.2, 1.1, 0.55, 0.45];
        let base = SimulationConfig {
            weekday_multipliers: midweek,
            inspection_rate: 2.0,
            seed,
            ..SimulationConfig::default()
        };
        match preset {
            Preset::ItwD1 => SimulationConfig {
                base_rate: 0.002,
                signal_strength: 3.5,
                ..base
            },
            Preset::Exw => SimulationConfig {
                base_rate: 0.027,
                signal_strength: 3.2,
                hazard: HazardProcess {
                    episode_start_prob: 0.06,
                    ..HazardProcess::default()
                },
                ..base
            },
            Preset::Itw => SimulationConfig {
                base_rate: 0.17,
                signal_strength: 2.2,
                hazard: HazardProcess {
                    episode_start_prob: 0.12,
                    episode_end_prob: 0.25,
                    ..HazardProcess::default()
                },
                ..base
            },
        }
    }
}

/// Named class-imbalance regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// Internal and temporary workers, about 21% accident days.
    Itw,
    /// External workers, about 10% accident days.
    Exw,
    /// Internal workers of the most exposed department, about 4.6% accident days.
    ItwD1,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Itw, Preset::Exw, Preset::ItwD1];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Itw => "itw",
            Preset::Exw => "exw",
            Preset::ItwD1 => "itw-d1",
        }
    }

    /// Share of accident days the preset is calibrated to.
    pub fn target_rate(self) -> f64 {
        match self {
            Preset::Itw => 0.211,
            Preset::Exw => 0.096,
            Preset::ItwD1 => 0.046,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
                format!("unknown preset `{s}`; available presets: {}", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDataset {
    pub dataset: Dataset,
    /// The accident probability each outcome was drawn with.
    pub probabilities: Vec<f64>,
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn poisson(rng: &mut impl Rng, mean: f64) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("positive finite mean");
    d.sample(rng) as u32
}

const COV_STREAM: u64 = 1;
const OUTCOME_STREAM: u64 = 2;

/// Draws one synthetic dataset. Identical configs give identical output.
pub fn simulate_dataset(cfg: &SimulationConfig) -> Result<SimulatedDataset> {
    cfg.validate()?;
    let burn_in = cfg.signal_lag;
    let total = cfg.length + burn_in;
    let first_day = cfg.start_date - Duration::days(burn_in as i64);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(COV_STREAM);

    // severity / cleanliness grades 1..=4 by hazard state
    let severity_normal = WeightedIndex::new([0.45, 0.35, 0.15, 0.05]).expect("weights");
    let severity_elevated = WeightedIndex::new([0.1, 0.2, 0.35, 0.35]).expect("weights");
    let cleanliness_normal = WeightedIndex::new([0.05, 0.15, 0.4, 0.4]).expect("weights");
    let cleanliness_elevated = WeightedIndex::new([0.35, 0.35, 0.2, 0.1]).expect("weights");

    let mut elevated = false;
    let mut records = Vec::new();
    for day in 0..total {
        elevated = if elevated {
            !rng.random_bool(cfg.hazard.episode_end_prob)
        } else {
            rng.random_bool(cfg.hazard.episode_start_prob)
        };
        let date = first_day + Duration::days(day as i64);
        let dow = date.weekday().num_days_from_monday() as usize;
        let inspections = poisson(&mut rng, cfg.inspection_rate * cfg.inspection_thinning[dow]);
        let (mean_situations, severity, cleanliness) = if elevated {
            (cfg.hazard.elevated_situations, &severity_elevated, &cleanliness_elevated)
        } else {
            (cfg.hazard.normal_situations, &severity_normal, &cleanliness_normal)
        };
        for _ in 0..inspections {
            let situations = poisson(&mut rng, mean_situations);
            let severity_levels: Vec<u8> =
                (0..situations).map(|_| severity.sample(&mut rng) as u8 + 1).collect();
            let actions = (0..situations).map(|_| poisson(&mut rng, 1.1)).sum();
            records.push(InspectionRecord {
                date,
                department_id: "sim".to_string(),
                num_hazardous_situations: situations,
                severity_levels,
                cleanliness: Ordinal::Level(cleanliness.sample(&mut rng) as u8 + 1),
                num_improvement_actions: actions,
                improvement_progress: Ordinal::Level(rng.random_range(1..=4)),
                num_best_practices: poisson(&mut rng, 0.75),
                days_off: poisson(&mut rng, if elevated { 0.6 } else { 0.3 }),
            });
        }
    }

    let range = DateRange::new(first_day, first_day + Duration::days(total as i64 - 1))?;
    let full = aggregate_daily(&records, &[], range, &RecordFilter::default())?;

    let hazards: Vec<f64> = full
        .covariates()
        .iter()
        .map(|c| c.num_hazardous_situations as f64)
        .collect();
    let mean = hazards.iter().sum::<f64>() / total as f64;
    let sd = (hazards.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / total as f64).sqrt();
    let z = |i: usize| if sd > 0.0 { (hazards[i] - mean) / sd } else { 0.0 };

    let mut outcome_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    outcome_rng.set_stream(OUTCOME_STREAM);
    let intercept = logit(cfg.base_rate);
    let mut probabilities = Vec::with_capacity(cfg.length);
    let mut outcomes = Vec::with_capacity(cfg.length);
    for t in 0..cfg.length {
        let date = cfg.start_date + Duration::days(t as i64);
        let m = cfg.weekday_multipliers[date.weekday().num_days_from_monday() as usize];
        let p = if m == 0.0 {
            0.0
        } else {
            // output day t is full-run index t + burn_in, so its lagged hazard is index t
            logistic(intercept + m.ln() + cfg.signal_strength * z(t))
        };
        let u: f64 = outcome_rng.random();
        outcomes.push(u8::from(u < p));
        probabilities.push(p);
    }

    let covariates = full.covariates()[burn_in..].to_vec();
    let dataset = Dataset::from_parts(cfg.start_date, outcomes, covariates)?;
    Ok(SimulatedDataset {
        dataset,
        probabilities,
    })
}
