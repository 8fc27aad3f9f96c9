//! Grid search by expanding-window cross-validation on pooled predictions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calibrate::{calibrate_threshold, Metric};
use super::engine::Walk;
use super::folds::make_folds;
use super::predictions::PredictionLog;
use super::spec::{derive_seed, Candidate};
use crate::error::{Error, Result};
use crate::series::EncodedHistory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TscvConfig {
    /// Initial training window `m` in days.
    pub initial_window: usize,
    /// Validation window `h` in days.
    pub step: usize,
    pub metric: Metric,
    /// Forecast horizon `H`.
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    /// Position in the grid.
    pub index: usize,
    pub candidate: Candidate,
    /// Metric on the pooled validation predictions at `tau`; `-inf` when the
    /// candidate failed or the metric is undefined (`null` in JSON).
    #[serde(with = "score_repr")]
    pub score: f64,
    /// Calibrated threshold; absent for a failed candidate.
    pub tau: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best: Candidate,
    pub best_index: usize,
    pub tau: f64,
    /// Sorted by score, ties in grid order.
    pub leaderboard: Vec<LeaderboardEntry>,
    /// Pooled validation log of each candidate, in grid order.
    #[serde(skip)]
    pub logs: Vec<PredictionLog>,
}

mod score_repr {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

struct Evaluated {
    log: PredictionLog,
    tau: f64,
    score: Option<f64>,
}

fn evaluate(
    history: &EncodedHistory,
    train_end: usize,
    index: usize,
    candidate: &Candidate,
    cfg: &TscvConfig,
    seed: u64,
) -> Result<Evaluated> {
    let lag = candidate.lag(cfg.horizon)?;
    let mut pooled = PredictionLog::new();
    for fold in make_folds(train_end, cfg.initial_window, cfg.step)? {
        let walk = Walk {
            history,
            candidate,
            lag,
            start: fold.validation.start,
            end: fold.validation.end,
            retrain_every: usize::MAX,
            seed: derive_seed(seed, &[index as u64]),
            model_id: format!("{}#{index}", candidate.model.family()),
            retrain_offset: fold.k,
        };
        let (log, _) = walk.run()?;
        pooled.extend(log)?;
    }
    let cal = calibrate_threshold(&pooled, cfg.horizon)?;
    let score = cfg.metric.score(&pooled, cal.tau, cfg.horizon)?;
    Ok(Evaluated {
        log: pooled,
        tau: cal.tau,
        score,
    })
}

/// Scores every candidate on the days before `train_end` and returns the best
/// with its calibrated threshold. Candidates are evaluated in parallel; a
/// candidate that fails scores `-inf` and carries its error.
pub fn tune(
    history: &EncodedHistory,
    train_end: usize,
    candidates: &[Candidate],
    cfg: &TscvConfig,
    seed: u64,
) -> Result<TuneResult> {
    if candidates.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    if train_end > history.len() {
        return Err(Error::invalid(format!(
            "training span of {train_end} days exceeds the {} available",
            history.len()
        )));
    }
    make_folds(train_end, cfg.initial_window, cfg.step)?;
    let results: Vec<Result<Evaluated>> = candidates
        .par_iter()
        .enumerate()
        .map(|(i, c)| evaluate(history, train_end, i, c, cfg, seed))
        .collect();

    let mut leaderboard = Vec::with_capacity(candidates.len());
    let mut logs = Vec::with_capacity(candidates.len());
    let mut first_error = None;
    for (i, r) in results.into_iter().enumerate() {
        let candidate = candidates[i].clone();
        match r {
            Ok(ev) => {
                leaderboard.push(LeaderboardEntry {
                    index: i,
                    candidate,
                    score: ev.score.unwrap_or(f64::NEG_INFINITY),
                    tau: Some(ev.tau),
                    error: None,
                });
                logs.push(ev.log);
            }
            Err(e) => {
                log::warn!("grid point {i} failed: {e}");
                leaderboard.push(LeaderboardEntry {
                    index: i,
                    candidate,
                    score: f64::NEG_INFINITY,
                    tau: None,
                    error: Some(e.to_string()),
                });
                logs.push(PredictionLog::new());
                first_error.get_or_insert(e);
            }
        }
    }
    if leaderboard.iter().all(|e| e.error.is_some()) {
        return Err(first_error.unwrap());
    }
    // stable sort keeps grid order among equal scores
    leaderboard.sort_by(|a, b| b.score.total_cmp(&a.score));
    let top = leaderboard
        .iter()
        .find(|e| e.error.is_none())
        .expect("at least one candidate succeeded");
    Ok(TuneResult {
        best: top.candidate.clone(),
        best_index: top.index,
        tau: top.tau.expect("successful candidates carry a threshold"),
        leaderboard,
        logs,
    })
}
