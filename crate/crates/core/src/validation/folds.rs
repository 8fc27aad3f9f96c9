//! Expanding-window fold algebra.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fold `k` trains on days `0..m + k*h` and validates on the `h` days after.
/// Ranges are 0-based and half-open.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub k: usize,
    pub train: Range<usize>,
    pub validation: Range<usize>,
}

/// `K = floor((n - m) / h)` folds over a training span of `n` days.
pub fn make_folds(n: usize, m: usize, h: usize) -> Result<Vec<Fold>> {
    if m == 0 || h == 0 {
        return Err(Error::Config(format!(
            "initial window and step must be >= 1, got m={m}, h={h}"
        )));
    }
    if n <= m {
        return Err(Error::Config(format!(
            "training span of {n} days leaves nothing after an initial window of {m}"
        )));
    }
    let k_count = (n - m) / h;
    if k_count == 0 {
        return Err(Error::Config(format!(
            "step {h} exceeds the {} days after the initial window",
            n - m
        )));
    }
    Ok((0..k_count)
        .map(|k| Fold {
            k,
            train: 0..m + k * h,
            validation: m + k * h..m + (k + 1) * h,
        })
        .collect())
}

/// Conventional initial window: 60% of the training span, rounded.
pub fn initial_window(n: usize) -> usize {
    (0.6 * n as f64).round() as usize
}
