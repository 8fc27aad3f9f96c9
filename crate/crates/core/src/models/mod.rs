//! Probabilistic classifiers behind two interfaces: single-output models for
//! direct-recursive ensembles and multi-output models that emit a whole
//! horizon at once.

mod activation;
mod adam;
pub mod checkpoint;
mod learner;
pub mod logistic;
pub mod lstm;
pub mod mlp;
pub mod naive;
pub mod tree;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::AnchorState;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT_VERSION};
pub use learner::{MultiLearner, SingleLearner};
pub use logistic::LogisticRegression;
pub use lstm::{Lstm, Precision};
pub use mlp::Mlp;
pub use naive::NaiveSeasonal;
pub use tree::{DecisionTree, FeatureSubset, RandomForest, TreeParams};

/// A binary classifier over flat feature vectors.
pub trait SingleOutputModel: Send + Sync {
    /// `x` holds one row per sample; `weights` are non-negative.
    fn fit(&mut self, x: ArrayView2<'_, f64>, y: &[u8], weights: &[f64]) -> Result<()>;

    /// Probability of the positive class, always in `[0, 1]`.
    fn predict_proba(&self, x: &[f64]) -> f64;
}

/// A model mapping the state at an anchor to `H` probabilities.
pub trait MultiOutputModel: Send + Sync {
    fn horizon(&self) -> usize;

    /// `targets[i][h]` and `weights[i][h]` belong to `states[i]` at horizon `h + 1`.
    fn fit(&mut self, states: &[AnchorState], targets: &[Vec<u8>], weights: &[Vec<f64>]) -> Result<()>;

    fn predict_vector(&self, state: &AnchorState) -> Vec<f64>;
}

/// Optimisation and architecture settings shared by the gradient-trained models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden_units: usize,
    pub layers: usize,
    pub l2_penalty: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 50,
            batch_size: 32,
            hidden_units: 32,
            layers: 2,
            l2_penalty: 0.0,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        for (name, v) in [
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("hidden_units", self.hidden_units),
            ("layers", self.layers),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        if !(self.l2_penalty >= 0.0 && self.l2_penalty.is_finite()) {
            return Err(Error::Config(format!(
                "l2_penalty must be >= 0, got {}",
                self.l2_penalty
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights {
    pub w0: f64,
    pub w1: f64,
    /// Set when one class never occurs.
    pub warning: Option<String>,
}

impl ClassWeights {
    pub fn weight(&self, y: u8) -> f64 {
        if y == 1 {
            self.w1
        } else {
            self.w0
        }
    }
}

/// Balanced class weights `w_k = n / (2 n_k)`; a missing class gets weight 1.
pub fn class_weights(targets: &[u8]) -> Result<ClassWeights> {
    if targets.is_empty() {
        return Err(Error::invalid("class weights need at least one target"));
    }
    let n = targets.len() as f64;
    let n1 = targets.iter().filter(|&&y| y == 1).count() as f64;
    let n0 = n - n1;
    let mut warning = None;
    let mut weight = |nk: f64, label: u8| {
        if nk == 0.0 {
            let msg = format!("class {label} absent from {n} targets; its weight is set to 1");
            log::warn!("{msg}");
            warning = Some(msg);
            1.0
        } else {
            n / (2.0 * nk)
        }
    };
    let w0 = weight(n0, 0);
    let w1 = weight(n1, 1);
    Ok(ClassWeights { w0, w1, warning })
}

/// Per-column affine scaling frozen from training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Column means and standard deviations, optionally weighted. Columns with
    /// no spread keep a unit scale.
    pub fn fit(x: ArrayView2<'_, f64>, weights: Option<&[f64]>) -> Result<Self> {
        let (n, p) = x.dim();
        let ones;
        let w = match weights {
            Some(w) => w,
            None => {
                ones = vec![1.0; n];
                &ones
            }
        };
        let total: f64 = w.iter().sum();
        if n == 0 || total <= 0.0 {
            return Err(Error::invalid("standardizer needs rows with positive weight"));
        }
        let mut mean = vec![0.0; p];
        for (row, &wi) in x.rows().into_iter().zip(w) {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += wi * v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= total);
        let mut var = vec![0.0; p];
        for (row, &wi) in x.rows().into_iter().zip(w) {
            for ((s, &m), &v) in var.iter_mut().zip(&mean).zip(row) {
                *s += wi * (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / total).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &mut [f64]) {
        for ((v, m), s) in x.iter_mut().zip(&self.mean).zip(&self.scale) {
            *v = (*v - m) / s;
        }
    }
}

pub(crate) fn check_finite(x: ArrayView2<'_, f64>) -> Result<()> {
    for ((i, j), v) in x.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::invalid(format!("non-finite feature {v} at row {i}, column {j}")));
        }
    }
    Ok(())
}

pub(crate) fn check_single_inputs(x: ArrayView2<'_, f64>, y: &[u8], weights: &[f64]) -> Result<()> {
    let n = x.nrows();
    if n == 0 {
        return Err(Error::invalid("cannot fit on zero rows"));
    }
    if y.len() != n || weights.len() != n {
        return Err(Error::invalid(format!(
            "{n} rows but {} targets and {} weights",
            y.len(),
            weights.len()
        )));
    }
    if let Some(bad) = y.iter().find(|&&v| v > 1) {
        return Err(Error::invalid(format!("target {bad} is not binary")));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::invalid("sample weights must be finite and non-negative"));
    }
    check_finite(x)
}

pub(crate) fn check_multi_inputs(
    states: &[AnchorState],
    targets: &[Vec<u8>],
    weights: &[Vec<f64>],
    horizon: usize,
) -> Result<()> {
    let n = states.len();
    if n == 0 {
        return Err(Error::invalid("cannot fit on zero rows"));
    }
    if targets.len() != n || weights.len() != n {
        return Err(Error::invalid(format!(
            "{n} states but {} target rows and {} weight rows",
            targets.len(),
            weights.len()
        )));
    }
    for (t, w) in targets.iter().zip(weights) {
        if t.len() != horizon || w.len() != horizon {
            return Err(Error::invalid(format!(
                "target and weight rows must have length {horizon}"
            )));
        }
        if t.iter().any(|&v| v > 1) {
            return Err(Error::invalid("targets must be binary"));
        }
        if w.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("sample weights must be finite and non-negative"));
        }
    }
    for s in states {
        if s.horizon() != horizon {
            return Err(Error::invalid(format!(
                "state carries a {}-day calendar block, model horizon is {horizon}",
                s.horizon()
            )));
        }
    }
    Ok(())
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Binary cross-entropy on a logit, `softplus(z) - y z`, stable for large `|z|`.
#[inline]
pub(crate) fn bce_logit(z: f64, y: f64) -> f64 {
    let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
    softplus - y * z
}
