//! L2-penalised logistic regression fitted by full-batch gradient descent on
//! internally standardized features.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{bce_logit, check_single_inputs, sigmoid, SingleOutputModel, Standardizer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2_penalty: f64,
    standardizer: Option<Standardizer>,
    coef: Vec<f64>,
    intercept: f64,
    loss_history: Vec<f64>,
}

impl LogisticRegression {
    pub fn new(learning_rate: f64, epochs: usize, l2_penalty: f64) -> Self {
        Self {
            learning_rate,
            epochs,
            l2_penalty,
            standardizer: None,
            coef: Vec::new(),
            intercept: 0.0,
            loss_history: Vec::new(),
        }
    }

    /// Coefficients on the standardized scale.
    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    /// Objective value before each gradient step, plus the final one.
    pub fn loss_history(&self) -> &[f64] {
        &self.loss_history
    }

    /// Weighted mean cross-entropy plus `l2_penalty * |coef|^2` on already
    /// standardized `x`, with its gradient w.r.t. `(coef, intercept)`.
    pub fn loss_and_gradient(
        x: ArrayView2<'_, f64>,
        y: &[u8],
        weights: &[f64],
        coef: &[f64],
        intercept: f64,
        l2_penalty: f64,
    ) -> (f64, Vec<f64>, f64) {
        let total: f64 = weights.iter().sum();
        let mut loss = 0.0;
        let mut g = vec![0.0; coef.len()];
        let mut gb = 0.0;
        for ((row, &yi), &wi) in x.rows().into_iter().zip(y).zip(weights) {
            if wi == 0.0 {
                continue;
            }
            let z = intercept + row.iter().zip(coef).map(|(a, b)| a * b).sum::<f64>();
            let yf = yi as f64;
            loss += wi * bce_logit(z, yf);
            let r = wi * (sigmoid(z) - yf);
            for (gj, xj) in g.iter_mut().zip(row) {
                *gj += r * xj;
            }
            gb += r;
        }
        loss /= total;
        gb /= total;
        for (gj, cj) in g.iter_mut().zip(coef) {
            *gj = *gj / total + 2.0 * l2_penalty * cj;
        }
        loss += l2_penalty * coef.iter().map(|c| c * c).sum::<f64>();
        (loss, g, gb)
    }
}

impl Default for LogisticRegression {
    fn default() -> Self {
        Self::new(0.1, 500, 0.0)
    }
}

impl SingleOutputModel for LogisticRegression {
    fn fit(&mut self, x: ArrayView2<'_, f64>, y: &[u8], weights: &[f64]) -> Result<()> {
        check_single_inputs(x, y, weights)?;
        if !(self.learning_rate > 0.0) || self.epochs == 0 || !(self.l2_penalty >= 0.0) {
            return Err(Error::Config(
                "logistic regression needs learning_rate > 0, epochs >= 1, l2_penalty >= 0".into(),
            ));
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::invalid("sample weights sum to zero"));
        }
        let scaler = Standardizer::fit(x, Some(weights))?;
        let mut xs: Array2<f64> = x.to_owned();
        for mut row in xs.rows_mut() {
            scaler.apply(row.as_slice_mut().unwrap());
        }
        let mut coef = vec![0.0; x.ncols()];
        let mut intercept = 0.0;
        self.loss_history.clear();
        for _ in 0..self.epochs {
            let (loss, g, gb) = Self::loss_and_gradient(xs.view(), y, weights, &coef, intercept, self.l2_penalty);
            if !loss.is_finite() {
                return Err(Error::Numerical(format!("logistic loss became {loss}")));
            }
            self.loss_history.push(loss);
            for (c, gj) in coef.iter_mut().zip(&g) {
                *c -= self.learning_rate * gj;
            }
            intercept -= self.learning_rate * gb;
        }
        let (loss, _, _) = Self::loss_and_gradient(xs.view(), y, weights, &coef, intercept, self.l2_penalty);
        self.loss_history.push(loss);
        self.standardizer = Some(scaler);
        self.coef = coef;
        self.intercept = intercept;
        Ok(())
    }

    /// # Panics
    /// If the model was never fitted.
    fn predict_proba(&self, x: &[f64]) -> f64 {
        let scaler = self.standardizer.as_ref().expect("logistic regression must be fitted first");
        let mut v = x.to_vec();
        scaler.apply(&mut v);
        sigmoid(self.intercept + v.iter().zip(&self.coef).map(|(a, b)| a * b).sum::<f64>())
    }
}
