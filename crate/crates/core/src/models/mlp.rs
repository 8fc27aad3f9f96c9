//! Multilayer perceptron with tanh hidden layers and one sigmoid output per
//! horizon, trained with Adam on class-weighted cross-entropy.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{Adam, CLIP_NORM};
use super::{bce_logit, check_multi_inputs, sigmoid, MultiOutputModel, Standardizer, TrainingConfig};
use crate::error::{Error, Result};
use crate::series::AnchorState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub config: TrainingConfig,
    horizon: usize,
    /// Start the output layer at zero so every initial prediction is 0.5.
    pub zero_output_init: bool,
    standardizer: Option<Standardizer>,
    layers: Vec<Dense>,
    loss_history: Vec<f64>,
}

impl Mlp {
    pub fn new(config: TrainingConfig, horizon: usize) -> Self {
        Self {
            config,
            horizon,
            zero_output_init: false,
            standardizer: None,
            layers: Vec::new(),
            loss_history: Vec::new(),
        }
    }

    pub fn loss_history(&self) -> &[f64] {
        &self.loss_history
    }

    pub fn initialize(&mut self, states: &[AnchorState]) -> Result<()> {
        self.config.validate()?;
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        if states.is_empty() {
            return Err(Error::invalid("cannot initialize on zero states"));
        }
        let raw = Self::raw_matrix(states)?;
        super::check_finite(raw.view())?;
        self.standardizer = Some(Standardizer::fit(raw.view(), None)?);
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let mut widths = vec![raw.ncols()];
        widths.extend(std::iter::repeat_n(self.config.hidden_units, self.config.layers));
        widths.push(self.horizon);
        self.layers = widths
            .windows(2)
            .map(|io| {
                let bound = 1.0 / (io[0] as f64).sqrt();
                Dense {
                    w: Array2::from_shape_simple_fn((io[0], io[1]), || rng.random_range(-bound..bound)),
                    b: Array1::zeros(io[1]),
                }
            })
            .collect();
        if self.zero_output_init {
            self.layers.last_mut().unwrap().w.fill(0.0);
        }
        Ok(())
    }

    fn raw_matrix(states: &[AnchorState]) -> Result<Array2<f64>> {
        let width = states[0].joint_features().len();
        let mut x = Array2::zeros((states.len(), width));
        for (mut row, s) in x.rows_mut().into_iter().zip(states) {
            let f = s.joint_features();
            if f.len() != width {
                return Err(Error::invalid("states must share lag depths and horizon"));
            }
            row.as_slice_mut().unwrap().copy_from_slice(&f);
        }
        Ok(x)
    }

    fn encode(&self, states: &[AnchorState]) -> Result<Array2<f64>> {
        let scaler = self.standardizer.as_ref().ok_or_else(|| Error::invalid("MLP is not initialized"))?;
        let mut x = Self::raw_matrix(states)?;
        if x.ncols() != scaler.width() {
            return Err(Error::invalid(format!(
                "feature width {} differs from fitted width {}",
                x.ncols(),
                scaler.width()
            )));
        }
        for mut row in x.rows_mut() {
            scaler.apply(row.as_slice_mut().unwrap());
        }
        Ok(x)
    }

    /// Activations of every layer; the last entry holds output logits.
    fn forward(&self, x: &Array2<f64>) -> Vec<Array2<f64>> {
        let mut acts = vec![x.clone()];
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = acts.last().unwrap().dot(&layer.w);
            z += &layer.b;
            if k + 1 < self.layers.len() {
                z.mapv_inplace(f64::tanh);
            }
            acts.push(z);
        }
        acts
    }

    fn loss_and_grad(&self, x: &Array2<f64>, y: &Array2<f64>, w: &Array2<f64>) -> (f64, Vec<Dense>) {
        let acts = self.forward(x);
        let n = x.nrows() as f64;
        let logits = acts.last().unwrap();
        let mut loss = 0.0;
        let mut delta = Array2::zeros(logits.raw_dim());
        for ((idx, &z), d) in logits.indexed_iter().zip(delta.iter_mut()) {
            loss += w[idx] * bce_logit(z, y[idx]);
            *d = w[idx] * (sigmoid(z) - y[idx]) / n;
        }
        loss /= n;
        let l2 = self.config.l2_penalty;
        let mut grads = Vec::with_capacity(self.layers.len());
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let mut gw = Array2::zeros(layer.w.raw_dim());
            general_mat_mul(1.0, &acts[k].t(), &delta, 0.0, &mut gw);
            if l2 > 0.0 {
                loss += l2 * layer.w.iter().map(|v| v * v).sum::<f64>();
                gw.scaled_add(2.0 * l2, &layer.w);
            }
            let gb = delta.sum_axis(Axis(0));
            if k > 0 {
                let mut back = delta.dot(&layer.w.t());
                back.zip_mut_with(&acts[k], |d, &a| *d *= 1.0 - a * a);
                delta = back;
            }
            grads.push(Dense { w: gw, b: gb });
        }
        grads.reverse();
        (loss, grads)
    }

    fn target_matrices(targets: &[Vec<u8>], weights: &[Vec<f64>], horizon: usize) -> (Array2<f64>, Array2<f64>) {
        let n = targets.len();
        (
            Array2::from_shape_fn((n, horizon), |(i, h)| targets[i][h] as f64),
            Array2::from_shape_fn((n, horizon), |(i, h)| weights[i][h]),
        )
    }

    /// Weights then bias of each layer, input side first.
    pub fn flat_params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.w.iter().chain(l.b.iter()).copied())
            .collect()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        let total: usize = self.layers.iter().map(|l| l.w.len() + l.b.len()).sum();
        if flat.len() != total {
            return Err(Error::invalid(format!("expected {total} parameters, got {}", flat.len())));
        }
        let mut it = flat.iter();
        for l in &mut self.layers {
            l.w.iter_mut().chain(l.b.iter_mut()).for_each(|v| *v = *it.next().unwrap());
        }
        Ok(())
    }

    /// Loss over all `states` as one batch and its gradient in
    /// [`Mlp::flat_params`] order.
    pub fn loss_and_gradient(
        &self,
        states: &[AnchorState],
        targets: &[Vec<u8>],
        weights: &[Vec<f64>],
    ) -> Result<(f64, Vec<f64>)> {
        check_multi_inputs(states, targets, weights, self.horizon)?;
        let x = self.encode(states)?;
        let (y, w) = Self::target_matrices(targets, weights, self.horizon);
        let (loss, grads) = self.loss_and_grad(&x, &y, &w);
        let flat = grads.iter().flat_map(|l| l.w.iter().chain(l.b.iter()).copied()).collect();
        Ok((loss, flat))
    }
}

impl MultiOutputModel for Mlp {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn fit(&mut self, states: &[AnchorState], targets: &[Vec<u8>], weights: &[Vec<f64>]) -> Result<()> {
        check_multi_inputs(states, targets, weights, self.horizon)?;
        self.initialize(states)?;
        let x = self.encode(states)?;
        let (y, w) = Self::target_matrices(targets, weights, self.horizon);
        let sizes: Vec<usize> = self.layers.iter().flat_map(|l| [l.w.len(), l.b.len()]).collect();
        let mut adam = Adam::new(self.config.learning_rate, &sizes);
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(1);
        let mut order: Vec<usize> = (0..states.len()).collect();
        self.loss_history.clear();
        for epoch in 0..self.config.epochs {
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for (k, chunk) in order.chunks(self.config.batch_size).enumerate() {
                let xb = x.select(Axis(0), chunk);
                let yb = y.select(Axis(0), chunk);
                let wb = w.select(Axis(0), chunk);
                let (loss, mut grads) = self.loss_and_grad(&xb, &yb, &wb);
                if !loss.is_finite() {
                    return Err(Error::Numerical(format!("MLP loss became {loss} at epoch {epoch}, batch {k}")));
                }
                total += loss * chunk.len() as f64;
                let mut g: Vec<&mut [f64]> = grads
                    .iter_mut()
                    .flat_map(|l| [l.w.as_slice_mut().unwrap(), l.b.as_slice_mut().unwrap()])
                    .collect();
                let norm = Adam::clip(&mut g, CLIP_NORM);
                if !norm.is_finite() {
                    return Err(Error::Numerical(format!(
                        "MLP gradient norm became {norm} at epoch {epoch}, batch {k}"
                    )));
                }
                let g: Vec<&[f64]> = g.into_iter().map(|s| &*s).collect();
                let mut p: Vec<&mut [f64]> = self
                    .layers
                    .iter_mut()
                    .flat_map(|l| [l.w.as_slice_mut().unwrap(), l.b.as_slice_mut().unwrap()])
                    .collect();
                adam.update(&mut p, &g);
            }
            self.loss_history.push(total / states.len() as f64);
        }
        Ok(())
    }

    /// # Panics
    /// If the model was never fitted or initialized.
    fn predict_vector(&self, state: &AnchorState) -> Vec<f64> {
        let x = self
            .encode(std::slice::from_ref(state))
            .expect("MLP must be fitted on states of the same shape");
        self.forward(&x).last().unwrap().iter().map(|&z| sigmoid(z)).collect()
    }
}
