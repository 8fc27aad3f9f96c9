//! Stacked LSTM over the lag window with a sigmoid head of `H` outputs.
//!
//! Each timestep is one lagged day (`y` and the covariate vector). The future
//! calendar block is concatenated to the last hidden state of the top layer
//! before the dense head, since it is known in advance rather than sequential
//! history.
//!
//! Batches are stored time-major: row `t * B + b` is sample `b` at step `t`.
//! Input projections for all steps are one matrix product; only the recurrent
//! product runs step by step. Kernels are generic over the float type; `f32`
//! is the training default and `f64` backs the finite-difference checks.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::activation::{sigmoid, sigmoid_slice, tanh_slice, Real};
use super::adam::{Adam, CLIP_NORM};
use super::{bce_logit, check_multi_inputs, MultiOutputModel, Standardizer, TrainingConfig};
use crate::error::{Error, Result};
use crate::series::{AnchorState, CALENDAR_WIDTH};

const STEP: usize = AnchorState::STEP_WIDTH;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

/// Input and recurrent weights of one layer. Gate blocks are ordered
/// input, forget, candidate, output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LstmLayer<T> {
    pub w: Array2<T>,
    pub r: Array2<T>,
    pub b: Array1<T>,
}

impl<T: Real> LstmLayer<T> {
    fn init(rng: &mut impl Rng, input: usize, hidden: usize) -> Self {
        let mut uniform = |rows: usize, cols: usize, fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            Array2::from_shape_simple_fn((rows, cols), || T::of(rng.random_range(-bound..bound)))
        };
        let w = uniform(input, 4 * hidden, input);
        let r = uniform(hidden, 4 * hidden, hidden);
        let mut b = Array1::zeros(4 * hidden);
        b.slice_mut(s![hidden..2 * hidden]).fill(T::one());
        Self { w, r, b }
    }

    fn hidden(&self) -> usize {
        self.r.nrows()
    }

    fn zeros_like(&self) -> Self {
        Self {
            w: Array2::zeros(self.w.raw_dim()),
            r: Array2::zeros(self.r.raw_dim()),
            b: Array1::zeros(self.b.raw_dim()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LstmParams<T> {
    pub layers: Vec<LstmLayer<T>>,
    /// `(hidden + H * CALENDAR_WIDTH) x H`.
    pub head_w: Array2<T>,
    pub head_b: Array1<T>,
}

impl<T: Real> LstmParams<T> {
    fn init(rng: &mut impl Rng, hidden: usize, depth: usize, horizon: usize) -> Self {
        let mut layers = Vec::with_capacity(depth);
        for l in 0..depth {
            let input = if l == 0 { STEP } else { hidden };
            layers.push(LstmLayer::init(rng, input, hidden));
        }
        let fan_in = hidden + horizon * CALENDAR_WIDTH;
        let bound = 1.0 / (fan_in as f64).sqrt();
        let head_w = Array2::from_shape_simple_fn((fan_in, horizon), || T::of(rng.random_range(-bound..bound)));
        Self {
            layers,
            head_w,
            head_b: Array1::zeros(horizon),
        }
    }

    fn zeros_like(&self) -> Self {
        Self {
            layers: self.layers.iter().map(LstmLayer::zeros_like).collect(),
            head_w: Array2::zeros(self.head_w.raw_dim()),
            head_b: Array1::zeros(self.head_b.raw_dim()),
        }
    }

    fn tensors(&self) -> Vec<&[T]> {
        let mut v: Vec<&[T]> = Vec::new();
        for l in &self.layers {
            v.push(l.w.as_slice().unwrap());
            v.push(l.r.as_slice().unwrap());
            v.push(l.b.as_slice().unwrap());
        }
        v.push(self.head_w.as_slice().unwrap());
        v.push(self.head_b.as_slice().unwrap());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut v: Vec<&mut [T]> = Vec::new();
        for l in &mut self.layers {
            v.push(l.w.as_slice_mut().unwrap());
            v.push(l.r.as_slice_mut().unwrap());
            v.push(l.b.as_slice_mut().unwrap());
        }
        v.push(self.head_w.as_slice_mut().unwrap());
        v.push(self.head_b.as_slice_mut().unwrap());
        v
    }

    fn flat(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|t| t.iter().map(|v| v.as_f64())).collect()
    }

    fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        let total: usize = self.tensors().iter().map(|t| t.len()).sum();
        if flat.len() != total {
            return Err(Error::invalid(format!(
                "expected {total} parameters, got {}",
                flat.len()
            )));
        }
        let mut it = flat.iter();
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v = T::of(*it.next().unwrap()));
        }
        Ok(())
    }
}

/// Parameters at the precision they were trained in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StoredParams {
    F32(LstmParams<f32>),
    F64(LstmParams<f64>),
}

/// A batch of encoded states.
struct Batch<T> {
    steps: usize,
    size: usize,
    /// `steps * size` rows of standardized step features.
    x: Array2<T>,
    /// `size x (H * CALENDAR_WIDTH)`.
    calendar: Array2<T>,
}

struct LayerCache<T> {
    input: Array2<T>,
    /// Activated gates per row.
    gates: Array2<T>,
    /// `(steps + 1) * size` rows; block 0 is the zero initial state.
    c: Array2<T>,
    h: Array2<T>,
    tanh_c: Array2<T>,
}

struct Forward<T> {
    caches: Vec<LayerCache<T>>,
    features: Array2<T>,
    logits: Array2<T>,
}

fn layer_forward<T: Real>(layer: &LstmLayer<T>, input: Array2<T>, steps: usize, batch: usize) -> LayerCache<T> {
    let u = layer.hidden();
    let mut gates = Array2::zeros((steps * batch, 4 * u));
    general_mat_mul(T::one(), &input, &layer.w, T::zero(), &mut gates);
    gates += &layer.b;
    let mut h = Array2::zeros(((steps + 1) * batch, u));
    let mut c = Array2::zeros(((steps + 1) * batch, u));
    let mut tanh_c = Array2::zeros((steps * batch, u));
    for t in 0..steps {
        let rows = t * batch..(t + 1) * batch;
        let mut z = gates.slice_mut(s![rows.clone(), ..]);
        general_mat_mul(T::one(), &h.slice(s![rows.clone(), ..]), &layer.r, T::one(), &mut z);
        let z = z.into_slice().expect("row blocks of a standard-layout matrix are contiguous");
        let c_all = c.as_slice_mut().unwrap();
        let (c_prev, c_next) = c_all[t * batch * u..(t + 2) * batch * u].split_at_mut(batch * u);
        let h_next = &mut h.as_slice_mut().unwrap()[(t + 1) * batch * u..(t + 2) * batch * u];
        let tc_all = &mut tanh_c.as_slice_mut().unwrap()[t * batch * u..(t + 1) * batch * u];
        for b in 0..batch {
            let zr = &mut z[b * 4 * u..(b + 1) * 4 * u];
            sigmoid_slice(&mut zr[..2 * u]);
            tanh_slice(&mut zr[2 * u..3 * u]);
            sigmoid_slice(&mut zr[3 * u..]);
            let (i, rest) = zr.split_at(u);
            let (f, rest) = rest.split_at(u);
            let (g, o) = rest.split_at(u);
            let cp = &c_prev[b * u..(b + 1) * u];
            let cn = &mut c_next[b * u..(b + 1) * u];
            for k in 0..u {
                cn[k] = f[k] * cp[k] + i[k] * g[k];
            }
            let tc = &mut tc_all[b * u..(b + 1) * u];
            tc.copy_from_slice(cn);
            tanh_slice(tc);
            let hn = &mut h_next[b * u..(b + 1) * u];
            for k in 0..u {
                hn[k] = o[k] * tc[k];
            }
        }
    }
    LayerCache {
        input,
        gates,
        c,
        h,
        tanh_c,
    }
}

/// Backpropagates `d_out` (gradient w.r.t. every hidden output, time-major)
/// through one layer. Returns the gradient w.r.t. the layer input when asked.
fn layer_backward<T: Real>(
    layer: &LstmLayer<T>,
    cache: &LayerCache<T>,
    d_out: &Array2<T>,
    steps: usize,
    batch: usize,
    grad: &mut LstmLayer<T>,
    want_input_grad: bool,
) -> Option<Array2<T>> {
    let u = layer.hidden();
    let one = T::one();
    let mut dz = Array2::<T>::zeros((steps * batch, 4 * u));
    let mut dh_next = Array2::<T>::zeros((batch, u));
    let mut dc_next = vec![T::zero(); batch * u];
    let gates = cache.gates.as_slice().unwrap();
    let tanh_c = cache.tanh_c.as_slice().unwrap();
    let cells = cache.c.as_slice().unwrap();
    let d_out = d_out.as_slice().unwrap();
    for t in (0..steps).rev() {
        {
            let dz_t = &mut dz.as_slice_mut().unwrap()[t * batch * 4 * u..(t + 1) * batch * 4 * u];
            let dhn = dh_next.as_slice().unwrap();
            for b in 0..batch {
                let row = t * batch + b;
                let a = &gates[row * 4 * u..(row + 1) * 4 * u];
                let (i, rest) = a.split_at(u);
                let (f, rest) = rest.split_at(u);
                let (g, o) = rest.split_at(u);
                let tc = &tanh_c[row * u..(row + 1) * u];
                // block t of `c` is the state before step t
                let cp = &cells[row * u..(row + 1) * u];
                let dh_out = &d_out[row * u..(row + 1) * u];
                let dh_rec = &dhn[b * u..(b + 1) * u];
                let dcn = &mut dc_next[b * u..(b + 1) * u];
                let (dzi, rest) = dz_t[b * 4 * u..(b + 1) * 4 * u].split_at_mut(u);
                let (dzf, rest) = rest.split_at_mut(u);
                let (dzg, dzo) = rest.split_at_mut(u);
                for k in 0..u {
                    let dh = dh_out[k] + dh_rec[k];
                    let dc = dcn[k] + dh * o[k] * (one - tc[k] * tc[k]);
                    dzi[k] = dc * g[k] * i[k] * (one - i[k]);
                    dzf[k] = dc * cp[k] * f[k] * (one - f[k]);
                    dzg[k] = dc * i[k] * (one - g[k] * g[k]);
                    dzo[k] = dh * tc[k] * o[k] * (one - o[k]);
                    dcn[k] = dc * f[k];
                }
            }
        }
        if t > 0 {
            let dz_t = dz.slice(s![t * batch..(t + 1) * batch, ..]);
            general_mat_mul(one, &dz_t, &layer.r.t(), T::zero(), &mut dh_next);
        }
    }
    let h_prev = cache.h.slice(s![..steps * batch, ..]);
    general_mat_mul(one, &cache.input.t(), &dz, one, &mut grad.w);
    general_mat_mul(one, &h_prev.t(), &dz, one, &mut grad.r);
    grad.b += &dz.sum_axis(Axis(0));
    want_input_grad.then(|| dz.dot(&layer.w.t()))
}

fn forward<T: Real>(params: &LstmParams<T>, batch: &Batch<T>) -> Forward<T> {
    let (steps, size) = (batch.steps, batch.size);
    let mut caches: Vec<LayerCache<T>> = Vec::with_capacity(params.layers.len());
    for layer in &params.layers {
        let input = match caches.last() {
            None => batch.x.clone(),
            Some(prev) => prev.h.slice(s![size.., ..]).to_owned(),
        };
        caches.push(layer_forward(layer, input, steps, size));
    }
    let top = caches.last().unwrap();
    let u = params.layers[0].hidden();
    let cal_width = batch.calendar.ncols();
    let mut features = Array2::zeros((size, u + cal_width));
    features
        .slice_mut(s![.., ..u])
        .assign(&top.h.slice(s![steps * size.., ..]));
    features.slice_mut(s![.., u..]).assign(&batch.calendar);
    let mut logits = features.dot(&params.head_w);
    logits += &params.head_b;
    Forward {
        caches,
        features,
        logits,
    }
}

/// Mean over the batch of the weighted cross-entropy summed over horizons,
/// plus the L2 penalty on weight matrices, and its gradient. The loss itself
/// is accumulated in `f64`.
fn loss_and_grad<T: Real>(
    params: &LstmParams<T>,
    batch: &Batch<T>,
    y: &Array2<f64>,
    w: &Array2<f64>,
    l2: f64,
) -> (f64, LstmParams<T>) {
    let fwd = forward(params, batch);
    let (steps, size) = (batch.steps, batch.size);
    let n = size as f64;
    let mut loss = 0.0;
    let mut d_logits = Array2::<T>::zeros(fwd.logits.raw_dim());
    for ((idx, &z), dl) in fwd.logits.indexed_iter().zip(d_logits.iter_mut()) {
        let (yi, wi) = (y[idx], w[idx]);
        loss += wi * bce_logit(z.as_f64(), yi);
        *dl = T::of(wi / n) * (sigmoid(z) - T::of(yi));
    }
    loss /= n;

    let mut grad = params.zeros_like();
    general_mat_mul(T::one(), &fwd.features.t(), &d_logits, T::zero(), &mut grad.head_w);
    grad.head_b = d_logits.sum_axis(Axis(0));
    let u = params.layers[0].hidden();
    let d_features = d_logits.dot(&params.head_w.t());

    let mut d_out = Array2::zeros((steps * size, u));
    d_out
        .slice_mut(s![(steps - 1) * size.., ..])
        .assign(&d_features.slice(s![.., ..u]));
    for l in (0..params.layers.len()).rev() {
        let d_in = layer_backward(
            &params.layers[l],
            &fwd.caches[l],
            &d_out,
            steps,
            size,
            &mut grad.layers[l],
            l > 0,
        );
        if let Some(d_in) = d_in {
            d_out = d_in;
        }
    }

    if l2 > 0.0 {
        let sq = |m: &Array2<T>| m.iter().map(|v| v.as_f64() * v.as_f64()).sum::<f64>();
        let k = T::of(2.0 * l2);
        for (layer, g) in params.layers.iter().zip(&mut grad.layers) {
            loss += l2 * (sq(&layer.w) + sq(&layer.r));
            g.w.scaled_add(k, &layer.w);
            g.r.scaled_add(k, &layer.r);
        }
        loss += l2 * sq(&params.head_w);
        grad.head_w.scaled_add(k, &params.head_w);
    }
    (loss, grad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lstm {
    pub config: TrainingConfig,
    #[serde(default)]
    pub precision: Precision,
    horizon: usize,
    standardizer: Option<Standardizer>,
    params: Option<StoredParams>,
    loss_history: Vec<f64>,
}

impl Lstm {
    pub fn new(config: TrainingConfig, horizon: usize) -> Self {
        Self {
            config,
            precision: Precision::default(),
            horizon,
            standardizer: None,
            params: None,
            loss_history: Vec::new(),
        }
    }

    pub fn with_precision(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }

    /// Mean training loss per epoch of the last fit.
    pub fn loss_history(&self) -> &[f64] {
        &self.loss_history
    }

    pub fn params(&self) -> Option<&StoredParams> {
        self.params.as_ref()
    }

    /// Freezes input scaling from `states` and draws fresh weights from the
    /// configured seed. [`MultiOutputModel::fit`] starts with this.
    pub fn initialize(&mut self, states: &[AnchorState]) -> Result<()> {
        self.config.validate()?;
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        if states.is_empty() {
            return Err(Error::invalid("cannot initialize on zero states"));
        }
        let mut steps = Vec::new();
        for st in states {
            for step in st.sequence() {
                steps.extend_from_slice(&step);
            }
        }
        let rows = steps.len() / STEP;
        let x = Array2::from_shape_vec((rows, STEP), steps).expect("step rows");
        super::check_finite(x.view())?;
        self.standardizer = Some(Standardizer::fit(x.view(), None)?);
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let (hidden, depth, horizon) = (self.config.hidden_units, self.config.layers, self.horizon);
        self.params = Some(match self.precision {
            Precision::F32 => StoredParams::F32(LstmParams::init(&mut rng, hidden, depth, horizon)),
            Precision::F64 => StoredParams::F64(LstmParams::init(&mut rng, hidden, depth, horizon)),
        });
        Ok(())
    }

    /// Packs states into a time-major batch. All states must share one window.
    fn encode<T: Real>(&self, states: &[&AnchorState]) -> Result<Batch<T>> {
        let scaler = self
            .standardizer
            .as_ref()
            .ok_or_else(|| Error::invalid("LSTM is not initialized"))?;
        let steps = states[0].outcome_depth().max(states[0].covariate_depth());
        let size = states.len();
        let cal_width = self.horizon * CALENDAR_WIDTH;
        let mut x = Array2::zeros((steps * size, STEP));
        let mut calendar = Array2::zeros((size, cal_width));
        for (b, st) in states.iter().enumerate() {
            let seq = st.sequence();
            if seq.len() != steps || st.calendar.len() != cal_width {
                return Err(Error::invalid("states in a batch must share lag depths and horizon"));
            }
            for (t, step) in seq.iter().enumerate() {
                let mut v = *step;
                scaler.apply(&mut v);
                for (dst, src) in x.row_mut(t * size + b).iter_mut().zip(v) {
                    *dst = T::of(src);
                }
            }
            for (dst, &src) in calendar.row_mut(b).iter_mut().zip(&st.calendar) {
                *dst = T::of(src);
            }
        }
        Ok(Batch {
            steps,
            size,
            x,
            calendar,
        })
    }

    fn targets(targets: &[&Vec<u8>], weights: &[&Vec<f64>], horizon: usize) -> (Array2<f64>, Array2<f64>) {
        let n = targets.len();
        let y = Array2::from_shape_fn((n, horizon), |(i, h)| targets[i][h] as f64);
        let w = Array2::from_shape_fn((n, horizon), |(i, h)| weights[i][h]);
        (y, w)
    }

    /// All parameters in a fixed order: per layer `W`, `R`, `b`, then the head.
    pub fn flat_params(&self) -> Option<Vec<f64>> {
        self.params.as_ref().map(|p| match p {
            StoredParams::F32(p) => p.flat(),
            StoredParams::F64(p) => p.flat(),
        })
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        match self
            .params
            .as_mut()
            .ok_or_else(|| Error::invalid("LSTM is not initialized"))?
        {
            StoredParams::F32(p) => p.set_flat(flat),
            StoredParams::F64(p) => p.set_flat(flat),
        }
    }

    /// Training loss over `states` taken as one batch, and its gradient in
    /// [`Lstm::flat_params`] order.
    pub fn loss_and_gradient(
        &self,
        states: &[AnchorState],
        targets: &[Vec<u8>],
        weights: &[Vec<f64>],
    ) -> Result<(f64, Vec<f64>)> {
        check_multi_inputs(states, targets, weights, self.horizon)?;
        let refs: Vec<&AnchorState> = states.iter().collect();
        let (y, w) = Self::targets(
            &targets.iter().collect::<Vec<_>>(),
            &weights.iter().collect::<Vec<_>>(),
            self.horizon,
        );
        let l2 = self.config.l2_penalty;
        match self.params.as_ref().ok_or_else(|| Error::invalid("LSTM is not initialized"))? {
            StoredParams::F32(p) => {
                let (loss, g) = loss_and_grad(p, &self.encode(&refs)?, &y, &w, l2);
                Ok((loss, g.flat()))
            }
            StoredParams::F64(p) => {
                let (loss, g) = loss_and_grad(p, &self.encode(&refs)?, &y, &w, l2);
                Ok((loss, g.flat()))
            }
        }
    }

    /// Cell and hidden states of every layer after each timestep.
    pub fn trace(&self, state: &AnchorState) -> Result<Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)>> {
        fn run<T: Real>(m: &Lstm, p: &LstmParams<T>, state: &AnchorState) -> Result<Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)>> {
            let fwd = forward(p, &m.encode::<T>(&[state])?);
            let rows = |a: &Array2<T>| -> Vec<Vec<f64>> {
                a.rows().into_iter().skip(1).map(|r| r.iter().map(|v| v.as_f64()).collect()).collect()
            };
            Ok(fwd.caches.iter().map(|c| (rows(&c.c), rows(&c.h))).collect())
        }
        match self.params.as_ref().ok_or_else(|| Error::invalid("LSTM is not initialized"))? {
            StoredParams::F32(p) => run(self, p, state),
            StoredParams::F64(p) => run(self, p, state),
        }
    }

    fn train<T: Real>(
        &mut self,
        mut params: LstmParams<T>,
        states: &[AnchorState],
        targets: &[Vec<u8>],
        weights: &[Vec<f64>],
    ) -> Result<LstmParams<T>> {
        let cfg = self.config.clone();
        let sizes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
        let mut adam = Adam::<T>::new(cfg.learning_rate, &sizes);
        // a separate stream keeps batch order independent of initialization draws
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(1);
        let mut order: Vec<usize> = (0..states.len()).collect();
        self.loss_history.clear();
        for epoch in 0..cfg.epochs {
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for (k, chunk) in order.chunks(cfg.batch_size).enumerate() {
                let st: Vec<&AnchorState> = chunk.iter().map(|&i| &states[i]).collect();
                let tg: Vec<&Vec<u8>> = chunk.iter().map(|&i| &targets[i]).collect();
                let wt: Vec<&Vec<f64>> = chunk.iter().map(|&i| &weights[i]).collect();
                let batch = self.encode::<T>(&st)?;
                let (y, w) = Self::targets(&tg, &wt, self.horizon);
                let (loss, mut grad) = loss_and_grad(&params, &batch, &y, &w, cfg.l2_penalty);
                if !loss.is_finite() {
                    return Err(Error::Numerical(format!(
                        "LSTM loss became {loss} at epoch {epoch}, batch {k}"
                    )));
                }
                epoch_loss += loss * chunk.len() as f64;
                let mut g = grad.tensors_mut();
                let norm = Adam::clip(&mut g, CLIP_NORM);
                if !norm.is_finite() {
                    return Err(Error::Numerical(format!(
                        "LSTM gradient norm became {norm} at epoch {epoch}, batch {k}"
                    )));
                }
                let g: Vec<&[T]> = g.into_iter().map(|s| &*s).collect();
                adam.update(&mut params.tensors_mut(), &g);
            }
            self.loss_history.push(epoch_loss / states.len() as f64);
        }
        Ok(params)
    }
}

impl MultiOutputModel for Lstm {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn fit(&mut self, states: &[AnchorState], targets: &[Vec<u8>], weights: &[Vec<f64>]) -> Result<()> {
        check_multi_inputs(states, targets, weights, self.horizon)?;
        self.initialize(states)?;
        let trained = match self.params.take().expect("initialized") {
            StoredParams::F32(p) => StoredParams::F32(self.train(p, states, targets, weights)?),
            StoredParams::F64(p) => StoredParams::F64(self.train(p, states, targets, weights)?),
        };
        self.params = Some(trained);
        Ok(())
    }

    /// # Panics
    /// If the model was never fitted or initialized.
    fn predict_vector(&self, state: &AnchorState) -> Vec<f64> {
        fn run<T: Real>(m: &Lstm, p: &LstmParams<T>, state: &AnchorState) -> Vec<f64> {
            let batch = m.encode::<T>(&[state]).expect("state shape matches the fitted model");
            forward(p, &batch).logits.iter().map(|&z| super::sigmoid(z.as_f64())).collect()
        }
        match self.params.as_ref().expect("LSTM must be fitted before predicting") {
            StoredParams::F32(p) => run(self, p, state),
            StoredParams::F64(p) => run(self, p, state),
        }
    }
}
