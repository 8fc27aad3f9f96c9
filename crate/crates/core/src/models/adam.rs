//! Adam with global-norm gradient clipping, over a list of parameter tensors.

use super::activation::Real;

pub(crate) const CLIP_NORM: f64 = 5.0;

#[derive(Debug, Clone)]
pub(crate) struct Adam<T> {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Real> Adam<T> {
    pub fn new(lr: f64, sizes: &[usize]) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
            v: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
        }
    }

    /// Rescales `grads` in place so their joint L2 norm is at most `max_norm`.
    /// Returns the norm before clipping.
    pub fn clip(grads: &mut [&mut [T]], max_norm: f64) -> f64 {
        let norm = grads
            .iter()
            .flat_map(|g| g.iter())
            .map(|v| v.as_f64() * v.as_f64())
            .sum::<f64>()
            .sqrt();
        if norm > max_norm {
            let k = T::of(max_norm / norm);
            grads.iter_mut().for_each(|g| g.iter_mut().for_each(|v| *v *= k));
        }
        norm
    }

    pub fn update(&mut self, params: &mut [&mut [T]], grads: &[&[T]]) {
        self.step += 1;
        let b1 = T::of(self.beta1);
        let b2 = T::of(self.beta2);
        let (one_b1, one_b2) = (T::of(1.0 - self.beta1), T::of(1.0 - self.beta2));
        // bias corrections folded into the step size and epsilon
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        let lr = T::of(self.lr / c1);
        let inv_c2 = T::of(1.0 / c2);
        let eps = T::of(self.eps);
        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for (((p, &g), m), v) in p.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + one_b1 * g;
                *v = b2 * *v + one_b2 * g * g;
                *p -= lr * *m / ((*v * inv_c2).sqrt() + eps);
            }
        }
    }
}
