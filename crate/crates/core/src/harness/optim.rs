//! AdamW with decoupled weight decay and a warmup-free cosine schedule.

use serde::{Deserialize, Serialize};

use crate::num::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamWParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWParams {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.01 }
    }
}

/// Moment buffers for a flat parameter vector.
#[derive(Clone, Debug)]
pub struct AdamW<F> {
    params: AdamWParams,
    m: Vec<F>,
    v: Vec<F>,
    step: i32,
}

impl<F: Scalar> AdamW<F> {
    pub fn new(size: usize, params: AdamWParams) -> Self {
        Self { params, m: vec![F::zero(); size], v: vec![F::zero(); size], step: 0 }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    /// One update of `weights` from `grads` at learning rate `lr`.
    /// `decay_mask[i] == false` exempts parameter `i` from weight decay.
    pub fn update(&mut self, weights: &mut [F], grads: &[F], lr: F, decay_mask: impl Fn(usize) -> bool) {
        debug_assert_eq!(weights.len(), self.m.len());
        self.step += 1;
        let b1 = F::of(self.params.beta1);
        let b2 = F::of(self.params.beta2);
        let eps = F::of(self.params.eps);
        let wd = F::of(self.params.weight_decay);
        let one = F::one();
        let c1 = one - b1.powi(self.step);
        let c2 = one - b2.powi(self.step);
        for i in 0..weights.len() {
            let g = grads[i];
            if decay_mask(i) {
                weights[i] -= lr * wd * weights[i];
            }
            if g == F::zero() && self.m[i] == F::zero() && self.v[i] == F::zero() {
                continue;
            }
            self.m[i] = b1 * self.m[i] + (one - b1) * g;
            self.v[i] = b2 * self.v[i] + (one - b2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            weights[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

/// Learning rate at `step` of `total` under cosine annealing from `base` to `min`.
pub fn cosine_lr(base: f64, min: f64, step: usize, total: usize) -> f64 {
    if total <= 1 {
        return base;
    }
    let progress = step as f64 / total as f64;
    min + 0.5 * (base - min) * (1.0 + (std::f64::consts::PI * progress).cos())
}
