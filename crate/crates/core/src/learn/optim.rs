//! First-order optimizers over flat parameter buffers.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Clone, Debug)]
pub struct Optimizer<T> {
    kind: OptimizerKind,
    lr: T,
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(kind: OptimizerKind, lr: f64, params: usize) -> Self {
        let state = match kind {
            OptimizerKind::Sgd => 0,
            OptimizerKind::Adam { .. } => params,
        };
        Self { kind, lr: T::lit(lr), m: vec![T::zero(); state], v: vec![T::zero(); state], t: 0 }
    }

    /// Descends along `grads` (gradients of a loss to minimize).
    pub fn step(&mut self, params: &mut [T], grads: &[T]) {
        assert_eq!(params.len(), grads.len());
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, &g) in params.iter_mut().zip(grads) {
                    *p -= self.lr * g;
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                self.t += 1;
                let (b1, b2, eps) = (T::lit(beta1), T::lit(beta2), T::lit(eps));
                let c1 = T::one() - b1.powi(self.t);
                let c2 = T::one() - b2.powi(self.t);
                let step = self.lr * c2.sqrt() / c1;
                for i in 0..params.len() {
                    let g = grads[i];
                    self.m[i] = b1 * self.m[i] + (T::one() - b1) * g;
                    self.v[i] = b2 * self.v[i] + (T::one() - b2) * g * g;
                    params[i] -= step * self.m[i] / (self.v[i].sqrt() + eps * c2.sqrt());
                }
            }
        }
    }
}

/// Rescales `grads` in place so its L2 norm is at most `max_norm`.
pub fn clip_grad_norm<T: Scalar>(grads: &mut [T], max_norm: f64) -> T {
    let norm = grads.iter().fold(T::zero(), |acc, &g| acc + g * g).sqrt();
    let max = T::lit(max_norm);
    if norm > max {
        let scale = max / norm;
        for g in grads.iter_mut() {
            *g *= scale;
        }
    }
    norm
}
