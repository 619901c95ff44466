use serde::{Deserialize, Serialize};

use super::mlp::MlpGradientNet;
use super::train::Grads;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Moment estimates shaped like the network's parameters.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub t: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Real> AdamState<T> {
    pub fn new(net: &MlpGradientNet<T>, config: AdamConfig) -> Self {
        let shapes: Vec<Vec<T>> = net
            .blocks()
            .iter()
            .flat_map(|b| {
                [b.w1.as_slice().len(), b.b1.len(), b.w2.as_slice().len(), b.b2.len()].map(|n| vec![T::zero(); n])
            })
            .collect();
        Self { config, t: 0, m: shapes.clone(), v: shapes }
    }

    /// One bias-corrected Adam update.
    pub fn update(&mut self, net: &mut MlpGradientNet<T>, grads: &Grads<T>) {
        self.t += 1;
        let c = self.config;
        let (b1, b2) = (T::lit(c.beta1), T::lit(c.beta2));
        let (one_b1, one_b2) = (T::one() - b1, T::one() - b2);
        let bc1 = T::one() - b1.powi(self.t as i32);
        let bc2 = T::one() - b2.powi(self.t as i32);
        let step = T::lit(c.lr) * bc2.sqrt() / bc1;
        let eps_hat = T::lit(c.eps) * bc2.sqrt();
        let mut slot = 0;
        for (blk, g) in net.blocks_mut().iter_mut().zip(&grads.blocks) {
            for (p, gp) in blk.params_mut().into_iter().zip(g) {
                let (m, v) = (&mut self.m[slot], &mut self.v[slot]);
                for i in 0..p.len() {
                    m[i] = b1 * m[i] + one_b1 * gp[i];
                    v[i] = b2 * v[i] + one_b2 * gp[i] * gp[i];
                    p[i] -= step * m[i] / (v[i].sqrt() + eps_hat);
                }
                slot += 1;
            }
        }
    }
}
