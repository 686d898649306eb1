use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::tensor::{ParamStore, Tensor};
use crate::error::{bail, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 2e-4, beta1: 0.7, beta2: 0.999, eps: 1e-8 }
    }
}

/// First and second moment estimates for every entry of a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: u64,
}

impl AdamState {
    pub fn new(params: &ParamStore, config: AdamConfig) -> Self {
        let zeros = || params.tensors().iter().map(|p| Tensor::zeros(p.rows(), p.cols())).collect();
        Self { config, m: zeros(), v: zeros(), t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One bias-corrected Adam update of every trainable parameter.
    pub fn step(&mut self, params: &mut ParamStore, grads: &[Tensor]) -> Result<()> {
        if grads.len() != params.len() || grads.iter().zip(params.tensors()).any(|(g, p)| g.shape() != p.shape()) {
            bail!(Dimension, "gradient list does not match the parameter store");
        }
        if self.m.len() != params.len() {
            bail!(Dimension, "optimizer state built for a different store");
        }
        self.t += 1;
        let AdamConfig { learning_rate, beta1, beta2, eps } = self.config;
        let t = self.t as i32;
        let c1 = 1.0 - libm::pow(beta1, f64::from(t));
        let c2 = 1.0 - libm::pow(beta2, f64::from(t));
        for (k, id) in params.ids().collect::<Vec<_>>().into_iter().enumerate() {
            if !params.is_trainable(id) {
                continue;
            }
            let g = grads[k].data();
            let m = self.m[k].data_mut();
            let v = self.v[k].data_mut();
            let p = params.get_mut(id).data_mut();
            for i in 0..g.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= learning_rate * m_hat / (libm::sqrt(v_hat) + eps);
            }
        }
        Ok(())
    }
}
