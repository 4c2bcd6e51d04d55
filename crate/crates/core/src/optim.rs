//! Adaptive first-order optimizers over flat parameter slices.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(config: AdamConfig, len: usize) -> Self {
        Self {
            config,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        self.t += 1;
        let bc1 = 1.0 - beta1.powi(self.t);
        let bc2 = 1.0 - beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmsPropConfig {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
}

impl Default for RmsPropConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            decay: 0.9,
            epsilon: 1e-8,
        }
    }
}

/// RMSprop with a per-parameter running mean of squared gradients. Supports
/// updating a sub-range, which the skip-gram trainer uses for row updates.
#[derive(Debug, Clone)]
pub struct RmsProp {
    config: RmsPropConfig,
    mean_square: Vec<f64>,
}

impl RmsProp {
    pub fn new(config: RmsPropConfig, len: usize) -> Self {
        Self {
            config,
            mean_square: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.mean_square.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_square.is_empty()
    }

    pub fn mean_square(&self) -> &[f64] {
        &self.mean_square
    }

    pub fn mean_square_mut(&mut self) -> &mut [f64] {
        &mut self.mean_square
    }

    /// Updates `params`, which occupy `offset..offset + params.len()` of the
    /// full parameter vector this optimizer was built for.
    pub fn step_at(&mut self, offset: usize, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), grads.len());
        let RmsPropConfig {
            learning_rate,
            decay,
            epsilon,
        } = self.config;
        let cache = &mut self.mean_square[offset..offset + params.len()];
        for ((p, &g), c) in params.iter_mut().zip(grads).zip(cache.iter_mut()) {
            *c = decay * *c + (1.0 - decay) * g * g;
            *p -= learning_rate * g / (c.sqrt() + epsilon);
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.step_at(0, params, grads);
    }
}
