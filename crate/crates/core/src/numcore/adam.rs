use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Multiplier applied to the learning rate at every epoch boundary.
    pub decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            decay: 0.99,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr >= 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0
            && self.decay > 0.0
            && self.decay <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid Adam settings {self:?}")))
        }
    }
}

/// Adam with bias correction and per-epoch exponential learning-rate decay.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
    lr: f64,
}

impl AdamState {
    pub fn new(param_count: usize, config: AdamConfig) -> Self {
        Self {
            config,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            step: 0,
            lr: config.lr,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Current (decayed) learning rate.
    pub fn learning_rate(&self) -> f64 {
        self.lr
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        check_dim("AdamState::step params", self.m.len(), params.len())?;
        check_dim("AdamState::step grads", self.m.len(), grads.len())?;
        let AdamConfig {
            beta1, beta2, eps, ..
        } = self.config;
        self.step += 1;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }

    pub fn end_epoch(&mut self) {
        self.lr *= self.config.decay;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_zero_gradient_leaves_params() {
        let mut st = AdamState::new(3, AdamConfig::default());
        let mut p = vec![1.0, -2.0, 0.5];
        st.step(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(st.steps(), 1);
    }

    #[test]
    fn test_first_step_moves_by_lr() {
        let mut st = AdamState::new(1, AdamConfig::default());
        let mut p = vec![0.0];
        st.step(&mut p, &[1.0]).unwrap();
        // m_hat = 1, v_hat = 1, so the step is lr / (1 + eps).
        let expect = -1e-3 / (1.0 + 1e-8);
        assert!((p[0] - expect).abs() < 1e-18);
    }

    #[test]
    fn test_constant_gradient_monotone() {
        let mut st = AdamState::new(2, AdamConfig::default());
        let mut p = vec![0.0, 0.0];
        let mut prev = p.clone();
        for _ in 0..200 {
            st.step(&mut p, &[2.0, -0.5]).unwrap();
            assert!(p[0] < prev[0] && p[1] > prev[1]);
            prev = p.clone();
        }
    }

    #[test]
    fn test_decay_and_shape_errors() {
        let mut st = AdamState::new(2, AdamConfig::default());
        st.end_epoch();
        st.end_epoch();
        assert!((st.learning_rate() - 1e-3 * 0.99 * 0.99).abs() < 1e-18);
        assert!(st.step(&mut [0.0], &[0.0, 1.0]).is_err());
    }
}
