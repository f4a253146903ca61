//! Adam optimizer with bias correction.
//!
//! The two networks in the training loop keep independent states with
//! different decay settings, so the optimizer is a free-standing value type
//! rather than something owned by a network.

use crate::error::{Error, Result};

/// Per-parameter first/second moment estimates plus hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(param_count: usize, learning_rate: f64, beta1: f64, beta2: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
            return Err(Error::invalid(
                "adam betas",
                format!("beta1={beta1}, beta2={beta2} must lie in [0, 1)"),
            ));
        }
        if learning_rate <= 0.0 || !learning_rate.is_finite() {
            return Err(Error::invalid("learning rate", learning_rate.to_string()));
        }
        Ok(Self {
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            t: 0,
            learning_rate,
            beta1,
            beta2,
            epsilon: 1e-8,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// One bias-corrected Adam update, in place:
    /// `m ← β₁m + (1−β₁)g`, `v ← β₂v + (1−β₂)g²`,
    /// `p ← p − lr·m̂/(√v̂ + ε)`.
    ///
    /// Non-finite gradients are an error so the caller can abort training
    /// with a diagnostic instead of silently corrupting parameters.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::DimensionMismatch(params.len(), grads.len()));
        }
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / b1t;
            let v_hat = *v / b2t;
            *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}
