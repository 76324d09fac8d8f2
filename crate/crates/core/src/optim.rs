//! Adam optimizer with bias correction.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Adam hyperparameters. Defaults: learning rate 0.001, beta1 0.9,
/// beta2 0.999, epsilon 1e-8.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config(format!(
                "adam betas must lie in [0, 1), got beta1={}, beta2={}",
                self.beta1, self.beta2
            )));
        }
        if self.epsilon <= 0.0 {
            return Err(Error::Config(format!(
                "adam epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Optimizer state: step counter plus first/second moment accumulators whose
/// shapes mirror the parameter tensors. One instance per training run;
/// mutation is single-threaded.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    config: AdamConfig,
    step_count: u64,
    moments: Vec<(Tensor<T>, Tensor<T>)>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(config: AdamConfig) -> Result<Self> {
        config.validate()?;
        Ok(Adam {
            config,
            step_count: 0,
            moments: Vec::new(),
        })
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// One update over all parameter tensors:
    /// `m <- b1 m + (1-b1) g`, `v <- b2 v + (1-b2) g^2`, then
    /// `p <- p - lr * m_hat / (sqrt(v_hat) + eps)` with bias-corrected
    /// `m_hat = m / (1 - b1^t)`, `v_hat = v / (1 - b2^t)`.
    ///
    /// Moment accumulators are created on the first call and must keep the
    /// same shapes afterwards.
    pub fn step(&mut self, params: &mut [&mut Tensor<T>], grads: &[&Tensor<T>]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::Shape(format!(
                "{} parameter tensors but {} gradient tensors",
                params.len(),
                grads.len()
            )));
        }
        if self.moments.is_empty() {
            self.moments = params
                .iter()
                .map(|p| {
                    let z = Tensor::from_parts(p.shape().to_vec(), vec![T::zero(); p.len()]);
                    (z.clone(), z)
                })
                .collect();
        }
        if self.moments.len() != params.len() {
            return Err(Error::Shape(format!(
                "optimizer tracks {} tensors but was given {}",
                self.moments.len(),
                params.len()
            )));
        }

        self.step_count += 1;
        let t = self.step_count;
        let b1 = T::from_f64(self.config.beta1);
        let b2 = T::from_f64(self.config.beta2);
        let lr = T::from_f64(self.config.learning_rate);
        let eps = T::from_f64(self.config.epsilon);
        let one = T::one();
        let m_corr = one / (one - T::from_f64(self.config.beta1.powi(t as i32)));
        let v_corr = one / (one - T::from_f64(self.config.beta2.powi(t as i32)));

        for ((param, grad), (m, v)) in params.iter_mut().zip(grads).zip(self.moments.iter_mut()) {
            if param.shape() != grad.shape() || param.shape() != m.shape() {
                return Err(Error::Shape(format!(
                    "parameter {:?}, gradient {:?}, moments {:?}",
                    param.shape(),
                    grad.shape(),
                    m.shape()
                )));
            }
            let pdata = param.data_mut();
            let mdata = m.data_mut();
            let vdata = v.data_mut();
            for ((p, &g), (mi, vi)) in pdata
                .iter_mut()
                .zip(grad.data())
                .zip(mdata.iter_mut().zip(vdata.iter_mut()))
            {
                *mi = b1 * *mi + (one - b1) * g;
                *vi = b2 * *vi + (one - b2) * g * g;
                let m_hat = *mi * m_corr;
                let v_hat = *vi * v_corr;
                *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
