//! Fully connected layer. Linear map only; activations are separate ops.

use crate::error::{Error, Result};
use crate::init;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

use rand_chacha::ChaCha8Rng;

/// `out = weights . input + bias` with `weights: [out_units, in_units]`.
/// Caches its input on forward, same rule as the convolution layer.
#[derive(Debug, Clone)]
pub struct FcLayer<T> {
    weights: Tensor<T>,
    bias: Tensor<T>,
    cached_input: Option<Tensor<T>>,
}

impl<T: Scalar> FcLayer<T> {
    pub fn new(weights: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        if weights.rank() != 2 {
            return Err(Error::Shape(format!(
                "fc weights must be [out, in], got {:?}",
                weights.shape()
            )));
        }
        if bias.rank() != 1 || bias.len() != weights.shape()[0] {
            return Err(Error::Shape(format!(
                "fc bias {:?} does not match {} output units",
                bias.shape(),
                weights.shape()[0]
            )));
        }
        Ok(FcLayer {
            weights,
            bias,
            cached_input: None,
        })
    }

    pub fn he_init(out_units: usize, in_units: usize, rng: &mut ChaCha8Rng) -> Self {
        let weights = init::he_normal(&[out_units, in_units], in_units, rng);
        let bias = Tensor::from_parts(vec![out_units], vec![T::zero(); out_units]);
        FcLayer {
            weights,
            bias,
            cached_input: None,
        }
    }

    pub fn out_units(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn in_units(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn weights(&self) -> &Tensor<T> {
        &self.weights
    }

    pub fn bias(&self) -> &Tensor<T> {
        &self.bias
    }

    pub fn params_mut(&mut self) -> (&mut Tensor<T>, &mut Tensor<T>) {
        (&mut self.weights, &mut self.bias)
    }

    pub fn forward(&mut self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let out = fc(&self.weights, &self.bias, input)?;
        self.cached_input = Some(input.clone());
        Ok(out)
    }

    pub fn backward(&self, grad_out: &Tensor<T>) -> Result<FcGrads<T>> {
        let input = self
            .cached_input
            .as_ref()
            .ok_or_else(|| Error::State("fc backward called before forward".to_string()))?;
        fc_grads(&self.weights, input, grad_out)
    }
}

#[derive(Debug)]
pub struct FcGrads<T> {
    pub input: Tensor<T>,
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

pub fn fc<T: Scalar>(weights: &Tensor<T>, bias: &Tensor<T>, input: &Tensor<T>) -> Result<Tensor<T>> {
    if input.rank() != 1 || input.len() != weights.shape()[1] {
        return Err(Error::Shape(format!(
            "fc input {:?} does not match weights {:?}",
            input.shape(),
            weights.shape()
        )));
    }
    let wx = weights.matvec(input)?;
    wx.add(bias)
}

pub fn fc_grads<T: Scalar>(
    weights: &Tensor<T>,
    input: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<FcGrads<T>> {
    let (out_units, in_units) = (weights.shape()[0], weights.shape()[1]);
    if grad_out.rank() != 1 || grad_out.len() != out_units {
        return Err(Error::Shape(format!(
            "fc grad_out {:?}, expected [{}]",
            grad_out.shape(),
            out_units
        )));
    }

    // grad_input[j] = sum_o w[o, j] * g[o]
    let mut grad_input = vec![T::zero(); in_units];
    for o in 0..out_units {
        let g = grad_out.data()[o];
        for (gi, &w) in grad_input.iter_mut().zip(weights.row(o)) {
            *gi = *gi + w * g;
        }
    }

    // grad_weights[o, j] = g[o] * x[j]
    let mut grad_weights = vec![T::zero(); out_units * in_units];
    for o in 0..out_units {
        let g = grad_out.data()[o];
        let row = &mut grad_weights[o * in_units..(o + 1) * in_units];
        for (w, &x) in row.iter_mut().zip(input.data()) {
            *w = g * x;
        }
    }

    Ok(FcGrads {
        input: Tensor::from_parts(vec![in_units], grad_input),
        weights: Tensor::from_parts(vec![out_units, in_units], grad_weights),
        bias: grad_out.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{rand_tensor, rel_err};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_weights_pass_input_through() {
        let mut id = Tensor::<f64>::zeros(&[3, 3]).unwrap();
        for i in 0..3 {
            id.data_mut()[i * 3 + i] = 1.0;
        }
        let mut layer = FcLayer::new(id, Tensor::zeros(&[3]).unwrap()).unwrap();
        let x = Tensor::from_vec(&[3], vec![1.0, -2.0, 0.5]).unwrap();
        assert_eq!(layer.forward(&x).unwrap().data(), x.data());
    }

    #[test]
    fn zero_input_yields_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = rand_tensor(&[4, 3], &mut rng);
        let b = rand_tensor(&[4], &mut rng);
        let mut layer = FcLayer::new(w, b.clone()).unwrap();
        let x = Tensor::zeros(&[3]).unwrap();
        assert_eq!(layer.forward(&x).unwrap().data(), b.data());
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let w = Tensor::<f64>::zeros(&[2, 3]).unwrap();
        let mut layer = FcLayer::new(w, Tensor::zeros(&[2]).unwrap()).unwrap();
        let x = Tensor::zeros(&[4]).unwrap();
        assert_eq!(layer.forward(&x).unwrap_err().category(), "shape");
    }

    #[test]
    fn backward_needs_forward_first() {
        let w = Tensor::<f64>::zeros(&[2, 3]).unwrap();
        let layer = FcLayer::new(w, Tensor::zeros(&[2]).unwrap()).unwrap();
        let g = Tensor::zeros(&[2]).unwrap();
        assert_eq!(layer.backward(&g).unwrap_err().category(), "state");
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = rand_tensor(&[4, 6], &mut rng);
            let b = rand_tensor(&[4], &mut rng);
            let x = rand_tensor(&[6], &mut rng);
            let coef = rand_tensor(&[4], &mut rng);
            // Loss: coef . (w x + b)
            let loss = |w: &Tensor<f64>, b: &Tensor<f64>, x: &Tensor<f64>| -> f64 {
                fc(w, b, x)
                    .unwrap()
                    .data()
                    .iter()
                    .zip(coef.data())
                    .map(|(a, c)| a * c)
                    .sum()
            };
            let grads = fc_grads(&w, &x, &coef).unwrap();
            let eps = 1e-5;
            for i in 0..x.len() {
                let mut p = x.clone();
                p.data_mut()[i] += eps;
                let mut m = x.clone();
                m.data_mut()[i] -= eps;
                let fd = (loss(&w, &b, &p) - loss(&w, &b, &m)) / (2.0 * eps);
                assert!(rel_err(fd, grads.input.data()[i]) < 1e-4);
            }
            for i in 0..w.len() {
                let mut p = w.clone();
                p.data_mut()[i] += eps;
                let mut m = w.clone();
                m.data_mut()[i] -= eps;
                let fd = (loss(&p, &b, &x) - loss(&m, &b, &x)) / (2.0 * eps);
                assert!(rel_err(fd, grads.weights.data()[i]) < 1e-4);
            }
            for i in 0..b.len() {
                let mut p = b.clone();
                p.data_mut()[i] += eps;
                let mut m = b.clone();
                m.data_mut()[i] -= eps;
                let fd = (loss(&w, &p, &x) - loss(&w, &m, &x)) / (2.0 * eps);
                assert!(rel_err(fd, grads.bias.data()[i]) < 1e-4);
            }
        }
    }
}
