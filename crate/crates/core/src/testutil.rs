//! Shared helpers for unit tests. Oracles here stay deliberately naive and
//! independent of the optimized implementation paths they check.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::tensor::Tensor;

pub(crate) fn rand_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let len: usize = shape.iter().product();
    let data = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Tensor::from_vec(shape, data).unwrap()
}

pub(crate) fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
}

/// Plain triple-loop cross-correlation, the reference for the optimized path.
pub(crate) fn naive_conv1d(
    kernels: &Tensor<f64>,
    bias: &Tensor<f64>,
    input: &Tensor<f64>,
) -> Tensor<f64> {
    let (oc, ic, kw) = (
        kernels.shape()[0],
        kernels.shape()[1],
        kernels.shape()[2],
    );
    let t_in = input.shape()[1];
    let t_out = t_in - kw + 1;
    let mut out = vec![0.0; oc * t_out];
    for o in 0..oc {
        for t in 0..t_out {
            let mut acc = bias.data()[o];
            for c in 0..ic {
                for k in 0..kw {
                    acc += kernels.data()[(o * ic + c) * kw + k] * input.data()[c * t_in + t + k];
                }
            }
            out[o * t_out + t] = acc;
        }
    }
    Tensor::from_vec(&[oc, t_out], out).unwrap()
}
