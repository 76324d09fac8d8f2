//! Max pooling and global average pooling over the time axis.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Non-overlapping pooling windows: stride equals the window size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolSpec {
    pool_size: usize,
}

impl PoolSpec {
    pub fn new(pool_size: usize) -> Result<Self> {
        if pool_size == 0 {
            return Err(Error::Config("pool size must be >= 1".to_string()));
        }
        Ok(PoolSpec { pool_size })
    }

    pub fn pool_size(&self) -> usize {
        self.pool_size
    }

    pub fn stride(&self) -> usize {
        self.pool_size
    }

    pub fn output_len(&self, input_len: usize) -> Result<usize> {
        if input_len < self.pool_size {
            return Err(Error::Shape(format!(
                "input length {} shorter than pool size {}",
                input_len, self.pool_size
            )));
        }
        Ok(input_len / self.pool_size)
    }
}

/// Max pooling over `[channels, time]`. Each window keeps its maximum; on
/// ties the lowest time index wins; the trailing `T mod pool_size` samples
/// are dropped. Returns the pooled tensor and the flat input index of every
/// winner (needed to route gradients back).
pub fn maxpool<T: Scalar>(spec: PoolSpec, input: &Tensor<T>) -> Result<(Tensor<T>, Vec<usize>)> {
    if input.rank() != 2 {
        return Err(Error::Shape(format!(
            "maxpool expects [channels, time], got {:?}",
            input.shape()
        )));
    }
    let (channels, t_in) = (input.shape()[0], input.shape()[1]);
    let t_out = spec.output_len(t_in)?;
    let p = spec.pool_size;

    let mut out = Vec::with_capacity(channels * t_out);
    let mut argmax = Vec::with_capacity(channels * t_out);
    for c in 0..channels {
        let row = input.row(c);
        for w in 0..t_out {
            let start = w * p;
            let mut best = row[start];
            let mut best_t = start;
            for (dt, &v) in row[start + 1..start + p].iter().enumerate() {
                if v > best {
                    best = v;
                    best_t = start + 1 + dt;
                }
            }
            out.push(best);
            argmax.push(c * t_in + best_t);
        }
    }
    Ok((Tensor::from_parts(vec![channels, t_out], out), argmax))
}

/// Routes each upstream gradient element to the position that won its window.
pub fn maxpool_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    argmax: &[usize],
    input_shape: &[usize],
) -> Result<Tensor<T>> {
    if grad_out.len() != argmax.len() {
        return Err(Error::State(format!(
            "gradient has {} elements but argmax cache has {}; \
             indices are stale for this forward pass",
            grad_out.len(),
            argmax.len()
        )));
    }
    let mut grad_input = Tensor::zeros(input_shape)?;
    let n = grad_input.len();
    if let Some(&bad) = argmax.iter().find(|&&i| i >= n) {
        return Err(Error::State(format!(
            "argmax index {} outside input of {} elements; indices are stale",
            bad, n
        )));
    }
    for (&idx, &g) in argmax.iter().zip(grad_out.data()) {
        grad_input.data_mut()[idx] = grad_input.data_mut()[idx] + g;
    }
    Ok(grad_input)
}

/// Global average pooling: each channel collapses to its mean over time.
pub fn gap<T: Scalar>(input: &Tensor<T>) -> Result<Tensor<T>> {
    if input.rank() != 2 {
        return Err(Error::Shape(format!(
            "gap expects [channels, time], got {:?}",
            input.shape()
        )));
    }
    let (channels, t) = (input.shape()[0], input.shape()[1]);
    let inv = T::one() / T::from_usize(t);
    let mut out = Vec::with_capacity(channels);
    for c in 0..channels {
        let mut acc = T::zero();
        for &v in input.row(c) {
            acc += v;
        }
        out.push(acc * inv);
    }
    Ok(Tensor::from_parts(vec![channels], out))
}

/// Spreads each channel's gradient uniformly over the pooled time steps.
pub fn gap_backward<T: Scalar>(grad_out: &Tensor<T>, t: usize) -> Result<Tensor<T>> {
    if grad_out.rank() != 1 {
        return Err(Error::Shape(format!(
            "gap gradient must be rank 1, got {:?}",
            grad_out.shape()
        )));
    }
    if t == 0 {
        return Err(Error::Shape("gap over zero time steps".to_string()));
    }
    let channels = grad_out.len();
    let inv = T::one() / T::from_usize(t);
    let mut data = Vec::with_capacity(channels * t);
    for &g in grad_out.data() {
        let per_step = g * inv;
        data.extend(std::iter::repeat(per_step).take(t));
    }
    Ok(Tensor::from_parts(vec![channels, t], data))
}
