//! 1D convolution layer (cross-correlation, valid padding, stride 1).

use crate::error::{Error, Result};
use crate::init;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

use rand_chacha::ChaCha8Rng;

/// Trainable 1D convolution.
///
/// `kernels` is `[out_channels, in_channels, kernel_width]`, `bias` is
/// `[out_channels]`. Input/output are `[channels, time]`. The forward pass
/// caches its input so the layer can later produce exact gradients; one layer
/// instance therefore belongs to one training thread at a time.
#[derive(Debug, Clone)]
pub struct Conv1d<T> {
    kernels: Tensor<T>,
    bias: Tensor<T>,
    cached_input: Option<Tensor<T>>,
}

impl<T: Scalar> Conv1d<T> {
    pub fn new(kernels: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        if kernels.rank() != 3 {
            return Err(Error::Shape(format!(
                "conv kernels must be [out, in, width], got {:?}",
                kernels.shape()
            )));
        }
        if bias.rank() != 1 || bias.len() != kernels.shape()[0] {
            return Err(Error::Shape(format!(
                "conv bias {:?} does not match {} output channels",
                bias.shape(),
                kernels.shape()[0]
            )));
        }
        Ok(Conv1d {
            kernels,
            bias,
            cached_input: None,
        })
    }

    /// Kernel weights drawn from a zero-mean normal with std `sqrt(2 / fan_in)`,
    /// biases zero.
    pub fn he_init(
        out_channels: usize,
        in_channels: usize,
        kernel_width: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let fan_in = in_channels * kernel_width;
        let kernels = init::he_normal(&[out_channels, in_channels, kernel_width], fan_in, rng);
        let bias = Tensor::from_parts(vec![out_channels], vec![T::zero(); out_channels]);
        Conv1d {
            kernels,
            bias,
            cached_input: None,
        }
    }

    pub fn out_channels(&self) -> usize {
        self.kernels.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.kernels.shape()[1]
    }

    pub fn kernel_width(&self) -> usize {
        self.kernels.shape()[2]
    }

    pub fn kernels(&self) -> &Tensor<T> {
        &self.kernels
    }

    pub fn bias(&self) -> &Tensor<T> {
        &self.bias
    }

    pub fn params_mut(&mut self) -> (&mut Tensor<T>, &mut Tensor<T>) {
        (&mut self.kernels, &mut self.bias)
    }

    /// Runs the convolution and caches the input for `backward`.
    pub fn forward(&mut self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let out = conv1d(&self.kernels, &self.bias, input)?;
        self.cached_input = Some(input.clone());
        Ok(out)
    }

    /// Gradients of the forward map with respect to input, kernels and bias.
    pub fn backward(&self, grad_out: &Tensor<T>) -> Result<ConvGrads<T>> {
        let input = self.cached_input.as_ref().ok_or_else(|| {
            Error::State("conv backward called before forward".to_string())
        })?;
        conv1d_grads(&self.kernels, input, grad_out)
    }
}

/// Gradients returned by [`Conv1d::backward`].
#[derive(Debug)]
pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub kernels: Tensor<T>,
    pub bias: Tensor<T>,
}

pub fn conv_output_len(input_len: usize, kernel_width: usize) -> Result<usize> {
    if input_len < kernel_width {
        return Err(Error::Shape(format!(
            "input length {} shorter than kernel width {}",
            input_len, kernel_width
        )));
    }
    Ok(input_len - kernel_width + 1)
}

/// Cross-correlation with valid padding and stride 1:
/// `out[o, t] = bias[o] + sum_c sum_k kernels[o, c, k] * input[c, t + k]`.
///
/// Accumulation runs in ascending `(c, k)` order per output element, so the
/// result is bit-identical to the plain triple loop. The inner loop is
/// blocked over time to keep the accumulators in registers.
pub fn conv1d<T: Scalar>(
    kernels: &Tensor<T>,
    bias: &Tensor<T>,
    input: &Tensor<T>,
) -> Result<Tensor<T>> {
    let (out_ch, in_ch, width) = kernel_dims(kernels)?;
    let t_in = check_input(input, in_ch)?;
    let t_out = conv_output_len(t_in, width)?;

    // Fixed-width blocks keep the accumulators in registers; the remainder
    // runs through a plain scalar loop. Both paths accumulate in ascending
    // (c, k) order.
    const BLOCK: usize = 32;
    let mut out = vec![T::zero(); out_ch * t_out];
    let kdata = kernels.data();
    let xdata = input.data();
    for o in 0..out_ch {
        let b = bias.data()[o];
        let orow = &mut out[o * t_out..(o + 1) * t_out];
        let krow = &kdata[o * in_ch * width..(o + 1) * in_ch * width];
        let mut t0 = 0;
        while t0 + BLOCK <= t_out {
            let mut acc = [b; BLOCK];
            for c in 0..in_ch {
                let xrow = &xdata[c * t_in..(c + 1) * t_in];
                for (k, &w) in krow[c * width..(c + 1) * width].iter().enumerate() {
                    let xs: &[T; BLOCK] = xrow[t0 + k..t0 + k + BLOCK].try_into().unwrap();
                    for (a, &x) in acc.iter_mut().zip(xs) {
                        *a = *a + w * x;
                    }
                }
            }
            orow[t0..t0 + BLOCK].copy_from_slice(&acc);
            t0 += BLOCK;
        }
        for (t, slot) in orow.iter_mut().enumerate().skip(t0) {
            let mut a = b;
            for c in 0..in_ch {
                let xrow = &xdata[c * t_in + t..c * t_in + t + width];
                for (&w, &x) in krow[c * width..(c + 1) * width].iter().zip(xrow) {
                    a = a + w * x;
                }
            }
            *slot = a;
        }
    }
    Ok(Tensor::from_parts(vec![out_ch, t_out], out))
}

/// Exact analytic gradients of [`conv1d`]:
/// input gradient, kernel gradient and bias gradient given the upstream
/// gradient `grad_out` of shape `[out_channels, t_out]`.
pub fn conv1d_grads<T: Scalar>(
    kernels: &Tensor<T>,
    input: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<ConvGrads<T>> {
    let (out_ch, in_ch, width) = kernel_dims(kernels)?;
    let t_in = check_input(input, in_ch)?;
    let t_out = conv_output_len(t_in, width)?;
    if grad_out.shape() != [out_ch, t_out] {
        return Err(Error::Shape(format!(
            "grad_out shape {:?}, expected [{}, {}]",
            grad_out.shape(),
            out_ch,
            t_out
        )));
    }

    // Lowered input matrix: rows indexed by (channel, tap), columns by time.
    let span = in_ch * width;
    let mut lowered = vec![T::zero(); span * t_out];
    for c in 0..in_ch {
        let xrow = input.row(c);
        for k in 0..width {
            lowered[(c * width + k) * t_out..(c * width + k + 1) * t_out]
                .copy_from_slice(&xrow[k..k + t_out]);
        }
    }

    let g = grad_out.data();

    let mut grad_bias = vec![T::zero(); out_ch];
    for (o, gb) in grad_bias.iter_mut().enumerate() {
        let mut acc = T::zero();
        for &v in &g[o * t_out..(o + 1) * t_out] {
            acc += v;
        }
        *gb = acc;
    }

    // grad_kernels[o, (c,k)] = sum_t g[o, t] * lowered[(c,k), t]
    let mut grad_kernels = vec![T::zero(); out_ch * span];
    unsafe {
        T::gemm(
            out_ch,
            t_out,
            span,
            T::one(),
            g.as_ptr(),
            t_out as isize,
            1,
            lowered.as_ptr(),
            1,
            t_out as isize,
            T::zero(),
            grad_kernels.as_mut_ptr(),
            span as isize,
            1,
        );
    }

    // grad_lowered[(c,k), t] = sum_o kernels[o, (c,k)] * g[o, t],
    // then scatter-add taps back onto the input axis.
    let mut grad_lowered = vec![T::zero(); span * t_out];
    unsafe {
        T::gemm(
            span,
            out_ch,
            t_out,
            T::one(),
            kernels.data().as_ptr(),
            1,
            span as isize,
            g.as_ptr(),
            t_out as isize,
            1,
            T::zero(),
            grad_lowered.as_mut_ptr(),
            t_out as isize,
            1,
        );
    }
    let mut grad_input = vec![T::zero(); in_ch * t_in];
    for c in 0..in_ch {
        let dst = &mut grad_input[c * t_in..(c + 1) * t_in];
        for k in 0..width {
            let src = &grad_lowered[(c * width + k) * t_out..(c * width + k + 1) * t_out];
            for (d, &s) in dst[k..k + t_out].iter_mut().zip(src) {
                *d = *d + s;
            }
        }
    }

    Ok(ConvGrads {
        input: Tensor::from_parts(vec![in_ch, t_in], grad_input),
        kernels: Tensor::from_parts(vec![out_ch, in_ch, width], grad_kernels),
        bias: Tensor::from_parts(vec![out_ch], grad_bias),
    })
}

fn kernel_dims<T: Scalar>(kernels: &Tensor<T>) -> Result<(usize, usize, usize)> {
    if kernels.rank() != 3 {
        return Err(Error::Shape(format!(
            "conv kernels must be rank 3, got {:?}",
            kernels.shape()
        )));
    }
    Ok((kernels.shape()[0], kernels.shape()[1], kernels.shape()[2]))
}

fn check_input<T: Scalar>(input: &Tensor<T>, in_ch: usize) -> Result<usize> {
    if input.rank() != 2 || input.shape()[0] != in_ch {
        return Err(Error::Shape(format!(
            "conv input {:?} does not match {} input channels",
            input.shape(),
            in_ch
        )));
    }
    Ok(input.shape()[1])
}
