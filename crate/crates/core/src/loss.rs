//! Training losses: categorical cross entropy for the classification head,
//! mean absolute error for the regression head, and their weighted sum.

use crate::error::{Error, Result};
use crate::layers::softmax;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Probabilities are clamped to at least this value inside the logarithm;
/// the loss stays finite for degenerate predictions without disturbing
/// well-conditioned ones.
pub const LOG_CLAMP: f64 = 1e-12;

/// Relative weights of the classification and regression terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl LossWeights {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if alpha < 0.0 || beta < 0.0 || alpha + beta <= 0.0 {
            return Err(Error::Config(format!(
                "loss weights must be nonnegative with a positive sum, got alpha={alpha}, beta={beta}"
            )));
        }
        Ok(LossWeights { alpha, beta })
    }
}

impl Default for LossWeights {
    /// Both tasks weighted equally.
    fn default() -> Self {
        LossWeights {
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

/// Indicator vector with 1 at `class_index`.
pub fn one_hot<T: Scalar>(class_index: usize, num_classes: usize) -> Result<Tensor<T>> {
    if class_index >= num_classes {
        return Err(Error::Index(format!(
            "class index {} out of range for {} classes",
            class_index, num_classes
        )));
    }
    let mut v = Tensor::zeros(&[num_classes])?;
    v.data_mut()[class_index] = T::one();
    Ok(v)
}

/// Mean over samples of `-sum_c y_c * ln(p_c)` with the clamp above.
pub fn cross_entropy<T: Scalar>(predictions: &[Tensor<T>], labels: &[Tensor<T>]) -> Result<T> {
    if predictions.is_empty() || predictions.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} predictions vs {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let clamp = T::from_f64(LOG_CLAMP);
    let mut total = T::zero();
    for (p, y) in predictions.iter().zip(labels) {
        if p.shape() != y.shape() {
            return Err(Error::Shape(format!(
                "prediction {:?} vs label {:?}",
                p.shape(),
                y.shape()
            )));
        }
        for (&pc, &yc) in p.data().iter().zip(y.data()) {
            if yc != T::zero() {
                total = total - yc * pc.max(clamp).ln();
            }
        }
    }
    Ok(total / T::from_usize(predictions.len()))
}

/// Gradient of cross entropy composed with softmax, taken with respect to
/// the logits: `softmax(logits) - y` for one sample. Callers average over
/// the batch.
pub fn cross_entropy_softmax_grad<T: Scalar>(
    logits: &Tensor<T>,
    label: &Tensor<T>,
) -> Result<Tensor<T>> {
    if logits.shape() != label.shape() {
        return Err(Error::Shape(format!(
            "logits {:?} vs label {:?}",
            logits.shape(),
            label.shape()
        )));
    }
    softmax(logits)?.sub(label)
}

/// Mean absolute error over all elements.
pub fn mae<T: Scalar>(predictions: &Tensor<T>, targets: &Tensor<T>) -> Result<T> {
    if predictions.shape() != targets.shape() {
        return Err(Error::Shape(format!(
            "predictions {:?} vs targets {:?}",
            predictions.shape(),
            targets.shape()
        )));
    }
    let mut total = T::zero();
    for (&p, &t) in predictions.data().iter().zip(targets.data()) {
        total = total + (p - t).abs();
    }
    Ok(total / T::from_usize(predictions.len()))
}

/// Per-element subgradient `sign(prediction - target) / n`, with the
/// zero-residual case mapped to 0.
pub fn mae_grad<T: Scalar>(predictions: &Tensor<T>, targets: &Tensor<T>) -> Result<Tensor<T>> {
    if predictions.shape() != targets.shape() {
        return Err(Error::Shape(format!(
            "predictions {:?} vs targets {:?}",
            predictions.shape(),
            targets.shape()
        )));
    }
    let inv_n = T::one() / T::from_usize(predictions.len());
    let data = predictions
        .data()
        .iter()
        .zip(targets.data())
        .map(|(&p, &t)| {
            let r = p - t;
            if r > T::zero() {
                inv_n
            } else if r < T::zero() {
                -inv_n
            } else {
                T::zero()
            }
        })
        .collect();
    Ok(Tensor::from_parts(predictions.shape().to_vec(), data))
}

/// `alpha * ce + beta * mae`.
pub fn combined_loss<T: Scalar>(ce: T, mae: T, w: &LossWeights) -> T {
    T::from_f64(w.alpha) * ce + T::from_f64(w.beta) * mae
}
