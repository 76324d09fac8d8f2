//! Ordinary least squares and ridge regression via the normal equations.
//!
//! Features are centred so the intercept stays unpenalized; the resulting
//! symmetric positive-definite system is solved with a Cholesky
//! factorization. Fine for desk-scale feature counts (a few hundred).

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Linear predictor `y = w . x + b`, optionally ridge-regularized.
/// `ridge_lambda == 0` is plain least squares.
#[derive(Debug, Clone)]
pub struct LinearModel<T> {
    pub weights: Tensor<T>,
    pub bias: T,
    pub ridge_lambda: f64,
}

impl<T: Scalar> LinearModel<T> {
    pub fn predict(&self, features: &[T]) -> Result<T> {
        if features.len() != self.weights.len() {
            return Err(Error::Shape(format!(
                "{} features for a {}-feature model",
                features.len(),
                self.weights.len()
            )));
        }
        let mut acc = self.bias;
        for (&w, &x) in self.weights.data().iter().zip(features) {
            acc = acc + w * x;
        }
        Ok(acc)
    }
}

/// Minimizes `sum_i (w . x_i + b - y_i)^2 + lambda * ||w||^2` (bias
/// unpenalized). `features` is a `[n, t]` design matrix, one sample per row.
pub fn fit_ridge<T: Scalar>(
    features: &Tensor<T>,
    targets: &[T],
    lambda: f64,
) -> Result<LinearModel<T>> {
    if features.rank() != 2 {
        return Err(Error::Shape(format!(
            "design matrix must be rank 2, got {:?}",
            features.shape()
        )));
    }
    let (n, t) = (features.shape()[0], features.shape()[1]);
    if targets.len() != n || n == 0 {
        return Err(Error::Shape(format!(
            "{} targets for {} samples",
            targets.len(),
            n
        )));
    }
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::Config(format!("lambda must be >= 0, got {lambda}")));
    }

    // Column means and the target mean; everything below works on the
    // centred problem where the intercept drops out.
    let mut x_mean = vec![0.0f64; t];
    for r in 0..n {
        for (m, &v) in x_mean.iter_mut().zip(features.row(r)) {
            *m += v.as_f64();
        }
    }
    for m in x_mean.iter_mut() {
        *m /= n as f64;
    }
    let y_mean = targets.iter().map(|v| v.as_f64()).sum::<f64>() / n as f64;

    // Gram matrix of centred columns, plus lambda on the diagonal.
    let mut gram = vec![0.0f64; t * t];
    let mut rhs = vec![0.0f64; t];
    for r in 0..n {
        let row = features.row(r);
        let yc = targets[r].as_f64() - y_mean;
        for i in 0..t {
            let xi = row[i].as_f64() - x_mean[i];
            rhs[i] += xi * yc;
            for j in i..t {
                gram[i * t + j] += xi * (row[j].as_f64() - x_mean[j]);
            }
        }
    }
    for i in 0..t {
        for j in 0..i {
            gram[i * t + j] = gram[j * t + i];
        }
        gram[i * t + i] += lambda;
    }

    let w = cholesky_solve(&mut gram, &rhs, t).ok_or_else(|| {
        Error::Rank(
            "normal equations are singular; retry with lambda > 0".to_string(),
        )
    })?;

    let bias = y_mean - w.iter().zip(&x_mean).map(|(wi, mi)| wi * mi).sum::<f64>();
    Ok(LinearModel {
        weights: Tensor::from_parts(vec![t], w.iter().map(|&v| T::from_f64(v)).collect()),
        bias: T::from_f64(bias),
        ridge_lambda: lambda,
    })
}

/// In-place Cholesky factorization and solve for a symmetric
/// positive-definite system; `None` when a pivot collapses (the matrix is
/// singular to working precision).
fn cholesky_solve(a: &mut [f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let max_diag = (0..n).fold(0.0f64, |m, i| m.max(a[i * n + i].abs()));
    let pivot_floor = max_diag * 1e-12;
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            if i == j {
                if s <= pivot_floor || !s.is_finite() {
                    return None;
                }
                a[i * n + i] = s.sqrt();
            } else {
                a[i * n + j] = s / a[j * n + j];
            }
        }
    }
    // Forward then backward substitution on L L^T x = b.
    let mut x = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            x[i] -= a[i * n + k] * x[k];
        }
        x[i] /= a[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            x[i] -= a[k * n + i] * x[k];
        }
        x[i] /= a[i * n + i];
    }
    Some(x)
}
