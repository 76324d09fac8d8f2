//! ReLU and softmax.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub fn relu<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|x| if x > T::zero() { x } else { T::zero() })
}

/// Passes the gradient through where the forward input was strictly positive.
/// The subgradient at exactly zero is taken as zero.
pub fn relu_backward<T: Scalar>(grad_out: &Tensor<T>, input: &Tensor<T>) -> Result<Tensor<T>> {
    if grad_out.shape() != input.shape() {
        return Err(Error::Shape(format!(
            "relu gradient {:?} vs cached input {:?}",
            grad_out.shape(),
            input.shape()
        )));
    }
    let data = grad_out
        .data()
        .iter()
        .zip(input.data())
        .map(|(&g, &x)| if x > T::zero() { g } else { T::zero() })
        .collect();
    Ok(Tensor::from_parts(input.shape().to_vec(), data))
}

/// Numerically stable softmax over a rank-1 tensor: the maximum is subtracted
/// before exponentiation, so arbitrarily large finite logits do not overflow.
pub fn softmax<T: Scalar>(input: &Tensor<T>) -> Result<Tensor<T>> {
    if input.rank() != 1 {
        return Err(Error::Shape(format!(
            "softmax expects rank 1, got {:?}",
            input.shape()
        )));
    }
    let max = input
        .data()
        .iter()
        .fold(T::neg_infinity(), |m, &x| if x > m { x } else { m });
    let mut exps: Vec<T> = input.data().iter().map(|&x| (x - max).exp()).collect();
    let total = exps.iter().fold(T::zero(), |acc, &e| acc + e);
    for e in exps.iter_mut() {
        *e = *e / total;
    }
    Ok(Tensor::from_parts(vec![input.len()], exps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{rand_tensor, rel_err};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t1(data: &[f64]) -> Tensor<f64> {
        Tensor::from_vec(&[data.len()], data.to_vec()).unwrap()
    }

    #[test]
    fn relu_clamps_negatives() {
        assert_eq!(relu(&t1(&[-1.0, 0.0, 2.0])).data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn relu_backward_gates_on_strictly_positive_input() {
        let g = t1(&[5.0, 5.0, 5.0]);
        let x = t1(&[-1.0, 0.0, 2.0]);
        assert_eq!(relu_backward(&g, &x).unwrap().data(), &[0.0, 0.0, 5.0]);
    }

    #[test]
    fn relu_gradient_matches_finite_differences_away_from_zero() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut x = rand_tensor(&[8], &mut rng);
            // Keep every coordinate away from the kink.
            for v in x.data_mut() {
                if v.abs() < 1e-3 {
                    *v += 0.1;
                }
            }
            let w = rand_tensor(&[8], &mut rng);
            let loss = |x: &Tensor<f64>| -> f64 {
                relu(x).data().iter().zip(w.data()).map(|(a, b)| a * b).sum()
            };
            let g = relu_backward(&w, &x).unwrap();
            let eps = 1e-5;
            for i in 0..x.len() {
                let mut plus = x.clone();
                plus.data_mut()[i] += eps;
                let mut minus = x.clone();
                minus.data_mut()[i] -= eps;
                let fd = (loss(&plus) - loss(&minus)) / (2.0 * eps);
                if fd == 0.0 {
                    assert_eq!(g.data()[i], 0.0);
                } else {
                    assert!(rel_err(fd, g.data()[i]) < 1e-4);
                }
            }
        }
    }

    #[test]
    fn softmax_symmetry_and_stability() {
        let p = softmax(&t1(&[0.0, 0.0])).unwrap();
        assert_eq!(p.data(), &[0.5, 0.5]);

        let p = softmax(&t1(&[1000.0, 0.0])).unwrap();
        assert!(p.all_finite());
        assert!(p.data()[0] > 1.0 - 1e-12);
        assert!(p.data()[1] < 1e-12);
    }

    #[test]
    fn softmax_is_shift_invariant() {
        let x = t1(&[0.3, -1.2, 2.5, 0.0]);
        let shifted = x.map(|v| v + 11.25);
        let a = softmax(&x).unwrap();
        let b = softmax(&shifted).unwrap();
        for (p, q) in a.data().iter().zip(b.data()) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_is_a_probability_vector() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = rand_tensor(&[7], &mut rng).scale(10.0);
            let p = softmax(&x).unwrap();
            assert!(p.data().iter().all(|&v| v >= 0.0));
            assert!((p.sum() - 1.0).abs() < 1e-12);
        }
    }
}
