//! Dense rank-1..3 tensor over a flat row-major buffer.
//!
//! This is the carrier for signals, activations, parameters and gradients.
//! Tensors are plain values: every public operation returns a new tensor and
//! leaves its inputs untouched, so shared references are safe to read from
//! any thread.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAX_RANK: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    /// Tensor of the given shape with every element set to `fill`.
    pub fn new(shape: &[usize], fill: T) -> Result<Self> {
        validate_shape(shape)?;
        let len = shape.iter().product();
        Ok(Tensor {
            shape: shape.to_vec(),
            data: vec![fill; len],
        })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Self::new(shape, T::zero())
    }

    /// Wraps an existing row-major buffer.
    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self> {
        validate_shape(shape)?;
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "shape {:?} needs {} elements, got {}",
                shape,
                expected,
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Internal constructor for shapes already known to be valid.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<T>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Tensor { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Contiguous slice of row `r` for a rank-2 tensor (e.g. one channel of
    /// a `[channels, time]` signal).
    pub fn row(&self, r: usize) -> &[T] {
        debug_assert_eq!(self.rank(), 2);
        let cols = self.shape[1];
        &self.data[r * cols..(r + 1) * cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        debug_assert_eq!(self.rank(), 2);
        let cols = self.shape[1];
        &mut self.data[r * cols..(r + 1) * cols]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Tensor<T> {
        Tensor::from_parts(self.shape.clone(), self.data.iter().map(|&x| f(x)).collect())
    }

    fn zip_map(&self, other: &Tensor<T>, f: impl Fn(T, T) -> T) -> Result<Tensor<T>> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "elementwise op on shapes {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Tensor::from_parts(self.shape.clone(), data))
    }

    pub fn add(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, k: T) -> Tensor<T> {
        self.map(|x| x * k)
    }

    pub fn sum(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &x| acc + x)
    }

    /// Matrix-vector product of a rank-2 tensor with a rank-1 tensor.
    pub fn matvec(&self, v: &Tensor<T>) -> Result<Tensor<T>> {
        if self.rank() != 2 || v.rank() != 1 {
            return Err(Error::Shape(format!(
                "matvec needs rank-2 by rank-1, got {:?} and {:?}",
                self.shape, v.shape
            )));
        }
        let (rows, cols) = (self.shape[0], self.shape[1]);
        if cols != v.len() {
            return Err(Error::Shape(format!(
                "matvec inner dimensions: matrix {:?} vs vector [{}]",
                self.shape,
                v.len()
            )));
        }
        let mut out = vec![T::zero(); rows];
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = T::zero();
            for (m, x) in self.row(r).iter().zip(v.data.iter()) {
                acc = acc + *m * *x;
            }
            *o = acc;
        }
        Ok(Tensor::from_parts(vec![rows], out))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

fn validate_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() || shape.len() > MAX_RANK {
        return Err(Error::Shape(format!(
            "rank must be 1..={}, got shape {:?}",
            MAX_RANK, shape
        )));
    }
    if shape.iter().any(|&d| d == 0) {
        return Err(Error::Shape(format!("zero-sized dimension in {:?}", shape)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor<f64> {
        Tensor::from_vec(shape, data.to_vec()).unwrap()
    }

    #[test]
    fn new_fills_every_element() {
        let z = Tensor::<f64>::new(&[2, 3], 0.0).unwrap();
        assert_eq!(z.shape(), &[2, 3]);
        assert_eq!(z.data(), &[0.0; 6]);

        let s = Tensor::<f64>::new(&[1], 7.5).unwrap();
        assert_eq!(s.data(), &[7.5]);
    }

    #[test]
    fn degenerate_dimension_is_rejected() {
        let err = Tensor::<f64>::new(&[2, 0], 1.0).unwrap_err();
        assert_eq!(err.category(), "shape");
        assert!(Tensor::<f64>::new(&[], 1.0).is_err());
        assert!(Tensor::<f64>::new(&[1, 1, 1, 1], 1.0).is_err());
    }

    #[test]
    fn elementwise_ops() {
        let a = t(&[2], &[1.0, 2.0]);
        let b = t(&[2], &[3.0, 4.0]);
        assert_eq!(a.add(&b).unwrap().data(), &[4.0, 6.0]);

        let zeroes = t(&[2], &[0.0, 0.0]);
        assert_eq!(a.mul(&zeroes).unwrap().data(), &[0.0, 0.0]);

        let c = t(&[1], &[1.0]);
        assert_eq!(c.add(&a).unwrap_err().category(), "shape");
    }

    #[test]
    fn matvec_examples() {
        let id = t(&[2, 2], &[1.0, 0.0, 0.0, 1.0]);
        let v = t(&[2], &[3.0, 4.0]);
        assert_eq!(id.matvec(&v).unwrap().data(), &[3.0, 4.0]);

        let m = t(&[2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let ones = t(&[2], &[1.0, 1.0]);
        assert_eq!(m.matvec(&ones).unwrap().data(), &[3.0, 7.0]);

        let bad = t(&[1, 2], &[1.0, 2.0]);
        let v3 = t(&[3], &[1.0, 2.0, 3.0]);
        assert_eq!(bad.matvec(&v3).unwrap_err().category(), "shape");
    }

    #[test]
    fn ops_do_not_mutate_inputs() {
        let a = t(&[3], &[1.0, -2.0, 3.0]);
        let b = t(&[3], &[0.5, 0.5, 0.5]);
        let _ = a.add(&b).unwrap();
        let _ = a.mul(&b).unwrap();
        let _ = a.map(|x| x * 10.0);
        assert_eq!(a.data(), &[1.0, -2.0, 3.0]);
        assert_eq!(b.data(), &[0.5, 0.5, 0.5]);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn vals() -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(-1e3..1e3f64, 1..32)
        }

        proptest! {
            #[test]
            fn add_commutes(v in vals()) {
                let n = v.len();
                let a = t(&[n], &v);
                let rev: Vec<f64> = v.iter().rev().copied().collect();
                let b = t(&[n], &rev);
                let ab = a.add(&b).unwrap();
                let ba = b.add(&a).unwrap();
                prop_assert_eq!(ab.data(), ba.data());
            }

            #[test]
            fn add_associates_within_tolerance(v in vals()) {
                let n = v.len();
                let a = t(&[n], &v);
                let b = a.map(|x| x * 0.5 + 1.0);
                let c = a.map(|x| -x * 0.25);
                let left = a.add(&b).unwrap().add(&c).unwrap();
                let right = a.add(&b.add(&c).unwrap()).unwrap();
                for (l, r) in left.data().iter().zip(right.data()) {
                    prop_assert!((l - r).abs() <= 1e-12);
                }
            }

            #[test]
            fn identity_matvec_is_exact(v in vals()) {
                let n = v.len();
                let mut id = Tensor::<f64>::zeros(&[n, n]).unwrap();
                for i in 0..n {
                    id.data_mut()[i * n + i] = 1.0;
                }
                let x = t(&[n], &v);
                let y = id.matvec(&x).unwrap();
                prop_assert_eq!(y.data(), x.data());
            }

            #[test]
            fn finite_inputs_stay_finite(v in vals()) {
                let n = v.len();
                let a = t(&[n], &v);
                let b = a.map(|x| x + 0.125);
                prop_assert!(a.add(&b).unwrap().all_finite());
                prop_assert!(a.sub(&b).unwrap().all_finite());
                prop_assert!(a.mul(&b).unwrap().all_finite());
            }
        }
    }
}
