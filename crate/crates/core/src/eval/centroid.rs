//! Nearest-centroid classifier, a sanity baseline on raw signals.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Stores one mean signal per class; classification returns the class whose
/// centroid is nearest in Euclidean distance, lowest index on ties.
#[derive(Debug, Clone)]
pub struct NearestCentroid {
    centroids: Vec<Vec<f64>>,
}

impl NearestCentroid {
    pub fn fit<T: Scalar>(signals: &[&[T]], labels: &[usize], num_classes: usize) -> Result<Self> {
        if signals.len() != labels.len() || signals.is_empty() {
            return Err(Error::Shape(format!(
                "{} signals vs {} labels",
                signals.len(),
                labels.len()
            )));
        }
        let dim = signals[0].len();
        let mut sums = vec![vec![0.0f64; dim]; num_classes];
        let mut counts = vec![0usize; num_classes];
        for (sig, &label) in signals.iter().zip(labels) {
            if label >= num_classes {
                return Err(Error::Index(format!(
                    "label {label} outside {num_classes} classes"
                )));
            }
            if sig.len() != dim {
                return Err(Error::Shape("signals differ in length".to_string()));
            }
            counts[label] += 1;
            for (s, &v) in sums[label].iter_mut().zip(sig.iter()) {
                *s += v.as_f64();
            }
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Data(format!(
                "class {empty} has no training samples"
            )));
        }
        for (sum, &count) in sums.iter_mut().zip(&counts) {
            for s in sum.iter_mut() {
                *s /= count as f64;
            }
        }
        Ok(NearestCentroid { centroids: sums })
    }

    pub fn classify<T: Scalar>(&self, signal: &[T]) -> Result<usize> {
        if signal.len() != self.centroids[0].len() {
            return Err(Error::Shape(format!(
                "signal of length {} against centroids of length {}",
                signal.len(),
                self.centroids[0].len()
            )));
        }
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (class, centroid) in self.centroids.iter().enumerate() {
            let d: f64 = centroid
                .iter()
                .zip(signal)
                .map(|(c, &v)| (c - v.as_f64()).powi(2))
                .sum();
            if d < best_d {
                best_d = d;
                best = class;
            }
        }
        Ok(best)
    }
}
