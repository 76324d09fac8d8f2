//! Accuracy, mean squared error and confusion counts.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fraction of exact matches.
pub fn accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    if predictions.is_empty() || predictions.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} predictions vs {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let hits = predictions
        .iter()
        .zip(labels)
        .filter(|(p, l)| p == l)
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

/// Mean of squared differences over all elements.
pub fn mse<T: Scalar>(predictions: &[T], targets: &[T]) -> Result<f64> {
    if predictions.is_empty() || predictions.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} predictions vs {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    let mut total = 0.0;
    for (&p, &t) in predictions.iter().zip(targets) {
        let d = p.as_f64() - t.as_f64();
        total += d * d;
    }
    Ok(total / predictions.len() as f64)
}

/// `counts[true][predicted]` over all samples.
pub fn confusion_matrix(
    predictions: &[usize],
    labels: &[usize],
    num_classes: usize,
) -> Result<Vec<Vec<usize>>> {
    if predictions.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} predictions vs {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut counts = vec![vec![0usize; num_classes]; num_classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        if p >= num_classes || l >= num_classes {
            return Err(Error::Index(format!(
                "class ({l} -> {p}) outside {num_classes} classes"
            )));
        }
        counts[l][p] += 1;
    }
    Ok(counts)
}

/// Per-class accuracy: diagonal over row sum; classes with no samples get NaN.
pub fn per_class_accuracy(confusion: &[Vec<usize>]) -> Vec<f64> {
    confusion
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let total: usize = row.iter().sum();
            if total == 0 {
                f64::NAN
            } else {
                row[i] as f64 / total as f64
            }
        })
        .collect()
}
