//! Training loop: shuffled mini-batches, mean-reduced gradients, Adam
//! updates, and a per-epoch metrics history.

use std::fmt::Write as _;

use rand::seq::SliceRandom;

use super::Model;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::init::stream_rng;
use crate::loss::{mae_grad, one_hot, LossWeights, LOG_CLAMP};
use crate::optim::{Adam, AdamConfig};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

const SHUFFLE_STREAM: u64 = 300;

/// Training hyperparameters. Defaults: 500 epochs, batch 32, both loss
/// weights 1, Adam at 0.001/0.9/0.999/1e-8, per-epoch shuffling, metrics
/// evaluated every epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub loss_weights: LossWeights,
    pub adam: AdamConfig,
    pub rng_seed: u64,
    pub shuffle: bool,
    /// Evaluate train/test metrics every this many epochs; the final epoch
    /// is always evaluated. Raising this cheapens long runs.
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 500,
            batch_size: 32,
            loss_weights: LossWeights::default(),
            adam: AdamConfig::default(),
            rng_seed: 0,
            shuffle: true,
            eval_every: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be >= 1".to_string()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch size must be >= 1".to_string()));
        }
        if self.eval_every < 1 {
            return Err(Error::Config("eval_every must be >= 1".to_string()));
        }
        LossWeights::new(self.loss_weights.alpha, self.loss_weights.beta)?;
        self.adam.validate()
    }
}

/// One history row. Loss is the average of batch losses seen during the
/// epoch; the remaining metrics come from a frozen-parameter pass after the
/// epoch and are `None` on epochs that were not evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: Option<f64>,
    pub test_acc: Option<f64>,
    pub train_mse: Option<f64>,
    pub test_mse: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochStats>,
}

impl TrainingHistory {
    pub fn final_row(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }

    /// CSV rendering: header plus one row per epoch; absent metrics are
    /// empty fields.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("epoch,train_loss,train_acc,test_acc,train_mse,test_mse\n");
        let fmt = |v: &Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        for row in &self.epochs {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                row.epoch,
                row.train_loss,
                fmt(&row.train_acc),
                fmt(&row.test_acc),
                fmt(&row.train_mse),
                fmt(&row.test_mse),
            );
        }
        out
    }
}

fn check_labels<T: Scalar>(model: &Model<T>, ds: &Dataset<T>, role: &str) -> Result<()> {
    if ds.signal_len() != model.config().signal_length {
        return Err(Error::Shape(format!(
            "{role} signals have length {}, model expects {}",
            ds.signal_len(),
            model.config().signal_length
        )));
    }
    if model.config().classes > 0 {
        if ds.signals().iter().any(|s| s.class_label.is_none()) {
            return Err(Error::Data(format!(
                "{role} set: class labels required for the classification head"
            )));
        }
        if ds
            .signals()
            .iter()
            .any(|s| s.class_label.unwrap() >= model.config().classes)
        {
            return Err(Error::Data(format!(
                "{role} set: class label outside {} classes",
                model.config().classes
            )));
        }
    }
    if model.config().regression_outputs > 0 {
        let wanted = model.config().regression_outputs;
        if ds
            .signals()
            .iter()
            .any(|s| s.depth_labels.as_ref().map(|d| d.len()) != Some(wanted))
        {
            return Err(Error::Data(format!(
                "{role} set: regression labels of length {wanted} required"
            )));
        }
    }
    Ok(())
}

/// Runs `epochs x batches` of forward/backward/Adam over the weighted joint
/// loss, updating the model in place, and returns the metrics history.
pub fn train<T: Scalar>(
    model: &mut Model<T>,
    train_ds: &Dataset<T>,
    test_ds: Option<&Dataset<T>>,
    cfg: &TrainConfig,
) -> Result<TrainingHistory> {
    cfg.validate()?;
    check_labels(model, train_ds, "train")?;

    let alpha = cfg.loss_weights.alpha;
    let beta = cfg.loss_weights.beta;
    let mut adam: Adam<T> = Adam::new(cfg.adam)?;
    let mut rng = stream_rng(cfg.rng_seed, SHUFFLE_STREAM);
    let n = train_ds.len();
    let mut indices: Vec<usize> = (0..n).collect();
    let mut history = TrainingHistory::default();

    for epoch in 1..=cfg.epochs {
        if cfg.shuffle {
            indices.shuffle(&mut rng);
        }
        let mut loss_sum = 0.0;
        for chunk in indices.chunks(cfg.batch_size) {
            let b = chunk.len();
            let mut accum: Vec<Tensor<T>> = Vec::new();
            let mut ce_sum = 0.0;
            let mut l1_sum = 0.0;
            let mut reg_arity = 1usize;
            for &i in chunk {
                let sample = &train_ds.signals()[i];
                let out = model.forward_train(&sample.values)?;

                let grad_logits = match &out.class_probabilities {
                    Some(probs) => {
                        let label = sample.class_label.expect("validated above");
                        ce_sum -= probs.data()[label].as_f64().max(LOG_CLAMP).ln();
                        let y = one_hot::<T>(label, model.config().classes)?;
                        Some(probs.sub(&y)?.scale(T::from_f64(alpha / b as f64)))
                    }
                    None => None,
                };
                let grad_reg = match &out.depth_estimates {
                    Some(est) => {
                        let target = sample.depth_labels.as_ref().expect("validated above");
                        reg_arity = est.len();
                        for (&e, &t) in est.data().iter().zip(target.data()) {
                            l1_sum += (e.as_f64() - t.as_f64()).abs();
                        }
                        // mae_grad already divides by the per-sample arity.
                        Some(mae_grad(est, target)?.scale(T::from_f64(beta / b as f64)))
                    }
                    None => None,
                };

                let grads = model.backward(grad_logits.as_ref(), grad_reg.as_ref())?;
                if accum.is_empty() {
                    accum = grads;
                } else {
                    for (a, g) in accum.iter_mut().zip(&grads) {
                        for (x, &y) in a.data_mut().iter_mut().zip(g.data()) {
                            *x += y;
                        }
                    }
                }
            }

            let mut batch_loss = 0.0;
            if model.config().classes > 0 {
                batch_loss += alpha * ce_sum / b as f64;
            }
            if model.config().regression_outputs > 0 {
                batch_loss += beta * l1_sum / (b * reg_arity) as f64;
            }
            loss_sum += batch_loss * b as f64;

            let grad_refs: Vec<&Tensor<T>> = accum.iter().collect();
            let mut params = model.param_tensors_mut();
            adam.step(&mut params, &grad_refs)?;
        }

        let evaluate_now = epoch % cfg.eval_every == 0 || epoch == cfg.epochs;
        let (train_acc, train_mse) = if evaluate_now {
            evaluate(model, train_ds)?
        } else {
            (None, None)
        };
        let (test_acc, test_mse) = match (evaluate_now, test_ds) {
            (true, Some(ds)) => evaluate(model, ds)?,
            _ => (None, None),
        };
        history.epochs.push(EpochStats {
            epoch,
            train_loss: loss_sum / n as f64,
            train_acc,
            test_acc,
            train_mse,
            test_mse,
        });
    }
    Ok(history)
}

/// Frozen-parameter metrics: classification accuracy over the labelled
/// signals and regression MSE (scaled-label units) over the targeted ones.
/// A metric is `None` when the head is disabled or no labels are present.
pub fn evaluate<T: Scalar>(model: &Model<T>, ds: &Dataset<T>) -> Result<(Option<f64>, Option<f64>)> {
    let mut hits = 0usize;
    let mut labelled = 0usize;
    let mut sq_sum = 0.0;
    let mut sq_count = 0usize;
    for sample in ds.signals() {
        let out = model.predict(&sample.values)?;
        if let (Some(probs), Some(label)) = (&out.class_probabilities, sample.class_label) {
            labelled += 1;
            if argmax(probs) == label {
                hits += 1;
            }
        }
        if let (Some(est), Some(target)) = (&out.depth_estimates, &sample.depth_labels) {
            if est.len() != target.len() {
                return Err(Error::Shape(format!(
                    "model predicts {} depths, labels carry {}",
                    est.len(),
                    target.len()
                )));
            }
            for (&e, &t) in est.data().iter().zip(target.data()) {
                let d = e.as_f64() - t.as_f64();
                sq_sum += d * d;
            }
            sq_count += est.len();
        }
    }
    let acc = (labelled > 0).then(|| hits as f64 / labelled as f64);
    let mse = (sq_count > 0).then(|| sq_sum / sq_count as f64);
    Ok((acc, mse))
}

/// Index of the largest element; the first wins ties.
pub fn argmax<T: Scalar>(t: &Tensor<T>) -> usize {
    let mut best = 0;
    for (i, &v) in t.data().iter().enumerate() {
        if v > t.data()[best] {
            best = i;
        }
    }
    best
}
