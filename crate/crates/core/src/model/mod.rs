//! The multi-task network: shared convolutional trunk, softmax classification
//! head and two-layer regression head, trained jointly.

mod serialize;
mod train;

pub use serialize::{load_model, save_model};
pub use train::{evaluate, train, EpochStats, TrainConfig, TrainingHistory};

use crate::error::{Error, Result};
use crate::init::stream_rng;
use crate::layers::{
    conv1d, fc, gap, gap_backward, maxpool, maxpool_backward, relu, relu_backward, softmax,
    Conv1d, FcLayer, PoolSpec,
};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvBlockConfig {
    /// Output channels of every convolution in the block.
    pub kernels: usize,
    /// Kernel width along the time axis.
    pub width: usize,
    /// Number of stacked convolutions.
    pub count: usize,
}

/// Architecture hyperparameters.
///
/// The default mirrors the reference setup: two 128-kernel width-3
/// convolutions, max pooling of 3, two 64-kernel width-3 convolutions,
/// global average pooling into a 64-vector, a 10-class softmax head and a
/// 32-unit hidden layer in front of a 2-output depth head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    pub input_channels: usize,
    pub signal_length: usize,
    pub block1: ConvBlockConfig,
    pub pool_size: usize,
    pub block2: ConvBlockConfig,
    /// Classification classes; 0 disables the head.
    pub classes: usize,
    pub regression_hidden: usize,
    /// Regression outputs; 0 disables the head.
    pub regression_outputs: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input_channels: 1,
            signal_length: 100,
            block1: ConvBlockConfig {
                kernels: 128,
                width: 3,
                count: 2,
            },
            pool_size: 3,
            block2: ConvBlockConfig {
                kernels: 64,
                width: 3,
                count: 2,
            },
            classes: 10,
            regression_hidden: 32,
            regression_outputs: 2,
        }
    }
}

impl ModelConfig {
    /// Reduced geometry used by gradient checks and fast tests.
    pub fn tiny() -> Self {
        ModelConfig {
            input_channels: 1,
            signal_length: 12,
            block1: ConvBlockConfig {
                kernels: 2,
                width: 2,
                count: 2,
            },
            pool_size: 3,
            block2: ConvBlockConfig {
                kernels: 2,
                width: 2,
                count: 2,
            },
            classes: 3,
            regression_hidden: 4,
            regression_outputs: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_channels == 0 || self.signal_length == 0 {
            return Err(Error::Config("empty input geometry".to_string()));
        }
        for (name, b) in [("block1", &self.block1), ("block2", &self.block2)] {
            if b.kernels == 0 || b.width == 0 || b.count == 0 {
                return Err(Error::Config(format!("{name} must have positive sizes")));
            }
        }
        if self.pool_size == 0 {
            return Err(Error::Config("pool size must be positive".to_string()));
        }
        if self.classes == 0 && self.regression_outputs == 0 {
            return Err(Error::Config(
                "at least one head (classes or regression outputs) must be enabled".to_string(),
            ));
        }
        if self.regression_outputs > 0 && self.regression_hidden == 0 {
            return Err(Error::Config(
                "regression head needs hidden units".to_string(),
            ));
        }
        self.stage_lengths()?;
        Ok(())
    }

    /// Time-axis lengths after the first block, after pooling and after the
    /// second block. Errors when any stage collapses below one sample.
    pub fn stage_lengths(&self) -> Result<(usize, usize, usize)> {
        let mut len = self.signal_length;
        for _ in 0..self.block1.count {
            if len < self.block1.width {
                return Err(Error::Config(format!(
                    "signal length {} too short for block1 geometry",
                    self.signal_length
                )));
            }
            len = len - self.block1.width + 1;
        }
        let after_block1 = len;
        if len < self.pool_size {
            return Err(Error::Config(format!(
                "length {len} too short for pooling by {}",
                self.pool_size
            )));
        }
        len /= self.pool_size;
        let after_pool = len;
        for _ in 0..self.block2.count {
            if len < self.block2.width {
                return Err(Error::Config(format!(
                    "length after pooling ({after_pool}) too short for block2 geometry"
                )));
            }
            len = len - self.block2.width + 1;
        }
        Ok((after_block1, after_pool, len))
    }

    /// Length of the feature vector leaving the trunk.
    pub fn feature_len(&self) -> usize {
        self.block2.kernels
    }
}

/// Inference result; each head contributes only when enabled.
#[derive(Debug, Clone)]
pub struct MultiTaskOutput<T> {
    /// Softmax distribution over flaw classes.
    pub class_probabilities: Option<Tensor<T>>,
    /// Depth estimates in scaled-label units.
    pub depth_estimates: Option<Tensor<T>>,
}

/// Activations retained by the training forward pass for the backward pass.
#[derive(Debug, Clone)]
struct ForwardCache<T> {
    relu_in_b1: Vec<Tensor<T>>,
    pool_argmax: Vec<usize>,
    pool_in_shape: Vec<usize>,
    relu_in_b2: Vec<Tensor<T>>,
    gap_t: usize,
    reg_hidden_pre: Option<Tensor<T>>,
}

/// The assembled network. While training it is exclusively owned by the
/// training loop (forward caches feed backward); a frozen model serves
/// concurrent `predict` calls through `&self`.
#[derive(Debug, Clone)]
pub struct Model<T> {
    config: ModelConfig,
    label_scale: f64,
    block1: Vec<Conv1d<T>>,
    block2: Vec<Conv1d<T>>,
    pool: PoolSpec,
    cls_head: Option<FcLayer<T>>,
    reg_hidden: Option<FcLayer<T>>,
    reg_out: Option<FcLayer<T>>,
    cache: Option<ForwardCache<T>>,
}

// Per-layer init streams: a layer's initial weights depend only on the seed
// and its own position, never on which other layers exist.
const STREAM_BLOCK1: u64 = 10;
const STREAM_BLOCK2: u64 = 100;
const STREAM_CLS: u64 = 200;
const STREAM_REG_HIDDEN: u64 = 201;
const STREAM_REG_OUT: u64 = 202;

impl<T: Scalar> Model<T> {
    /// Builds the network with seeded He initialization.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut block1 = Vec::with_capacity(config.block1.count);
        let mut in_ch = config.input_channels;
        for i in 0..config.block1.count {
            let mut rng = stream_rng(seed, STREAM_BLOCK1 + i as u64);
            block1.push(Conv1d::he_init(
                config.block1.kernels,
                in_ch,
                config.block1.width,
                &mut rng,
            ));
            in_ch = config.block1.kernels;
        }
        let mut block2 = Vec::with_capacity(config.block2.count);
        for i in 0..config.block2.count {
            let mut rng = stream_rng(seed, STREAM_BLOCK2 + i as u64);
            block2.push(Conv1d::he_init(
                config.block2.kernels,
                in_ch,
                config.block2.width,
                &mut rng,
            ));
            in_ch = config.block2.kernels;
        }
        let feat = config.feature_len();
        let cls_head = if config.classes > 0 {
            Some(FcLayer::he_init(
                config.classes,
                feat,
                &mut stream_rng(seed, STREAM_CLS),
            ))
        } else {
            None
        };
        let (reg_hidden, reg_out) = if config.regression_outputs > 0 {
            (
                Some(FcLayer::he_init(
                    config.regression_hidden,
                    feat,
                    &mut stream_rng(seed, STREAM_REG_HIDDEN),
                )),
                Some(FcLayer::he_init(
                    config.regression_outputs,
                    config.regression_hidden,
                    &mut stream_rng(seed, STREAM_REG_OUT),
                )),
            )
        } else {
            (None, None)
        };
        let pool = PoolSpec::new(config.pool_size)?;
        Ok(Model {
            config,
            label_scale: 1.0,
            block1,
            block2,
            pool,
            cls_head,
            reg_hidden,
            reg_out,
            cache: None,
        })
    }

    /// Reassembles a model from config plus parameter tensors in declaration
    /// order (the save-file layout). Shapes must match the config.
    pub(crate) fn from_parts(
        config: ModelConfig,
        label_scale: f64,
        params: Vec<Tensor<T>>,
    ) -> Result<Self> {
        let mut model = Model::new(config, 0)?;
        {
            let slots = model.param_tensors_mut();
            if slots.len() != params.len() {
                return Err(Error::Format(format!(
                    "model file carries {} tensors, config needs {}",
                    params.len(),
                    slots.len()
                )));
            }
        }
        for (slot, tensor) in model.param_tensors_mut().into_iter().zip(params) {
            if slot.shape() != tensor.shape() {
                return Err(Error::Format(format!(
                    "tensor shape {:?} does not match config slot {:?}",
                    tensor.shape(),
                    slot.shape()
                )));
            }
            *slot = tensor;
        }
        model.label_scale = label_scale;
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Factor the training labels were multiplied by; predictions divide by
    /// this to report raw units.
    pub fn label_scale(&self) -> f64 {
        self.label_scale
    }

    pub fn set_label_scale(&mut self, scale: f64) {
        self.label_scale = scale;
    }

    /// Parameter tensors in declaration order: block1 (kernels, bias per
    /// conv), block2, classification head, regression hidden, regression out.
    pub fn param_tensors(&self) -> Vec<&Tensor<T>> {
        let mut v = Vec::new();
        for conv in &self.block1 {
            v.push(conv.kernels());
            v.push(conv.bias());
        }
        for conv in &self.block2 {
            v.push(conv.kernels());
            v.push(conv.bias());
        }
        if let Some(fc) = &self.cls_head {
            v.push(fc.weights());
            v.push(fc.bias());
        }
        if let Some(fc) = &self.reg_hidden {
            v.push(fc.weights());
            v.push(fc.bias());
        }
        if let Some(fc) = &self.reg_out {
            v.push(fc.weights());
            v.push(fc.bias());
        }
        v
    }

    pub fn param_tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut v = Vec::new();
        for conv in &mut self.block1 {
            let (k, b) = conv.params_mut();
            v.push(k);
            v.push(b);
        }
        for conv in &mut self.block2 {
            let (k, b) = conv.params_mut();
            v.push(k);
            v.push(b);
        }
        for head in [&mut self.cls_head, &mut self.reg_hidden, &mut self.reg_out]
            .into_iter()
            .flatten()
        {
            let (w, b) = head.params_mut();
            v.push(w);
            v.push(b);
        }
        v
    }

    pub fn num_params(&self) -> usize {
        self.param_tensors().iter().map(|t| t.len()).sum()
    }

    fn check_signal(&self, signal: &Tensor<T>) -> Result<()> {
        if signal.shape() != [self.config.input_channels, self.config.signal_length] {
            return Err(Error::Shape(format!(
                "signal {:?}, model expects [{}, {}]",
                signal.shape(),
                self.config.input_channels,
                self.config.signal_length
            )));
        }
        Ok(())
    }

    /// Forward pass that caches activations for a following [`Model::backward`].
    pub fn forward_train(&mut self, signal: &Tensor<T>) -> Result<MultiTaskOutput<T>> {
        self.check_signal(signal)?;
        let mut relu_in_b1 = Vec::with_capacity(self.block1.len());
        let mut x = signal.clone();
        for conv in &mut self.block1 {
            let z = conv.forward(&x)?;
            x = relu(&z);
            relu_in_b1.push(z);
        }
        let pool_in_shape = x.shape().to_vec();
        let (pooled, pool_argmax) = maxpool(self.pool, &x)?;
        x = pooled;
        let mut relu_in_b2 = Vec::with_capacity(self.block2.len());
        for conv in &mut self.block2 {
            let z = conv.forward(&x)?;
            x = relu(&z);
            relu_in_b2.push(z);
        }
        let gap_t = x.shape()[1];
        let features = gap(&x)?;

        let class_probabilities = match &mut self.cls_head {
            Some(fc) => Some(softmax(&fc.forward(&features)?)?),
            None => None,
        };
        let mut reg_hidden_pre = None;
        let depth_estimates = match (&mut self.reg_hidden, &mut self.reg_out) {
            (Some(fc1), Some(fc2)) => {
                let pre = fc1.forward(&features)?;
                let hidden = relu(&pre);
                reg_hidden_pre = Some(pre);
                Some(fc2.forward(&hidden)?)
            }
            _ => None,
        };

        self.cache = Some(ForwardCache {
            relu_in_b1,
            pool_argmax,
            pool_in_shape,
            relu_in_b2,
            gap_t,
            reg_hidden_pre,
        });
        Ok(MultiTaskOutput {
            class_probabilities,
            depth_estimates,
        })
    }

    /// Backpropagates head gradients through the whole network and returns
    /// parameter gradients in declaration order. `grad_logits` is the
    /// gradient at the classification logits, `grad_reg` at the regression
    /// output; each enabled head must receive one (callers fold the loss
    /// weights and batch normalization into these upstream gradients, and
    /// the trunk then receives the sum of both head contributions at the
    /// pooled-feature boundary).
    pub fn backward(
        &mut self,
        grad_logits: Option<&Tensor<T>>,
        grad_reg: Option<&Tensor<T>>,
    ) -> Result<Vec<Tensor<T>>> {
        if self.cls_head.is_some() != grad_logits.is_some()
            || self.reg_out.is_some() != grad_reg.is_some()
        {
            return Err(Error::State(
                "head gradients must match the enabled heads".to_string(),
            ));
        }
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::State("backward called before forward".to_string()))?;

        let feat_len = self.config.feature_len();
        let mut feature_grad = Tensor::zeros(&[feat_len])?;
        let mut cls_grads = None;
        if let (Some(fc), Some(gl)) = (&self.cls_head, grad_logits) {
            let g = fc.backward(gl)?;
            feature_grad = feature_grad.add(&g.input)?;
            cls_grads = Some((g.weights, g.bias));
        }
        let mut reg_grads = None;
        if let (Some(fc1), Some(fc2), Some(gr)) = (&self.reg_hidden, &self.reg_out, grad_reg) {
            let g2 = fc2.backward(gr)?;
            let pre = cache
                .reg_hidden_pre
                .as_ref()
                .ok_or_else(|| Error::State("missing regression cache".to_string()))?;
            let g_pre = relu_backward(&g2.input, pre)?;
            let g1 = fc1.backward(&g_pre)?;
            feature_grad = feature_grad.add(&g1.input)?;
            reg_grads = Some((g1.weights, g1.bias, g2.weights, g2.bias));
        }

        let mut g = gap_backward(&feature_grad, cache.gap_t)?;
        let mut block2_grads = Vec::with_capacity(self.block2.len());
        for (conv, z) in self.block2.iter().zip(&cache.relu_in_b2).rev() {
            let gz = relu_backward(&g, z)?;
            let cg = conv.backward(&gz)?;
            block2_grads.push((cg.kernels, cg.bias));
            g = cg.input;
        }
        block2_grads.reverse();

        g = maxpool_backward(&g, &cache.pool_argmax, &cache.pool_in_shape)?;

        let mut block1_grads = Vec::with_capacity(self.block1.len());
        for (conv, z) in self.block1.iter().zip(&cache.relu_in_b1).rev() {
            let gz = relu_backward(&g, z)?;
            let cg = conv.backward(&gz)?;
            block1_grads.push((cg.kernels, cg.bias));
            g = cg.input;
        }
        block1_grads.reverse();

        let mut out = Vec::new();
        for (k, b) in block1_grads.into_iter().chain(block2_grads) {
            out.push(k);
            out.push(b);
        }
        if let Some((w, b)) = cls_grads {
            out.push(w);
            out.push(b);
        }
        if let Some((w1, b1, w2, b2)) = reg_grads {
            out.push(w1);
            out.push(b1);
            out.push(w2);
            out.push(b2);
        }
        Ok(out)
    }

    /// Pure inference; no state is touched, so a trained model can serve
    /// concurrent calls.
    pub fn predict(&self, signal: &Tensor<T>) -> Result<MultiTaskOutput<T>> {
        self.check_signal(signal)?;
        let mut x = signal.clone();
        for conv in &self.block1 {
            x = relu(&conv1d(conv.kernels(), conv.bias(), &x)?);
        }
        let (pooled, _) = maxpool(self.pool, &x)?;
        x = pooled;
        for conv in &self.block2 {
            x = relu(&conv1d(conv.kernels(), conv.bias(), &x)?);
        }
        let features = gap(&x)?;

        let class_probabilities = match &self.cls_head {
            Some(head) => Some(softmax(&fc(head.weights(), head.bias(), &features)?)?),
            None => None,
        };
        let depth_estimates = match (&self.reg_hidden, &self.reg_out) {
            (Some(fc1), Some(fc2)) => {
                let hidden = relu(&fc(fc1.weights(), fc1.bias(), &features)?);
                Some(fc(fc2.weights(), fc2.bias(), &hidden)?)
            }
            _ => None,
        };
        Ok(MultiTaskOutput {
            class_probabilities,
            depth_estimates,
        })
    }
}
