//! Multi-task 1D convolutional network for pulsed eddy current (PEC)
//! inspection signals, written from first principles.
//!
//! A shared convolutional trunk turns a decaying time-domain response into a
//! fixed-length feature vector; a softmax head classifies the flaw type while
//! a small regression head estimates metal-loss depth, trained jointly with a
//! weighted sum of cross entropy and mean absolute error. The crate also
//! ships the surrounding pipeline: a synthetic signal generator shaped like
//! real PEC responses, scan-grid preprocessing (label scaling, rivet-region
//! masking, per-class splits), classical baselines for comparison, and
//! self-describing model/dataset file formats.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below are what the CLI and file formats use.

pub mod data;
pub mod error;
pub mod eval;
pub mod init;
pub mod layers;
pub mod loss;
pub mod model;
pub mod optim;
pub mod scalar;
pub mod tensor;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default precision used by the CLI and the serialized formats.
pub type Tensor64 = tensor::Tensor<f64>;
pub type Model64 = model::Model<f64>;
pub type Signal64 = data::Signal<f64>;
pub type Dataset64 = data::Dataset<f64>;
pub type ScanGrid64 = data::ScanGrid<f64>;
