//! Forward and backward passes for every layer in the network.

mod activation;
mod conv;
mod fc;
mod pool;

pub use activation::{relu, relu_backward, softmax};
pub use conv::{conv1d, conv1d_grads, conv_output_len, Conv1d, ConvGrads};
pub use fc::{fc, fc_grads, FcGrads, FcLayer};
pub use pool::{gap, gap_backward, maxpool, maxpool_backward, PoolSpec};
