//! Seeded weight initialization.
//!
//! Every layer draws from its own ChaCha stream of a shared master seed, so
//! the initial weights of a layer depend only on the seed and the layer's
//! position, not on which other layers exist in the model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// RNG for one named stream of a master seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Zero-mean normal draws with standard deviation `sqrt(2 / fan_in)`.
pub fn he_normal<T: Scalar>(shape: &[usize], fan_in: usize, rng: &mut ChaCha8Rng) -> Tensor<T> {
    let std = (2.0 / fan_in as f64).sqrt();
    let len: usize = shape.iter().product();
    let data = (0..len)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            T::from_f64(z * std)
        })
        .collect();
    Tensor::from_parts(shape.to_vec(), data)
}
