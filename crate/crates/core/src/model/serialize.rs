//! Self-describing binary model format.
//!
//! Layout (all integers little-endian):
//! magic `PECN`, format version (u32), twelve u32 config fields, the label
//! scale (f64), the parameter tensor count (u32), then each tensor as
//! rank (u32), dims (u32 each) and values (f64 each). Values are stored as
//! 64-bit floats, so an `f64` model round-trips bit for bit (and `f32`
//! losslessly widens).

use std::fs;
use std::path::Path;

use super::{ConvBlockConfig, Model, ModelConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

const MAGIC: &[u8; 4] = b"PECN";
const VERSION: u32 = 1;

pub fn save_model<T: Scalar>(model: &Model<T>, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(model))?;
    Ok(())
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<Model<T>> {
    let bytes = fs::read(path)?;
    from_bytes(&bytes)
}

pub fn to_bytes<T: Scalar>(model: &Model<T>) -> Vec<u8> {
    let c = model.config();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    push_u32(&mut out, VERSION);
    for v in [
        c.input_channels,
        c.signal_length,
        c.block1.kernels,
        c.block1.width,
        c.block1.count,
        c.pool_size,
        c.block2.kernels,
        c.block2.width,
        c.block2.count,
        c.classes,
        c.regression_hidden,
        c.regression_outputs,
    ] {
        push_u32(&mut out, v as u32);
    }
    out.extend_from_slice(&model.label_scale().to_le_bytes());
    let params = model.param_tensors();
    push_u32(&mut out, params.len() as u32);
    for t in params {
        push_u32(&mut out, t.rank() as u32);
        for &d in t.shape() {
            push_u32(&mut out, d as u32);
        }
        for &v in t.data() {
            out.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    }
    out
}

pub fn from_bytes<T: Scalar>(bytes: &[u8]) -> Result<Model<T>> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4)?;
    if magic != MAGIC {
        return Err(Error::Format("not a model file (bad magic)".to_string()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported model format version {version}"
        )));
    }
    let mut fields = [0usize; 12];
    for f in fields.iter_mut() {
        *f = r.u32()? as usize;
    }
    let config = ModelConfig {
        input_channels: fields[0],
        signal_length: fields[1],
        block1: ConvBlockConfig {
            kernels: fields[2],
            width: fields[3],
            count: fields[4],
        },
        pool_size: fields[5],
        block2: ConvBlockConfig {
            kernels: fields[6],
            width: fields[7],
            count: fields[8],
        },
        classes: fields[9],
        regression_hidden: fields[10],
        regression_outputs: fields[11],
    };
    config
        .validate()
        .map_err(|e| Error::Format(format!("invalid config in model file: {e}")))?;
    let label_scale = r.f64()?;
    if !label_scale.is_finite() || label_scale == 0.0 {
        return Err(Error::Format(format!(
            "invalid label scale {label_scale} in model file"
        )));
    }

    let count = r.u32()? as usize;
    if count > 4096 {
        return Err(Error::Format(format!("implausible tensor count {count}")));
    }
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        let rank = r.u32()? as usize;
        if rank == 0 || rank > crate::tensor::MAX_RANK {
            return Err(Error::Format(format!("bad tensor rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32()? as usize);
        }
        let len: usize = shape.iter().product();
        if r.remaining() / 8 < len {
            return Err(Error::Format("model file is truncated".to_string()));
        }
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(T::from_f64(r.f64()?));
        }
        params.push(
            Tensor::from_vec(&shape, data)
                .map_err(|e| Error::Format(format!("bad tensor in model file: {e}")))?,
        );
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after the last tensor",
            bytes.len() - r.pos
        )));
    }
    Model::from_parts(config, label_scale, params)
}

fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format("model file is truncated".to_string()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use crate::testutil::rand_tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_model(seed: u64) -> Model<f64> {
        Model::new(ModelConfig::tiny(), seed).unwrap()
    }

    #[test]
    fn byte_round_trip_preserves_every_parameter_bit() {
        let mut model = tiny_model(42);
        model.set_label_scale(10.0);
        let bytes = to_bytes(&model);
        let back: Model<f64> = from_bytes(&bytes).unwrap();
        assert_eq!(back.label_scale(), 10.0);
        assert_eq!(back.config(), model.config());
        for (a, b) in model.param_tensors().iter().zip(back.param_tensors()) {
            assert_eq!(a.data(), b.data());
        }
    }

    #[test]
    fn forward_outputs_are_bit_identical_after_round_trip() {
        let model = tiny_model(7);
        let back: Model<f64> = from_bytes(&to_bytes(&model)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let signal = rand_tensor(&[1, 12], &mut rng);
            let a = model.predict(&signal).unwrap();
            let b = back.predict(&signal).unwrap();
            assert_eq!(
                a.class_probabilities.unwrap().data(),
                b.class_probabilities.unwrap().data()
            );
            assert_eq!(
                a.depth_estimates.unwrap().data(),
                b.depth_estimates.unwrap().data()
            );
        }
    }

    #[test]
    fn truncated_files_are_format_errors() {
        let bytes = to_bytes(&tiny_model(3));
        for cut in [0, 3, 9, 30, bytes.len() / 2, bytes.len() - 1] {
            let err = from_bytes::<f64>(&bytes[..cut]).unwrap_err();
            assert_eq!(err.category(), "format", "cut at {cut}");
        }
    }

    #[test]
    fn trailing_garbage_is_a_format_error() {
        let mut bytes = to_bytes(&tiny_model(3));
        bytes.push(0);
        assert_eq!(from_bytes::<f64>(&bytes).unwrap_err().category(), "format");
    }

    #[test]
    fn config_and_tensor_disagreement_is_a_format_error() {
        let model = tiny_model(3);
        let mut bytes = to_bytes(&model);
        // Claim 4 classes instead of 3 in the config block; the stored head
        // tensors no longer match.
        let classes_offset = 4 + 4 + 9 * 4;
        bytes[classes_offset..classes_offset + 4].copy_from_slice(&4u32.to_le_bytes());
        let err = from_bytes::<f64>(&bytes).unwrap_err();
        assert_eq!(err.category(), "format");
    }

    #[test]
    fn bad_magic_is_a_format_error() {
        let mut bytes = to_bytes(&tiny_model(3));
        bytes[0] = b'X';
        assert_eq!(from_bytes::<f64>(&bytes).unwrap_err().category(), "format");
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.pecn");
        let model = tiny_model(99);
        save_model(&model, &path).unwrap();
        let back: Model<f64> = load_model(&path).unwrap();
        for (a, b) in model.param_tensors().iter().zip(back.param_tensors()) {
            assert_eq!(a.data(), b.data());
        }
    }
}
