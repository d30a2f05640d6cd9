//! Versioned binary checkpoint.
//!
//! ```text
//! magic      8 bytes   "HISENTCK"
//! version    u32 LE
//! length     u64 LE    payload byte count
//! payload    length bytes
//! checksum   u64 LE    FNV-1a 64 of the payload
//! ```
//!
//! The payload holds the vocabulary fingerprint (u64), the model config
//! (seven u64 dimensions/limits, two f64 dropout rates, u64 seed), a u32
//! tensor count, then per tensor `rows u64, cols u64` followed by
//! `rows * cols` row-major f64 values. Vectors are stored with `cols = 1`.
//! All integers and floats are little-endian.

use std::fs;
use std::path::Path;

use super::{HiCnnLstmModel, ModelConfig};
use crate::error::{Error, Result};
use crate::tensor::Matrix;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"HISENTCK";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: HiCnnLstmModel,
    pub vocab_fingerprint: u64,
}

fn fnv64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn tensor_shapes(model: &HiCnnLstmModel) -> [(usize, usize); 12] {
    let m = |x: &Matrix| x.shape();
    [
        m(&model.conv.filters),
        (model.conv.bias.len(), 1),
        m(&model.dense.weights),
        (model.dense.bias.len(), 1),
        m(&model.lstm_fwd.input_weights),
        m(&model.lstm_fwd.recurrent_weights),
        (model.lstm_fwd.bias.len(), 1),
        m(&model.lstm_bwd.input_weights),
        m(&model.lstm_bwd.recurrent_weights),
        (model.lstm_bwd.bias.len(), 1),
        m(&model.head.weights),
        (model.head.bias.len(), 1),
    ]
}

pub fn save_checkpoint(model: &HiCnnLstmModel, vocab_fingerprint: u64, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let c = &model.config;
    let mut payload = Vec::with_capacity(128 + 8 * model.num_parameters());
    payload.extend(vocab_fingerprint.to_le_bytes());
    for v in [
        c.embedding_dim,
        c.filter_width,
        c.num_filters,
        c.sentence_dim,
        c.lstm_hidden,
        c.num_classes,
        c.max_sentences_per_doc,
    ] {
        payload.extend((v as u64).to_le_bytes());
    }
    payload.extend(c.dense_dropout.to_le_bytes());
    payload.extend(c.lstm_dropout.to_le_bytes());
    payload.extend(c.seed.to_le_bytes());

    let tensors = model.tensors();
    payload.extend((tensors.len() as u32).to_le_bytes());
    for ((rows, cols), data) in tensor_shapes(model).into_iter().zip(tensors) {
        payload.extend((rows as u64).to_le_bytes());
        payload.extend((cols as u64).to_le_bytes());
        for v in data {
            payload.extend(v.to_le_bytes());
        }
    }

    let mut out = Vec::with_capacity(payload.len() + 28);
    out.extend_from_slice(MAGIC);
    out.extend(CHECKPOINT_VERSION.to_le_bytes());
    out.extend((payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    out.extend(fnv64(&payload).to_le_bytes());
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Truncated(format!("{what} at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        usize::try_from(self.u64(what)?).map_err(|_| Error::Corrupt(format!("{what} out of range")))
    }
}

/// Reads a checkpoint without checking the vocabulary fingerprint.
pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut cur = Cursor { buf: &bytes, pos: 0 };
    if cur.take(8, "magic")? != MAGIC {
        return Err(Error::Corrupt("not a checkpoint file (bad magic)".into()));
    }
    let version = cur.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::CheckpointVersion {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let len = cur.usize("payload length")?;
    let payload = cur.take(len, "payload")?;
    let checksum = cur.u64("checksum")?;
    if cur.pos != bytes.len() {
        return Err(Error::Corrupt(format!("{} trailing bytes", bytes.len() - cur.pos)));
    }
    if fnv64(payload) != checksum {
        return Err(Error::Corrupt("checksum mismatch".into()));
    }

    let mut p = Cursor { buf: payload, pos: 0 };
    let vocab_fingerprint = p.u64("fingerprint")?;
    let config = ModelConfig {
        embedding_dim: p.usize("embedding_dim")?,
        filter_width: p.usize("filter_width")?,
        num_filters: p.usize("num_filters")?,
        sentence_dim: p.usize("sentence_dim")?,
        lstm_hidden: p.usize("lstm_hidden")?,
        num_classes: p.usize("num_classes")?,
        max_sentences_per_doc: p.usize("max_sentences_per_doc")?,
        dense_dropout: p.f64("dense_dropout")?,
        lstm_dropout: p.f64("lstm_dropout")?,
        seed: p.u64("seed")?,
    };
    config.validate().map_err(|e| Error::Corrupt(e.to_string()))?;
    let mut model = HiCnnLstmModel::new(config)?;
    let count = p.u32("tensor count")? as usize;
    let shapes = tensor_shapes(&model);
    if count != shapes.len() {
        return Err(Error::Corrupt(format!("expected {} tensors, found {count}", shapes.len())));
    }
    for (i, (slot, expected)) in model.tensors_mut().into_iter().zip(shapes).enumerate() {
        let rows = p.usize("rows")?;
        let cols = p.usize("cols")?;
        if (rows, cols) != expected {
            return Err(Error::Corrupt(format!(
                "tensor {} ({}) has shape {rows}x{cols}, config implies {}x{}",
                i,
                super::PARAM_NAMES[i],
                expected.0,
                expected.1
            )));
        }
        for v in slot.iter_mut() {
            *v = p.f64("tensor data")?;
        }
    }
    if p.pos != payload.len() {
        return Err(Error::Corrupt("payload has trailing bytes".into()));
    }
    Ok(Checkpoint {
        model,
        vocab_fingerprint,
    })
}

/// Reads a checkpoint and checks it was trained with the given vocabulary.
pub fn load_checkpoint(path: impl AsRef<Path>, expected_fingerprint: u64) -> Result<HiCnnLstmModel> {
    let ck = read_checkpoint(path)?;
    if ck.vocab_fingerprint != expected_fingerprint {
        return Err(Error::Fingerprint {
            found: ck.vocab_fingerprint,
            expected: expected_fingerprint,
        });
    }
    Ok(ck.model)
}
