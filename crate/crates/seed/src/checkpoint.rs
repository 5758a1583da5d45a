//! Binary model checkpoints.
//!
//! A checkpoint is two files: `<name>` holds the model (magic `SEEDCKPT`,
//! version, graph variant, shape header, decision threshold, vocabulary
//! reference, then every tensor in fixed order, all little-endian), and the
//! sibling `<name>.vocab` holds the vocabulary as plain text. The model file
//! records the vocabulary's file name, token count, and SHA-256 so a stale
//! or swapped vocabulary fails loudly instead of silently mis-encoding.
//!
//! The decoder never trusts lengths from the input: every read is
//! bounds-checked and data lengths are verified against the remaining input
//! before any allocation.

use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::Variant;
use crate::model::ModelParams;
use crate::vocab::{VocabError, Vocabulary};

const MAGIC: &[u8; 8] = b"SEEDCKPT";
const VERSION: u32 = 1;
/// Upper bound on strings inside the file.
const MAX_STR: usize = 4096;
/// Upper bound on the state/edge dimensions.
const MAX_DIM: u32 = 4096;
/// Upper bound on propagation rounds.
const MAX_STEPS: u32 = 1024;
/// Upper bound on vocabulary entries (and thus embedding rows).
const MAX_VOCAB: u32 = 16_777_216;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("checkpoint is truncated")]
    Truncated,
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),
    #[error(transparent)]
    Vocab(#[from] VocabError),
}

fn corrupt(msg: impl Into<String>) -> CheckpointError {
    CheckpointError::Corrupt(msg.into())
}

/// A trained model ready to persist or just loaded.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub variant: Variant,
    /// Decision threshold chosen on validation; absent for untrained dumps.
    pub theta: Option<f64>,
    pub params: ModelParams,
    pub vocab: Vocabulary,
}

/// The model file's contents, before the vocabulary file is consulted.
#[derive(Debug, Clone)]
pub struct RawCheckpoint {
    pub variant: Variant,
    pub theta: Option<f64>,
    pub params: ModelParams,
    pub vocab_file: String,
    pub vocab_len: usize,
    pub vocab_sha: [u8; 32],
}

/// Name of the vocabulary file that travels with a checkpoint path.
pub fn vocab_path(checkpoint: &Path) -> PathBuf {
    let mut name = checkpoint.file_name().unwrap_or_default().to_os_string();
    name.push(".vocab");
    checkpoint.with_file_name(name)
}

// --- encoding -------------------------------------------------------------

fn push_str(buf: &mut Vec<u8>, s: &str) {
    debug_assert!(s.len() <= MAX_STR);
    buf.extend_from_slice(&(s.len() as u16).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

/// Serialize the model file given the vocabulary file's name and bytes.
pub fn encode(
    variant: Variant,
    theta: Option<f64>,
    params: &ModelParams,
    vocab_file: &str,
    vocab_bytes: &[u8],
    vocab_len: usize,
) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    push_str(&mut buf, variant.as_str());
    buf.extend_from_slice(&(params.d as u32).to_le_bytes());
    buf.extend_from_slice(&(params.d_e as u32).to_le_bytes());
    buf.extend_from_slice(&(params.t_steps as u32).to_le_bytes());
    match theta {
        Some(t) => {
            buf.push(1);
            buf.extend_from_slice(&t.to_le_bytes());
        }
        None => buf.push(0),
    }
    push_str(&mut buf, vocab_file);
    buf.extend_from_slice(&(vocab_len as u32).to_le_bytes());
    let sha: [u8; 32] = Sha256::digest(vocab_bytes).into();
    buf.extend_from_slice(&sha);

    let tensors = params.tensors();
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, t) in tensors {
        push_str(&mut buf, name);
        buf.extend_from_slice(&(t.nrows() as u32).to_le_bytes());
        buf.extend_from_slice(&(t.ncols() as u32).to_le_bytes());
        for v in t.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

// --- decoding -------------------------------------------------------------

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).ok_or(CheckpointError::Truncated)?;
        if end > self.bytes.len() {
            return Err(CheckpointError::Truncated);
        }
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn str(&mut self, what: &str) -> Result<String, CheckpointError> {
        let len = self.u16()? as usize;
        if len > MAX_STR {
            return Err(corrupt(format!("{what} length {len} exceeds {MAX_STR}")));
        }
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| corrupt(format!("{what} is not valid UTF-8")))
    }
}

/// Decode a model file. Pure (no filesystem): the vocabulary reference comes
/// back unverified inside the [`RawCheckpoint`].
pub fn decode(bytes: &[u8]) -> Result<RawCheckpoint, CheckpointError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    let variant: Variant = r
        .str("variant")?
        .parse()
        .map_err(|e: String| corrupt(e))?;

    let d = r.u32()?;
    let d_e = r.u32()?;
    let t_steps = r.u32()?;
    if d == 0 || d > MAX_DIM || d_e == 0 || d_e > MAX_DIM {
        return Err(corrupt(format!("dimensions {d}×{d_e} out of range")));
    }
    if t_steps == 0 || t_steps > MAX_STEPS {
        return Err(corrupt(format!("{t_steps} propagation rounds out of range")));
    }

    let theta = match r.u8()? {
        0 => None,
        1 => {
            let t = r.f64()?;
            if !t.is_finite() {
                return Err(corrupt("threshold is not finite"));
            }
            Some(t)
        }
        other => return Err(corrupt(format!("bad threshold flag {other}"))),
    };

    let vocab_file = r.str("vocabulary file name")?;
    if vocab_file.is_empty()
        || vocab_file.contains('/')
        || vocab_file.contains('\\')
        || vocab_file == ".."
    {
        return Err(corrupt(format!("unusable vocabulary file name `{vocab_file}`")));
    }
    let vocab_len = r.u32()?;
    if vocab_len == 0 || vocab_len > MAX_VOCAB {
        return Err(corrupt(format!("vocabulary size {vocab_len} out of range")));
    }
    let vocab_sha: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");

    let mut params =
        ModelParams::zeros(vocab_len as usize, d as usize, d_e as usize, t_steps as usize);
    let expected = params.tensors_mut();
    let n_tensors = r.u32()? as usize;
    if n_tensors != expected.len() {
        return Err(corrupt(format!(
            "expected {} tensors, file declares {n_tensors}",
            expected.len()
        )));
    }
    for (want_name, tensor) in expected {
        let name = r.str("tensor name")?;
        if name != want_name {
            return Err(corrupt(format!("expected tensor `{want_name}`, found `{name}`")));
        }
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        if (rows, cols) != tensor.dim() {
            return Err(corrupt(format!(
                "tensor `{name}` has shape {rows}×{cols}, expected {}×{}",
                tensor.nrows(),
                tensor.ncols()
            )));
        }
        let count = rows
            .checked_mul(cols)
            .ok_or_else(|| corrupt("tensor element count overflows"))?;
        let byte_len =
            count.checked_mul(8).ok_or_else(|| corrupt("tensor byte length overflows"))?;
        if byte_len > r.remaining() {
            return Err(CheckpointError::Truncated);
        }
        for (slot, chunk) in tensor.iter_mut().zip(r.take(byte_len)?.chunks_exact(8)) {
            *slot = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        }
    }
    if r.remaining() != 0 {
        return Err(corrupt(format!("{} trailing bytes", r.remaining())));
    }

    Ok(RawCheckpoint {
        variant,
        theta,
        params,
        vocab_file,
        vocab_len: vocab_len as usize,
        vocab_sha,
    })
}

// --- file I/O ---------------------------------------------------------------

impl Checkpoint {
    /// Write the model file to `path` and the vocabulary beside it.
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let vocab_file = vocab_path(path);
        let vocab_name = vocab_file
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| corrupt("checkpoint path has no usable file name"))?
            .to_string();
        let vocab_bytes = self.vocab.to_text().into_bytes();
        let bytes = encode(
            self.variant,
            self.theta,
            &self.params,
            &vocab_name,
            &vocab_bytes,
            self.vocab.len(),
        );
        std::fs::write(path, bytes)
            .map_err(|source| CheckpointError::Io { path: path.to_path_buf(), source })?;
        std::fs::write(&vocab_file, vocab_bytes)
            .map_err(|source| CheckpointError::Io { path: vocab_file.clone(), source })?;
        Ok(())
    }

    /// Load a checkpoint and verify its vocabulary (hash, token count,
    /// embedding rows).
    pub fn load(path: &Path) -> Result<Checkpoint, CheckpointError> {
        let bytes = std::fs::read(path)
            .map_err(|source| CheckpointError::Io { path: path.to_path_buf(), source })?;
        let raw = decode(&bytes)?;

        let vocab_file = path.with_file_name(&raw.vocab_file);
        let vocab_bytes = std::fs::read(&vocab_file)
            .map_err(|source| CheckpointError::Io { path: vocab_file.clone(), source })?;
        let sha: [u8; 32] = Sha256::digest(&vocab_bytes).into();
        if sha != raw.vocab_sha {
            return Err(CheckpointError::VocabMismatch(format!(
                "{} does not match the hash recorded in the checkpoint",
                vocab_file.display()
            )));
        }
        let text = String::from_utf8(vocab_bytes)
            .map_err(|_| CheckpointError::VocabMismatch("vocabulary is not UTF-8".into()))?;
        let vocab = Vocabulary::from_text(&text)?;
        if vocab.len() != raw.vocab_len {
            return Err(CheckpointError::VocabMismatch(format!(
                "vocabulary has {} tokens, checkpoint recorded {}",
                vocab.len(),
                raw.vocab_len
            )));
        }
        if vocab.len() != raw.params.vocab_size() {
            return Err(CheckpointError::VocabMismatch(format!(
                "vocabulary has {} tokens but the embedding table has {} rows",
                vocab.len(),
                raw.params.vocab_size()
            )));
        }
        Ok(Checkpoint {
            variant: raw.variant,
            theta: raw.theta,
            params: raw.params,
            vocab,
        })
    }
}
