//! Single-file model bundles.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes   "INTBNDL\0"
//! version    u32
//! length     u64       payload length in bytes
//! digest     32 bytes  SHA-256 of the payload
//! payload:
//!   meta_len u64
//!   meta     JSON      config, fitted features, labels, training settings
//!   rows     K times:  tag u8 (0 = dense, 1 = sparse)
//!                      dense:  D x f64
//!                      sparse: nnz u64, then nnz x (index u64, value f64)
//!   bias     K x f64
//! ```
//!
//! Floats are stored as raw IEEE-754 bits (or shortest round-trip decimal
//! inside the JSON), so a loaded bundle predicts bit-identically.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::LabelIndex;
use crate::embeddings::EmbeddingSpec;
use crate::error::{Error, Result};
use crate::linear_models::{LinearModel, TrainConfig};
use crate::vectorizer::UnionVectorizer;

use super::config::ExperimentConfig;

pub const MAGIC: &[u8; 8] = b"INTBNDL\0";
pub const FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "intent-bundle";
const HEADER_LEN: usize = 8 + 4 + 8 + 32;

/// Fitted feature extractor stored with a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FittedFeatures {
    Tfidf { vectorizer: UnionVectorizer },
    Embeddings { spec: EmbeddingSpec },
}

impl FittedFeatures {
    pub fn width(&self) -> Option<usize> {
        match self {
            FittedFeatures::Tfidf { vectorizer } => Some(vectorizer.width()),
            FittedFeatures::Embeddings { spec } => spec.dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub config: ExperimentConfig,
    pub features: FittedFeatures,
    pub model: LinearModel,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    format: String,
    version: String,
    config: ExperimentConfig,
    features: FittedFeatures,
    labels: LabelIndex,
    classifier: TrainConfig,
    n_features: usize,
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::CorruptBundle(format!("payload ends early at byte {}", self.pos))
            })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?)
            .map_err(|_| Error::CorruptBundle("length overflows usize".into()))
    }
}

impl ModelBundle {
    fn payload(&self) -> Vec<u8> {
        let meta = Meta {
            format: FORMAT_NAME.to_owned(),
            version: FORMAT_VERSION.to_string(),
            config: self.config.clone(),
            features: self.features.clone(),
            labels: self.model.labels().clone(),
            classifier: *self.model.config(),
            n_features: self.model.n_features(),
        };
        let meta = serde_json::to_vec(&meta).expect("bundle metadata serializes");
        let d = self.model.n_features();
        let mut out = Vec::with_capacity(8 + meta.len() + self.model.weights().len() * 8);
        out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
        out.extend_from_slice(&meta);
        for class in 0..self.model.n_classes() {
            let row = self.model.row(class);
            // -0.0 counts as non-zero so that sparse rows keep the exact bits
            let nnz = row.iter().filter(|v| v.to_bits() != 0).count();
            if nnz * 16 + 8 < d * 8 {
                out.push(1);
                out.extend_from_slice(&(nnz as u64).to_le_bytes());
                for (i, &v) in row.iter().enumerate().filter(|(_, v)| v.to_bits() != 0) {
                    out.extend_from_slice(&(i as u64).to_le_bytes());
                    put_f64(&mut out, v);
                }
            } else {
                out.push(0);
                for &v in row {
                    put_f64(&mut out, v);
                }
            }
        }
        for &b in self.model.bias() {
            put_f64(&mut out, b);
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let payload = self.payload();
        let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&Sha256::digest(&payload));
        out.extend_from_slice(&payload);
        out
    }

    /// Hex SHA-256 of the serialized payload.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.payload()))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() {
            return Err(Error::Truncated(format!(
                "{} bytes, no header",
                bytes.len()
            )));
        }
        if &bytes[..8] != MAGIC {
            return Err(Error::BadMagic);
        }
        if bytes.len() < HEADER_LEN {
            return Err(Error::Truncated(format!(
                "header needs {HEADER_LEN} bytes, file has {}",
                bytes.len()
            )));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        let declared = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
        let payload = &bytes[HEADER_LEN..];
        if (payload.len() as u64) < declared {
            return Err(Error::Truncated(format!(
                "payload has {} of {declared} bytes",
                payload.len()
            )));
        }
        if payload.len() as u64 > declared {
            return Err(Error::CorruptBundle(format!(
                "{} trailing bytes after payload",
                payload.len() as u64 - declared
            )));
        }
        let expected = &bytes[20..52];
        let actual = Sha256::digest(payload);
        if expected != actual.as_slice() {
            return Err(Error::DigestMismatch {
                expected: hex::encode(expected),
                actual: hex::encode(actual),
            });
        }
        Self::decode_payload(payload)
    }

    fn decode_payload(payload: &[u8]) -> Result<Self> {
        let mut cur = Cursor {
            bytes: payload,
            pos: 0,
        };
        let meta_len = cur.len()?;
        let meta: Meta = serde_json::from_slice(cur.take(meta_len)?)
            .map_err(|e| Error::json("bundle metadata", e))?;
        if meta.format != FORMAT_NAME || meta.version != FORMAT_VERSION.to_string() {
            return Err(Error::CorruptBundle(format!(
                "metadata declares {} version {}",
                meta.format, meta.version
            )));
        }
        let (k, d) = (meta.labels.len(), meta.n_features);
        if let Some(width) = meta.features.width() {
            if width != d {
                return Err(Error::CorruptBundle(format!(
                    "feature extractor width {width} but model has {d} columns"
                )));
            }
        }
        let mut weights = Vec::with_capacity(k * d);
        for _ in 0..k {
            match cur.u8()? {
                0 => {
                    for _ in 0..d {
                        weights.push(cur.f64()?);
                    }
                }
                1 => {
                    let mut row = vec![0.0; d];
                    for _ in 0..cur.len()? {
                        let i = cur.len()?;
                        *row.get_mut(i).ok_or_else(|| {
                            Error::CorruptBundle(format!("weight index {i} out of range"))
                        })? = cur.f64()?;
                    }
                    weights.extend(row);
                }
                tag => return Err(Error::CorruptBundle(format!("unknown row tag {tag}"))),
            }
        }
        let bias = (0..k).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
        if cur.pos != payload.len() {
            return Err(Error::CorruptBundle(
                "unread bytes at end of payload".into(),
            ));
        }
        Ok(Self {
            config: meta.config,
            features: meta.features,
            model: LinearModel::from_parts(weights, bias, d, meta.labels, meta.classifier)?,
        })
    }
}

/// Writes the bundle and returns its payload digest.
pub fn save_model(bundle: &ModelBundle, path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = bundle.to_bytes();
    std::fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(&bytes[20..52]))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelBundle> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    ModelBundle::from_bytes(&bytes)
}
