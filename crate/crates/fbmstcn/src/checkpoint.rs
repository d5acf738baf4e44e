//! Binary parameter checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "FBMSTCN\0"
//! version  u32      1
//! hlen     u64      header length
//! header   hlen     JSON: config, seed, tensor table, free-form meta
//! payload           f64 LE, tensors in table order
//! crc      u32      CRC-32 of header and payload
//! ```

use crate::error::{AppError, Result};
use fbmstcn_core::model::{Model, ModelConfig};
use fbmstcn_core::tensor::{ParamEntry, ParamKind, ParamStore, Tensor};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const MAGIC: &[u8; 8] = b"FBMSTCN\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    shape: Vec<usize>,
    kind: ParamKind,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    seed: u64,
    tensors: Vec<TensorInfo>,
    #[serde(default)]
    meta: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub store: ParamStore,
    /// Training bookkeeping; `null` for freshly initialised weights.
    pub meta: serde_json::Value,
}

fn bad(msg: impl Into<String>) -> AppError {
    AppError::Checkpoint(msg.into())
}

impl Checkpoint {
    pub fn new(config: ModelConfig, store: ParamStore) -> Self {
        Self {
            config,
            store,
            meta: serde_json::Value::Null,
        }
    }

    /// Random initial weights for `config`.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        let store = Model::new(config.clone())?.init_params(seed);
        Ok(Self::new(config, store))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            config: self.config.clone(),
            seed: self.store.seed(),
            tensors: self
                .store
                .entries()
                .iter()
                .map(|e| TensorInfo {
                    name: e.name.clone(),
                    shape: e.tensor.shape().to_vec(),
                    kind: e.kind,
                })
                .collect(),
            meta: self.meta.clone(),
        };
        let json = serde_json::to_vec(&header).expect("header serialises");
        let mut out = Vec::with_capacity(24 + json.len() + 8 * self.store.total_count());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        let body = out.len();
        out.extend_from_slice(&json);
        for e in self.store.entries() {
            for v in e.tensor.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out[body..]);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 24 || &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint (bad magic)"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let hlen = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let body_end = bytes.len().checked_sub(4).ok_or_else(|| bad("truncated"))?;
        if 20 + hlen > body_end {
            return Err(bad("truncated header"));
        }
        let crc = u32::from_le_bytes(bytes[body_end..].try_into().unwrap());
        if crc32fast::hash(&bytes[20..body_end]) != crc {
            return Err(bad("checksum mismatch"));
        }
        let header: Header = serde_json::from_slice(&bytes[20..20 + hlen])
            .map_err(|e| bad(format!("header: {e}")))?;
        let mut payload = bytes[20 + hlen..body_end].chunks_exact(8);
        let mut entries = Vec::with_capacity(header.tensors.len());
        for t in header.tensors {
            let n: usize = t.shape.iter().product();
            let data: Vec<f64> = payload
                .by_ref()
                .take(n)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            if data.len() != n {
                return Err(bad(format!("payload ends inside `{}`", t.name)));
            }
            let tensor = Tensor::from_vec(&t.shape, data).map_err(|e| bad(e.to_string()))?;
            entries.push(ParamEntry {
                name: t.name,
                tensor,
                kind: t.kind,
            });
        }
        if payload.next().is_some() || !payload.remainder().is_empty() {
            return Err(bad("trailing payload bytes"));
        }
        let ck = Self {
            config: header.config,
            store: ParamStore::from_entries(entries, header.seed),
            meta: header.meta,
        };
        ck.model()?;
        Ok(ck)
    }

    /// The network this checkpoint parameterises; fails unless every
    /// tensor name, shape and kind matches the configuration.
    pub fn model(&self) -> Result<Model> {
        let model = Model::new(self.config.clone()).map_err(|e| bad(format!("config: {e}")))?;
        if !model.init_params(0).same_layout(&self.store) {
            return Err(bad("tensor table does not match the configuration"));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())
            .map_err(|e| AppError::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }
}
