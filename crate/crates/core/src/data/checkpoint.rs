use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{param_layout, ModelConfig, ModelParams};
use crate::tensor::Tensor;
use crate::util::write_atomic;

const MAGIC: &str = "mustang-checkpoint";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    config: ModelConfig,
    arrays: Vec<ArrayEntry>,
    payload_bytes: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArrayEntry {
    name: String,
    shape: Vec<usize>,
    /// Byte offset into the payload.
    offset: usize,
    /// Element count.
    len: usize,
}

/// JSON header line (config plus array registry), then every array as
/// little-endian `f64` in layout order.
pub fn save_checkpoint(params: &ModelParams<f64>, cfg: &ModelConfig, path: &Path) -> Result<()> {
    if param_layout(cfg) != params.layout() {
        return Err(Error::Checkpoint("parameters do not match the config".into()));
    }
    let mut arrays = Vec::with_capacity(params.tensors().len());
    let mut offset = 0;
    for (spec, t) in params.layout().iter().zip(params.tensors()) {
        arrays.push(ArrayEntry { name: spec.name.clone(), shape: t.shape().to_vec(), offset, len: t.numel() });
        offset += t.numel() * 8;
    }
    let header = Header { format: MAGIC.into(), version: VERSION, config: cfg.clone(), arrays, payload_bytes: offset };
    let mut bytes = serde_json::to_vec(&header).expect("header serializes");
    bytes.push(b'\n');
    bytes.reserve(offset);
    for t in params.tensors() {
        for v in t.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    write_atomic(path, &bytes)
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelParams<f64>, ModelConfig)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: String| Error::Checkpoint(format!("{}: {m}", path.display()));
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| bad("missing header line".into()))?;
    let header: Header = serde_json::from_slice(&bytes[..nl]).map_err(|e| bad(format!("bad header: {e}")))?;
    if header.format != MAGIC || header.version != VERSION {
        return Err(bad(format!("unsupported format {} v{}", header.format, header.version)));
    }
    header.config.validate().map_err(|e| bad(e.to_string()))?;
    let payload = &bytes[nl + 1..];
    if payload.len() != header.payload_bytes {
        return Err(bad(format!(
            "payload has {} bytes, header declares {}",
            payload.len(),
            header.payload_bytes
        )));
    }
    let layout = param_layout(&header.config);
    if layout.len() != header.arrays.len() {
        return Err(bad(format!("{} arrays, config needs {}", header.arrays.len(), layout.len())));
    }
    let mut tensors = Vec::with_capacity(layout.len());
    let mut expected_offset = 0;
    for (spec, entry) in layout.iter().zip(&header.arrays) {
        if spec.name != entry.name || spec.shape != entry.shape {
            return Err(bad(format!(
                "array {} {:?} does not match config entry {} {:?}",
                entry.name, entry.shape, spec.name, spec.shape
            )));
        }
        if entry.len != spec.numel() || entry.offset != expected_offset {
            return Err(bad(format!("array {} has inconsistent offset or length", entry.name)));
        }
        let end = entry.offset + entry.len * 8;
        let chunk = payload.get(entry.offset..end).ok_or_else(|| bad(format!("array {} is truncated", entry.name)))?;
        let data = chunk.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        tensors.push(Tensor::new(entry.shape.clone(), data).expect("length checked"));
        expected_offset = end;
    }
    if expected_offset != payload.len() {
        return Err(bad("trailing bytes after the last array".into()));
    }
    let params = ModelParams::from_tensors(&header.config, tensors).map_err(|e| bad(e.to_string()))?;
    Ok((params, header.config))
}
