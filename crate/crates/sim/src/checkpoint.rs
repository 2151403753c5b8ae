//! Binary model checkpoints.
//!
//! ```text
//! offset  size    field
//! 0       8       magic "ISACCNN1"
//! 8       2       version (u16) = 1
//! 10      4×4     C1, C2, P, N_c (u32 each)
//! 26      8·W     weights (f64)
//! end-4   4       CRC-32 (IEEE) of every preceding byte (u32)
//! ```
//!
//! Weights follow the layer order block 1 (three convolutions), shortcut 1,
//! block 2, shortcut 2. Within a layer the kernels come first, indexed
//! `[out][in][ky][kx]`, then one bias per output channel; every complex
//! value is stored as real then imaginary part.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use isac_core::cnn::EnhancerModel;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"ISACCNN1";
pub const CHECKPOINT_VERSION: u16 = 1;
const HEADER_LEN: usize = 26;

pub fn to_bytes(model: &EnhancerModel) -> Vec<u8> {
    let (c1, c2) = model.hidden_channels();
    let (p, nc) = model.dims;
    let flat = model.to_flat();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * flat.len() + 4);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    for n in [c1, c2, p, nc] {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for w in flat {
        out.extend_from_slice(&w.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<EnhancerModel> {
    ensure!(bytes.len() >= HEADER_LEN + 4, "checkpoint truncated: {} bytes", bytes.len());
    ensure!(&bytes[..8] == CHECKPOINT_MAGIC, "not a checkpoint file (bad magic)");
    let version = u16::from_le_bytes([bytes[8], bytes[9]]);
    if version != CHECKPOINT_VERSION {
        bail!("unsupported checkpoint version {version}, expected {CHECKPOINT_VERSION}");
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    ensure!(
        crc32fast::hash(body) == u32::from_le_bytes(tail.try_into().expect("4 bytes")),
        "checkpoint checksum mismatch"
    );
    let u32_at = |o: usize| u32::from_le_bytes(body[o..o + 4].try_into().expect("4 bytes")) as usize;
    let (c1, c2, p, nc) = (u32_at(10), u32_at(14), u32_at(18), u32_at(22));
    ensure!(c1 > 0 && c2 > 0, "checkpoint has zero hidden channels");
    let mut model = EnhancerModel::zeros(c1, c2, (p, nc));
    let flat: Vec<f64> = body[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    ensure!(
        (body.len() - HEADER_LEN) % 8 == 0 && flat.len() == 2 * model.num_params(),
        "checkpoint for C1={c1}, C2={c2} holds {} weight bytes, expected {}",
        body.len() - HEADER_LEN,
        16 * model.num_params()
    );
    model.load_flat(&flat)?;
    Ok(model)
}

pub fn write(model: &EnhancerModel, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(model)).with_context(|| format!("writing {}", path.display()))
}

pub fn read(path: &Path) -> Result<EnhancerModel> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    from_bytes(&bytes).with_context(|| format!("loading {}", path.display()))
}

/// Errors unless the model was trained for `P × N_c` CSI.
pub fn check_dims(model: &EnhancerModel, p: usize, nc: usize) -> Result<()> {
    let (mp, mnc) = model.dims;
    if (mp, mnc) != (p, nc) {
        bail!("checkpoint is for {mp}×{mnc} CSI but the data is {p}×{nc}");
    }
    Ok(())
}
