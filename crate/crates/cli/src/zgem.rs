//! ZGEM matrix container: magic `ZGEM`, version `u32`, rows `u64`, cols `u64`, then
//! `rows · cols` row-major `f64`, all little-endian.

use std::path::Path;

use zge_core::Matrix;

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 4] = b"ZGEM";
pub const VERSION: u32 = 1;
const HEADER: usize = 4 + 4 + 8 + 8;

pub fn encode(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + 8 * m.as_slice().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(path: &Path, bytes: &[u8]) -> CliResult<Matrix> {
    let bad = |message: String| CliError::Integrity { path: path.into(), message };
    if bytes.len() < HEADER {
        return Err(bad(format!("{} bytes is shorter than the {HEADER}-byte header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad(format!("bad magic bytes {:?}", &bytes[..4])));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(8))
        .and_then(|b| b.checked_add(HEADER as u64))
        .ok_or_else(|| bad(format!("shape {rows}x{cols} overflows")))?;
    if expected != bytes.len() as u64 {
        return Err(bad(format!("shape {rows}x{cols} needs {expected} bytes, file has {}", bytes.len())));
    }
    let data: Vec<f64> = bytes[HEADER..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(Matrix::from_vec(rows as usize, cols as usize, data)?)
}

pub fn write(path: &Path, m: &Matrix) -> CliResult<()> {
    crate::report::write_atomic(path, &encode(m))
}

pub fn read(path: &Path) -> CliResult<Matrix> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(path, &bytes)
}
