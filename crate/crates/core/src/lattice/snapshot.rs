//! Binary field snapshots.
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `LDSP` |
//! | 4     | version `u32` = 1 |
//! | 4     | dimension `u32` |
//! | 4     | points per axis `u32` |
//! | 8     | mesh `f64` |
//! | 8     | time `f64` |
//! | 16 M^d| values as interleaved `(re, im)` `f64`, row-major |

use std::io::{Read, Write};

use num_complex::Complex64;

use super::{ComplexField, LatticeGrid};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"LDSP";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

/// Field plus the time stamp it was taken at.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub field: ComplexField,
    pub time: f64,
}

pub fn write_snapshot<W: Write>(mut w: W, field: &ComplexField, time: f64) -> Result<()> {
    let g = field.grid();
    let mut buf = Vec::with_capacity(HEADER_LEN + 16 * g.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(g.points() as u32).to_le_bytes());
    buf.extend_from_slice(&g.mesh().to_le_bytes());
    buf.extend_from_slice(&time.to_le_bytes());
    for v in field.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn encode_snapshot(field: &ComplexField, time: f64) -> Vec<u8> {
    let mut out = Vec::new();
    write_snapshot(&mut out, field, time).expect("writing to a Vec cannot fail");
    out
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<Snapshot> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    if &header[0..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
    let f64_at = |i: usize| f64::from_le_bytes(header[i..i + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let grid = LatticeGrid::new(u32_at(8) as usize, u32_at(12) as usize, f64_at(16))?;
    let time = f64_at(24);
    let mut body = vec![0u8; 16 * grid.len()];
    r.read_exact(&mut body)
        .map_err(|e| Error::Format(format!("truncated body: {e}")))?;
    let values = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    Ok(Snapshot {
        field: ComplexField::new(grid, values)?,
        time,
    })
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<Snapshot> {
    read_snapshot(bytes)
}
