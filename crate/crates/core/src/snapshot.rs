//! Binary field snapshots and 16-bit PGM heatmaps of `|psi|^2`.
//!
//! Snapshot layout: a 64-byte header (`"DESL"`, version u32, N1 u32, N2 u32,
//! L1 f64, L2 f64, epsilon f64, time f64, zero padding), then per grid point
//! in storage order `re1, im1, re2, im2` as little-endian f64.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::dirac::SpinorField;
use crate::error::{EdgeError, Result};
use crate::grid::Grid2D;

pub const MAGIC: &[u8; 4] = b"DESL";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub version: u32,
    pub n1: u32,
    pub n2: u32,
    pub l1: f64,
    pub l2: f64,
    pub epsilon: f64,
    pub time: f64,
}

impl SnapshotHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..4].copy_from_slice(MAGIC);
        b[4..8].copy_from_slice(&self.version.to_le_bytes());
        b[8..12].copy_from_slice(&self.n1.to_le_bytes());
        b[12..16].copy_from_slice(&self.n2.to_le_bytes());
        b[16..24].copy_from_slice(&self.l1.to_le_bytes());
        b[24..32].copy_from_slice(&self.l2.to_le_bytes());
        b[32..40].copy_from_slice(&self.epsilon.to_le_bytes());
        b[40..48].copy_from_slice(&self.time.to_le_bytes());
        b
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        if b.len() < HEADER_LEN {
            return Err(EdgeError::Format("snapshot shorter than its header".into()));
        }
        if &b[0..4] != MAGIC {
            return Err(EdgeError::Format("bad snapshot magic".into()));
        }
        let u = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap());
        let f = |i: usize| f64::from_le_bytes(b[i..i + 8].try_into().unwrap());
        let h = SnapshotHeader {
            version: u(4),
            n1: u(8),
            n2: u(12),
            l1: f(16),
            l2: f(24),
            epsilon: f(32),
            time: f(40),
        };
        if h.version != VERSION {
            return Err(EdgeError::Format(format!("unsupported snapshot version {}", h.version)));
        }
        Ok(h)
    }
}

pub fn encode_snapshot(field: &SpinorField, epsilon: f64) -> Vec<u8> {
    let g = &field.grid;
    let header = SnapshotHeader {
        version: VERSION,
        n1: g.n1 as u32,
        n2: g.n2 as u32,
        l1: g.l1,
        l2: g.l2,
        epsilon,
        time: field.time,
    };
    let mut out = Vec::with_capacity(HEADER_LEN + 32 * g.len());
    out.extend_from_slice(&header.to_bytes());
    for (a, b) in field.psi[0].iter().zip(&field.psi[1]) {
        for v in [a.re, a.im, b.re, b.im] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<(SnapshotHeader, SpinorField)> {
    let h = SnapshotHeader::from_bytes(bytes)?;
    let grid = Grid2D::new(h.n1 as usize, h.n2 as usize, h.l1, h.l2)
        .map_err(|e| EdgeError::Format(format!("snapshot grid: {e}")))?;
    let n = grid.len();
    let body = &bytes[HEADER_LEN..];
    if body.len() != 32 * n {
        return Err(EdgeError::Format(format!(
            "snapshot body has {} bytes, expected {}",
            body.len(),
            32 * n
        )));
    }
    let mut psi = [Vec::with_capacity(n), Vec::with_capacity(n)];
    for chunk in body.chunks_exact(32) {
        let f = |i: usize| f64::from_le_bytes(chunk[8 * i..8 * i + 8].try_into().unwrap());
        psi[0].push(Complex64::new(f(0), f(1)));
        psi[1].push(Complex64::new(f(2), f(3)));
    }
    let field = SpinorField::from_components(&grid, psi, h.time)?;
    Ok((h, field))
}

pub fn write_snapshot(path: &Path, field: &SpinorField, epsilon: f64) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(&encode_snapshot(field, epsilon))?;
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, SpinorField)> {
    decode_snapshot(&fs::read(path)?)
}

/// Path of the text file holding the heatmap's maximum density.
pub fn heatmap_sidecar(pgm: &Path) -> PathBuf {
    let mut s = pgm.as_os_str().to_owned();
    s.push(".max");
    PathBuf::from(s)
}

/// Binary 16-bit PGM of `|psi|^2`, linearly scaled to its maximum, with `x2`
/// increasing upwards. Returns the maximum.
pub fn encode_heatmap(field: &SpinorField) -> (Vec<u8>, f64) {
    let g = &field.grid;
    let dens = field.density();
    let max = dens.iter().copied().fold(0.0, f64::max);
    let mut out = format!("P5\n{} {}\n65535\n", g.n1, g.n2).into_bytes();
    for i2 in (0..g.n2).rev() {
        for i1 in 0..g.n1 {
            let d = dens[i2 * g.n1 + i1];
            let v = if max > 0.0 {
                (d / max * 65535.0).round() as u16
            } else {
                0
            };
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
    (out, max)
}

pub fn write_heatmap(path: &Path, field: &SpinorField) -> Result<f64> {
    let (bytes, max) = encode_heatmap(field);
    fs::write(path, bytes)?;
    fs::write(heatmap_sidecar(path), format!("{max:.17e}\n"))?;
    Ok(max)
}
