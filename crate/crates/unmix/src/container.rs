//! `HSIC1` container: one line of JSON header, then little-endian `f32` values.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use unmix_core::{AbundanceSet, HsiCube};

pub const MAGIC: &str = "HSIC1";
pub const DTYPE: &str = "f32le";
pub const ORDER: &str = "row-major-pixel-then-channel";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Cube,
    Abundance,
    Attention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub magic: String,
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
    pub dtype: String,
    pub order: String,
    pub kind: Kind,
    /// Abundances that need not satisfy the simplex constraints
    /// (e.g. unconstrained sparse regression).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unconstrained: bool,
}

impl Header {
    pub fn new(kind: Kind, rows: usize, cols: usize, channels: usize) -> Self {
        Self { magic: MAGIC.into(), rows, cols, channels, dtype: DTYPE.into(), order: ORDER.into(), kind, unconstrained: false }
    }
}

pub fn encode(header: &Header, data: &[f64]) -> Result<Vec<u8>> {
    ensure!(data.len() == header.rows * header.cols * header.channels, "container payload does not match its header");
    let mut out = serde_json::to_vec(header)?;
    out.push(b'\n');
    out.reserve(data.len() * 4);
    for &v in data {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<(Header, Vec<f64>)> {
    let nl = bytes.iter().position(|&b| b == b'\n').context("container has no header line")?;
    let header: Header = serde_json::from_slice(&bytes[..nl]).context("malformed container header")?;
    if header.magic != MAGIC || header.dtype != DTYPE || header.order != ORDER {
        bail!("unsupported container (magic {}, dtype {}, order {})", header.magic, header.dtype, header.order);
    }
    let body = &bytes[nl + 1..];
    let n = header.rows * header.cols * header.channels;
    ensure!(body.len() == n * 4, "container body holds {} bytes, header implies {}", body.len(), n * 4);
    let data = body.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64).collect();
    Ok((header, data))
}

pub fn write(path: &Path, header: &Header, data: &[f64]) -> Result<()> {
    let bytes = encode(header, data)?;
    let mut f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn read(path: &Path) -> Result<(Header, Vec<f64>)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decode(&bytes).with_context(|| format!("decoding {}", path.display()))
}

pub fn write_cube(path: &Path, cube: &HsiCube) -> Result<()> {
    write(path, &Header::new(Kind::Cube, cube.rows(), cube.cols(), cube.bands()), cube.data())
}

pub fn read_cube(path: &Path) -> Result<HsiCube> {
    let (h, data) = read(path)?;
    ensure!(h.kind == Kind::Cube, "{} holds {:?}, expected a cube", path.display(), h.kind);
    Ok(HsiCube::new(h.rows, h.cols, h.channels, data)?)
}

pub fn write_abundance(path: &Path, a: &AbundanceSet, constrained: bool) -> Result<()> {
    let mut h = Header::new(Kind::Abundance, a.rows(), a.cols(), a.endmembers());
    h.unconstrained = !constrained;
    write(path, &h, a.data())
}

/// Reads an abundance container; constrained sets are re-validated after
/// the `f32` round trip (within the library's `1e-6` tolerance).
pub fn read_abundance(path: &Path) -> Result<AbundanceSet> {
    let (h, data) = read(path)?;
    ensure!(h.kind == Kind::Abundance, "{} holds {:?}, expected abundances", path.display(), h.kind);
    let set = if h.unconstrained {
        AbundanceSet::from_raw(h.rows, h.cols, h.channels, data)?
    } else {
        AbundanceSet::new(h.rows, h.cols, h.channels, data)?
    };
    Ok(set)
}
