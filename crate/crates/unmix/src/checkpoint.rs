//! Parameter files and model checkpoints.
//!
//! A parameter file is one JSON line (names, shapes, byte offsets, dtype
//! `f64le`) followed by the concatenated little-endian values. A checkpoint
//! directory holds `checkpoint.json` plus one parameter file per network.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use unmix_core::diff::{ParamStore, Tensor};
use unmix_core::gan::{CheckpointConfig, Discriminator, TrainConfig, TrainOutcome};
use unmix_core::transformer::Generator;

pub const PARAM_MAGIC: &str = "UNMIXP1";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const GENERATOR_FILE: &str = "generator.params";
pub const DISCRIMINATOR_FILE: &str = "discriminator.params";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: [usize; 2],
    /// Byte offset from the start of the data section.
    pub offset: usize,
    pub trainable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamHeader {
    pub magic: String,
    pub dtype: String,
    pub tensors: Vec<TensorEntry>,
}

pub fn encode_params(store: &ParamStore) -> Result<Vec<u8>> {
    let mut offset = 0;
    let tensors = store
        .ids()
        .map(|id| {
            let t = store.get(id);
            let e = TensorEntry { name: store.name(id).to_owned(), shape: t.shape(), offset, trainable: store.is_trainable(id) };
            offset += t.len() * 8;
            e
        })
        .collect();
    let header = ParamHeader { magic: PARAM_MAGIC.into(), dtype: "f64le".into(), tensors };
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    for t in store.tensors() {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_params(bytes: &[u8]) -> Result<ParamStore> {
    let nl = bytes.iter().position(|&b| b == b'\n').context("parameter file has no header line")?;
    let header: ParamHeader = serde_json::from_slice(&bytes[..nl]).context("malformed parameter header")?;
    ensure!(header.magic == PARAM_MAGIC && header.dtype == "f64le", "unsupported parameter file ({}, {})", header.magic, header.dtype);
    let body = &bytes[nl + 1..];
    let mut store = ParamStore::new();
    for e in header.tensors {
        let n = e.shape[0] * e.shape[1];
        let Some(raw) = body.get(e.offset..e.offset + n * 8) else {
            bail!("tensor {} runs past the end of the file", e.name);
        };
        let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
        let id = store.add(e.name, Tensor::new(e.shape[0], e.shape[1], data)?);
        store.set_trainable(id, e.trainable);
    }
    Ok(store)
}

pub fn write_params(path: &Path, store: &ParamStore) -> Result<()> {
    fs::write(path, encode_params(store)?).with_context(|| format!("writing {}", path.display()))
}

pub fn read_params(path: &Path) -> Result<ParamStore> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decode_params(&bytes).with_context(|| format!("decoding {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointFile {
    pub config: CheckpointConfig,
    pub generator: String,
    pub discriminator: Option<String>,
}

/// Writes the checkpoint files into `dir`; returns their paths.
pub fn save_checkpoint(dir: &Path, outcome: &TrainOutcome, train: &TrainConfig) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let g = dir.join(GENERATOR_FILE);
    write_params(&g, outcome.generator.params())?;
    written.push(g);
    let disc = match &outcome.discriminator {
        Some(d) => {
            let p = dir.join(DISCRIMINATOR_FILE);
            write_params(&p, d.params())?;
            written.push(p);
            Some(DISCRIMINATOR_FILE.to_owned())
        }
        None => None,
    };
    let file = CheckpointFile { config: outcome.checkpoint_config(train), generator: GENERATOR_FILE.into(), discriminator: disc };
    let c = dir.join(CHECKPOINT_FILE);
    fs::write(&c, serde_json::to_string_pretty(&file)? + "\n")?;
    written.push(c);
    Ok(written)
}

#[derive(Debug, Clone)]
pub struct LoadedCheckpoint {
    pub config: CheckpointConfig,
    pub generator: Generator,
    pub discriminator: Option<Discriminator>,
}

/// Accepts either the checkpoint directory or its `checkpoint.json`.
pub fn load_checkpoint(path: &Path) -> Result<LoadedCheckpoint> {
    let json = if path.is_dir() { path.join(CHECKPOINT_FILE) } else { path.to_path_buf() };
    let dir = json.parent().map(Path::to_path_buf).unwrap_or_default();
    let text = fs::read_to_string(&json).with_context(|| format!("reading {}", json.display()))?;
    let file: CheckpointFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", json.display()))?;
    let generator = Generator::from_params(file.config.generator.clone(), read_params(&dir.join(&file.generator))?)?;
    let discriminator = match (&file.discriminator, &file.config.discriminator) {
        (Some(p), Some(cfg)) => Some(Discriminator::from_params(cfg.clone(), read_params(&dir.join(p))?)?),
        _ => None,
    };
    Ok(LoadedCheckpoint { config: file.config, generator, discriminator })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_file_round_trip_and_offsets() {
        let mut s = ParamStore::new();
        s.add("a", Tensor::new(1, 2, vec![1.5, -2.0]).unwrap());
        let b = s.add("b", Tensor::new(2, 1, vec![0.1, 1e-300]).unwrap());
        s.set_trainable(b, false);
        let bytes = encode_params(&s).unwrap();
        let nl = bytes.iter().position(|&c| c == b'\n').unwrap();
        let h: ParamHeader = serde_json::from_slice(&bytes[..nl]).unwrap();
        assert_eq!(h.tensors[1].offset, 16);
        assert_eq!(bytes.len(), nl + 1 + 32);
        let back = decode_params(&bytes).unwrap();
        assert_eq!(back, s);
        assert!(!back.is_trainable(b));
        assert!(decode_params(&bytes[..bytes.len() - 1]).is_err());
    }
}
