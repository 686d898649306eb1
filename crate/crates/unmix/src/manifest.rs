//! Experiment manifests: the effective configuration of a command plus
//! content hashes of everything it read and wrote.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Git-style object hash: `sha256("blob <len>\0" ‖ content)`.
pub fn blob_hash(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    hex::encode(h.finalize())
}

pub fn hash_file(path: &Path) -> Result<String> {
    Ok(blob_hash(&fs::read(path).with_context(|| format!("hashing {}", path.display()))?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

impl FileHash {
    pub fn of(path: &Path, shown_as: String) -> Result<Self> {
        Ok(Self { path: shown_as, sha256: hash_file(path)? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Effective configuration; feeding this file back through `--config`
    /// re-runs the command.
    pub config: serde_json::Value,
    pub inputs: Vec<FileHash>,
    /// Paths relative to the output directory.
    pub outputs: Vec<FileHash>,
}

impl Manifest {
    pub fn file_name(command: &str) -> String {
        format!("{command}.manifest.json")
    }

    pub fn build<C: Serialize>(command: &str, config: &C, inputs: &[PathBuf], out_dir: &Path, outputs: &[PathBuf]) -> Result<Self> {
        let inputs = inputs.iter().map(|p| FileHash::of(p, p.display().to_string())).collect::<Result<_>>()?;
        let outputs = outputs
            .iter()
            .map(|p| {
                let shown = p.strip_prefix(out_dir).unwrap_or(p).display().to_string();
                FileHash::of(p, shown)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            tool: "unmix".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: serde_json::to_value(config)?,
            inputs,
            outputs,
        })
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join(Self::file_name(&self.command));
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Loads a JSON config file. A manifest is accepted too, in which case its
/// `config` block is used.
pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if value.get("tool").is_some() && value.get("command").is_some() {
        if let Some(cfg) = value.get_mut("config") {
            value = cfg.take();
        }
    }
    serde_json::from_value(value).with_context(|| format!("invalid configuration in {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_hash_matches_git_object_format() {
        // `git hash-object --object-format=sha256` of an empty file.
        assert_eq!(blob_hash(b""), "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813");
    }

    #[test]
    fn manifests_feed_back_as_configs() {
        #[derive(Debug, PartialEq, Serialize, Deserialize)]
        struct C {
            seed: u64,
        }
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("x.bin");
        fs::write(&out, b"abc").unwrap();
        let m = Manifest::build("synth", &C { seed: 7 }, &[], dir.path(), &[out]).unwrap();
        assert_eq!(m.outputs[0].path, "x.bin");
        let path = m.write(dir.path()).unwrap();
        assert_eq!(load_config::<C>(&path).unwrap(), C { seed: 7 });
        let plain = dir.path().join("c.json");
        fs::write(&plain, r#"{"seed": 3}"#).unwrap();
        assert_eq!(load_config::<C>(&plain).unwrap(), C { seed: 3 });
    }
}
