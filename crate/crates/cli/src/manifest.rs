//! Per-run manifest: what was run, with which configuration, and the
//! checksum of every file read or written.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name, enough to rerun.
    pub args: Vec<String>,
    pub seed: u64,
    pub threads: usize,
    pub config_sha256: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest(path: &Path) -> Result<FileDigest> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(FileDigest { path: path.display().to_string(), sha256: sha256_bytes(&bytes), bytes: bytes.len() as u64 })
}

/// Collects outputs while a command runs, then writes `manifest-<command>.json`.
pub struct RunRecord {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
}

impl RunRecord {
    pub fn new(out_dir: &Path, command: &str, args: Vec<String>, seed: u64, threads: usize, config_text: &str) -> Result<Self> {
        fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            manifest: Manifest {
                tool: "kilnopt".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                args,
                seed,
                threads,
                config_sha256: sha256_bytes(config_text.as_bytes()),
                inputs: Vec::new(),
                outputs: Vec::new(),
            },
        })
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let d = digest(path)?;
        self.manifest.inputs.push(d);
        Ok(())
    }

    /// Writes `contents` to `name` inside the output directory and records it.
    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.out_dir.join(name);
        fs::write(&path, contents.as_ref()).with_context(|| format!("writing {}", path.display()))?;
        self.record(&path)?;
        Ok(path)
    }

    /// Records a file some other writer produced.
    pub fn record(&mut self, path: &Path) -> Result<()> {
        let mut d = digest(path)?;
        d.path = path.file_name().map_or_else(|| d.path.clone(), |n| n.to_string_lossy().into_owned());
        self.manifest.outputs.retain(|o| o.path != d.path);
        self.manifest.outputs.push(d);
        Ok(())
    }

    pub fn finish(self) -> Result<PathBuf> {
        let path = self.out_dir.join(format!("manifest-{}.json", self.manifest.command));
        fs::write(&path, serde_json::to_string_pretty(&self.manifest)? + "\n")?;
        Ok(path)
    }
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
