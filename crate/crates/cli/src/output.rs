//! Artifact files under one output directory and the manifest that hashes them.

use sha2::{Digest, Sha256};
use std::io;
use std::path::{Path, PathBuf};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

pub struct Sink {
    root: PathBuf,
    files: Vec<Artifact>,
}

impl Sink {
    pub fn new(root: &Path) -> io::Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `rel` (forward slashes, relative to the root) and records its hash.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> io::Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&path, bytes)?;
        self.files.retain(|a| a.path != rel);
        self.files.push(Artifact { path: rel.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() });
        Ok(())
    }

    pub fn write_json(&mut self, rel: &str, value: &serde_json::Value) -> io::Result<()> {
        let mut s = serde_json::to_string_pretty(value).expect("json value");
        s.push('\n');
        self.write(rel, s.as_bytes())
    }

    /// Renders with a writer closure, e.g. one of the `write_csv` dumps.
    pub fn write_with<F>(&mut self, rel: &str, f: F) -> io::Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> io::Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(rel, &buf)
    }

    /// manifest.json: the scenario identity and every file, sorted by path.
    pub fn finish(mut self, command: &str, config_sha256: &str, seed: u64, status: &str) -> io::Result<Vec<Artifact>> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        let files: Vec<serde_json::Value> = self
            .files
            .iter()
            .map(|a| serde_json::json!({ "path": a.path, "sha256": a.sha256, "bytes": a.bytes }))
            .collect();
        let manifest = serde_json::json!({
            "command": command,
            "config_sha256": config_sha256,
            "seed": seed,
            "status": status,
            "files": files,
        });
        let mut s = serde_json::to_string_pretty(&manifest).expect("json value");
        s.push('\n');
        std::fs::write(self.root.join("manifest.json"), s)?;
        Ok(self.files)
    }
}
