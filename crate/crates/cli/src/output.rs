use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn config_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

pub fn artifact_version() -> String {
    match option_env!("FPMIX_GIT_DESCRIBE") {
        Some(describe) => format!("fpmix-{}-{describe}", env!("CARGO_PKG_VERSION")),
        None => format!("fpmix-{}", env!("CARGO_PKG_VERSION")),
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: String,
    pub config_hash: String,
    pub started: String,
    pub finished: String,
    pub version: String,
    pub outputs: Vec<String>,
    pub status: String,
}

/// Collects output files under one directory; every CSV starts with a comment
/// line naming the manifest and the config hash.
pub struct OutputDir {
    root: PathBuf,
    hash: String,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path, hash: &str) -> Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            hash: hash.to_string(),
            written: Vec::new(),
        })
    }

    pub fn csv(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("writing {}", path.display()))?);
        writeln!(w, "# manifest={MANIFEST_NAME} config_hash={}", self.hash)?;
        body(&mut w)?;
        w.flush()?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.root.join(name);
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("writing {}", path.display()))?);
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn finish(mut self, mut manifest: RunManifest) -> Result<()> {
        manifest.outputs = std::mem::take(&mut self.written);
        let path = self.root.join(MANIFEST_NAME);
        let mut w = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut w, &manifest)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_sha256_hex() {
        assert_eq!(
            config_hash(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn csv_files_carry_the_manifest_reference() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path(), "abc").unwrap();
        out.csv("x.csv", |w| writeln!(w, "a,b")).unwrap();
        out.finish(RunManifest {
            command: "test".into(),
            config_path: String::new(),
            config_hash: "abc".into(),
            started: now(),
            finished: now(),
            version: artifact_version(),
            outputs: Vec::new(),
            status: "ok".into(),
        })
        .unwrap();
        let body = std::fs::read_to_string(dir.path().join("x.csv")).unwrap();
        assert_eq!(body, "# manifest=manifest.json config_hash=abc\na,b\n");
        let m: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(MANIFEST_NAME)).unwrap()).unwrap();
        assert_eq!(m["outputs"][0], "x.csv");
    }
}
