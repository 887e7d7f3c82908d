//! Run manifests: configuration echo, code version, timestamps, and the
//! emitted artifacts with checksums.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactEntry {
    /// Path relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub code_version: String,
    pub started: String,
    pub finished: String,
    /// "ok" or "failed: <reason>".
    pub status: String,
    pub config: String,
    pub artifacts: Vec<ArtifactEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    format!("{:x}", h.finalize())
}

impl RunManifest {
    pub fn manifest_path(dir: &Path) -> PathBuf {
        dir.join("manifest.toml")
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = Self::manifest_path(dir);
        let text = toml::to_string_pretty(self)?;
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(toml::from_str(&text)?)
    }

    /// Verify that every listed artifact exists and matches its checksum.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for entry in &self.artifacts {
            let path = dir.join(&entry.path);
            let bytes = match std::fs::read(&path) {
                Ok(b) => b,
                Err(e) => bail!("artifact {} missing: {e}", entry.path),
            };
            let digest = sha256_hex(&bytes);
            if digest != entry.sha256 {
                bail!(
                    "artifact {} checksum mismatch: manifest {} vs file {}",
                    entry.path,
                    entry.sha256,
                    digest
                );
            }
        }
        Ok(())
    }
}

/// Collects artifacts as they are written and assembles the manifest.
pub struct ManifestBuilder {
    dir: PathBuf,
    experiment: String,
    config: String,
    started: String,
    artifacts: Vec<ArtifactEntry>,
}

impl ManifestBuilder {
    pub fn new(dir: &Path, experiment: &str, config_echo: &str) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output dir {}", dir.display()))?;
        Ok(ManifestBuilder {
            dir: dir.to_path_buf(),
            experiment: experiment.to_string(),
            config: config_echo.to_string(),
            started: chrono::Utc::now().to_rfc3339(),
            artifacts: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Write an artifact file and record its checksum.
    pub fn write_artifact(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.push(ArtifactEntry {
            path: name.to_string(),
            sha256: sha256_hex(contents),
        });
        Ok(())
    }

    pub fn finish(self, status: &str) -> Result<(RunManifest, PathBuf)> {
        let manifest = RunManifest {
            experiment: self.experiment,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            started: self.started,
            finished: chrono::Utc::now().to_rfc3339(),
            status: status.to_string(),
            config: self.config,
            artifacts: self.artifacts,
        };
        let path = manifest.save(&self.dir)?;
        Ok((manifest, path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_verify() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = ManifestBuilder::new(dir.path(), "lemmas", "experiment = \"lemmas\"").unwrap();
        b.write_artifact("a.csv", b"x,y\n1,2\n").unwrap();
        let (m, path) = b.finish("ok").unwrap();
        assert_eq!(m.artifacts.len(), 1);
        let loaded = RunManifest::load(&path).unwrap();
        loaded.verify(dir.path()).unwrap();

        // tampering is detected and named
        std::fs::write(dir.path().join("a.csv"), b"corrupted").unwrap();
        let err = loaded.verify(dir.path()).unwrap_err();
        assert!(err.to_string().contains("a.csv"));

        std::fs::remove_file(dir.path().join("a.csv")).unwrap();
        let err = loaded.verify(dir.path()).unwrap_err();
        assert!(err.to_string().contains("missing"));
    }
}
