//! Output tree with atomic writes and a content-hash manifest.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    /// Relative artifact path → hex sha256 of its bytes.
    pub artifacts: BTreeMap<String, String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(0o644))
            .map_err(|e| Error::io(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// The `--out` directory of one invocation.
#[derive(Debug)]
pub struct OutTree {
    root: PathBuf,
    written: BTreeMap<String, String>,
}

impl OutTree {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        OutTree {
            root: root.into(),
            written: BTreeMap::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.path(rel), bytes)?;
        self.written.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_with(&mut self, rel: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(rel, &buf)
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    /// Path of an artifact a previous command must have produced.
    pub fn stage_input(&self, rel: &str, producer: &str) -> Result<PathBuf> {
        let p = self.path(rel);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::input(format!(
                "missing {} (run `afs {producer}` first)",
                p.display()
            )))
        }
    }

    pub fn read_stage(&self, rel: &str, producer: &str) -> Result<String> {
        let p = self.stage_input(rel, producer)?;
        std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))
    }

    pub fn written(&self) -> &BTreeMap<String, String> {
        &self.written
    }

    /// Merges this invocation's artifacts into the manifest on disk. Entries
    /// whose file has disappeared are dropped.
    pub fn finish(&mut self) -> Result<Manifest> {
        let path = self.path(MANIFEST);
        let mut m = if path.is_file() {
            Manifest::load(&path)?
        } else {
            Manifest::default()
        };
        m.artifacts
            .extend(self.written.iter().map(|(k, v)| (k.clone(), v.clone())));
        let root = self.root.clone();
        m.artifacts.retain(|k, _| root.join(k).is_file());
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        write_atomic(&path, text.as_bytes())?;
        Ok(m)
    }
}
