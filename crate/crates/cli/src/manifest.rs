//! Stage manifests and crash-safe output files.
//!
//! Outputs are written to `<name>.partial` and renamed only once the whole
//! stage has succeeded, so a failed stage leaves its partial files behind
//! for inspection and never a half-written final artifact.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Seeds;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub file: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self {
            file: file_name(path),
            sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    )
}

/// Per-stage record: what ran, with which settings, on which inputs.
/// Contains no timestamps or absolute paths, so identical runs produce
/// identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub version: String,
    pub config_hash: String,
    pub seeds: Seeds,
    pub params: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub summary: serde_json::Value,
}

pub fn manifest_path(dir: &Path, stage: &str) -> PathBuf {
    dir.join(format!("{stage}.manifest.json"))
}

/// Collects the outputs of one stage under their `.partial` names.
#[derive(Debug, Default)]
pub struct Staged {
    finals: Vec<PathBuf>,
}

impl Staged {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `path` and returns the temporary name to write to.
    pub fn partial(&mut self, path: &Path) -> Result<PathBuf> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        self.finals.push(path.to_path_buf());
        Ok(partial_name(path))
    }

    /// Renames every partial file into place, then writes the manifest
    /// (itself via a partial file).
    pub fn commit(
        self,
        manifest_at: &Path,
        mut manifest: Manifest,
        inputs: &[&Path],
    ) -> Result<Manifest> {
        let mut outputs = Vec::with_capacity(self.finals.len());
        for path in &self.finals {
            let tmp = partial_name(path);
            std::fs::rename(&tmp, path).map_err(|e| CliError::io(&tmp, e))?;
            outputs.push(FileDigest::of(path)?);
        }
        manifest.inputs = inputs
            .iter()
            .map(|p| FileDigest::of(p))
            .collect::<Result<_>>()?;
        manifest.outputs = outputs;
        let tmp = partial_name(manifest_at);
        write_json(&tmp, &manifest)?;
        std::fs::rename(&tmp, manifest_at).map_err(|e| CliError::io(&tmp, e))?;
        Ok(manifest)
    }
}

pub fn partial_name(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fedsent_core::io::write_json(path, value).map_err(CliError::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest() -> Manifest {
        Manifest {
            stage: "t".into(),
            version: "0".into(),
            config_hash: "h".into(),
            seeds: crate::config::PipelineConfig::default().seeds(),
            params: serde_json::Value::Null,
            inputs: vec![],
            outputs: vec![],
            summary: serde_json::Value::Null,
        }
    }

    #[test]
    fn commit_renames_and_digests() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("a.txt");
        let mut staged = Staged::new();
        let tmp = staged.partial(&out).unwrap();
        std::fs::write(&tmp, "abc").unwrap();
        assert!(!out.exists());
        let m = staged
            .commit(&manifest_path(dir.path(), "t"), manifest(), &[])
            .unwrap();
        assert!(out.exists() && !tmp.exists());
        assert_eq!(m.outputs[0].file, "a.txt");
        assert_eq!(
            m.outputs[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert!(manifest_path(dir.path(), "t").exists());
    }

    #[test]
    fn uncommitted_output_stays_partial() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("b.txt");
        let mut staged = Staged::new();
        let tmp = staged.partial(&out).unwrap();
        std::fs::write(&tmp, "half").unwrap();
        drop(staged);
        assert!(tmp.exists() && !out.exists());
        assert_eq!(tmp.file_name().unwrap(), "b.txt.partial");
    }
}
