//! `manifest.json`: what produced an output directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    /// Absent for files holding wall-clock measurements.
    pub sha256: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub code_version: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// Collects what a command writes into one directory and finishes with the
/// manifest.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<(String, bool)>,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(CliError::io(root))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Opens `name` for writing and records it; `timed` files are not
    /// digested.
    pub fn file(&mut self, name: &str, timed: bool) -> CliResult<std::io::BufWriter<fs::File>> {
        let path = self.path(name);
        let f = fs::File::create(&path).map_err(CliError::io(&path))?;
        self.files.push((name.to_string(), timed));
        Ok(std::io::BufWriter::new(f))
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> CliResult<()> {
        let path = self.path(name);
        fs::write(&path, text).map_err(CliError::io(&path))?;
        self.files.push((name.to_string(), false));
        Ok(())
    }

    pub fn finish(
        self,
        command: &str,
        config: &impl Serialize,
        seeds: Vec<u64>,
        inputs: &[&Path],
    ) -> CliResult<RunManifest> {
        let mut outputs = Vec::new();
        for (name, timed) in &self.files {
            let sha256 = if *timed { None } else { Some(sha256_file(&self.path(name))?) };
            outputs.push(FileDigest { path: name.clone(), sha256 });
        }
        outputs.sort_by(|a, b| a.path.cmp(&b.path));
        outputs.dedup_by(|a, b| a.path == b.path);
        let inputs = inputs
            .iter()
            .map(|p| Ok(FileDigest { path: p.display().to_string(), sha256: Some(sha256_file(p)?) }))
            .collect::<CliResult<Vec<_>>>()?;
        let manifest = RunManifest {
            schema_version: MANIFEST_VERSION,
            command: command.to_string(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config: serde_json::to_value(config).map_err(|e| CliError::Usage(e.to_string()))?,
            seeds,
            inputs,
            outputs,
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Usage(e.to_string()))?;
        let path = self.path(MANIFEST_FILE);
        fs::write(&path, text + "\n").map_err(CliError::io(&path))?;
        Ok(manifest)
    }
}
