use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Output directory that prefixes every CSV with the manifest line.
pub struct OutputDir {
    root: PathBuf,
    manifest: String,
    timestamp: bool,
    written: Vec<PathBuf>,
}

pub fn manifest_line(experiment: &str, config_bytes: &[u8]) -> String {
    let sha = hex::encode(Sha256::digest(config_bytes));
    format!("# manifest: experiment={experiment} config_sha={sha} tool_version={}", env!("CARGO_PKG_VERSION"))
}

impl OutputDir {
    pub fn create(root: &Path, manifest: String, timestamp: bool) -> Result<Self> {
        fs::create_dir_all(root).map_err(|source| CliError::Io { path: root.to_path_buf(), source })?;
        Ok(Self { root: root.to_path_buf(), manifest, timestamp, written: Vec::new() })
    }

    pub fn manifest(&self) -> &str {
        &self.manifest
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Writes `name` with the manifest header followed by `body`.
    pub fn csv(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
        let path = self.root.join(name);
        let io_err = |source| CliError::Io { path: path.clone(), source };
        let file = File::create(&path).map_err(io_err)?;
        let mut w = BufWriter::new(file);
        writeln!(w, "{}", self.manifest).map_err(io_err)?;
        if self.timestamp {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            writeln!(w, "# generated_unix={secs}").map_err(io_err)?;
        }
        body(&mut w).map_err(io_err)?;
        w.flush().map_err(io_err)?;
        self.written.push(path);
        Ok(())
    }
}
