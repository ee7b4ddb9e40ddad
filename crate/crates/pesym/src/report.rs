//! Run manifests and report writing. Every output file begins with a
//! commented manifest line recording the command, resolved parameters, seed,
//! tool version and input digests; identical manifests (up to timestamp)
//! produce bit-identical data sections.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub seed: u64,
    pub version: String,
    pub input_digests: BTreeMap<String, String>,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            parameters: BTreeMap::new(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            input_digests: BTreeMap::new(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    /// Record the SHA-256 digests of input files (e.g. catalog entries).
    pub fn digest_inputs(mut self, paths: &[std::path::PathBuf]) -> std::io::Result<Self> {
        for p in paths {
            let bytes = std::fs::read(p)?;
            let mut hasher = Sha256::new();
            hasher.update(&bytes);
            let digest = hex::encode(hasher.finalize());
            let name = p
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string());
            self.input_digests.insert(name, digest);
        }
        Ok(self)
    }

    /// The manifest as a single `#`-prefixed header line.
    pub fn header_line(&self) -> String {
        format!("# manifest: {}", serde_json::to_string(self).unwrap())
    }
}

/// Write CSV content prefixed by the manifest header.
pub fn write_csv(
    path: &Path,
    manifest: &RunManifest,
    columns: &[&str],
    rows: impl Iterator<Item = Vec<f64>>,
) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut fh = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(fh, "{}", manifest.header_line())?;
    writeln!(fh, "{}", columns.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
        writeln!(fh, "{}", line.join(","))?;
    }
    Ok(())
}

/// Write a sequence of JSON records as JSON lines with a manifest header.
pub fn write_json_lines<T: Serialize>(
    path: &Path,
    manifest: &RunManifest,
    records: &[T],
) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut fh = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(fh, "{}", manifest.header_line())?;
    for r in records {
        writeln!(fh, "{}", serde_json::to_string(r)?)?;
    }
    Ok(())
}
