//! Run manifests: the reproducibility record written next to every
//! output.
//!
//! A manifest pins everything that determines a run's output bytes —
//! subcommand, full configuration snapshot, master seed, artifact
//! version, and SHA-256 digests of every input file — plus start and
//! finish timestamps for the log. Two manifests that agree on
//! everything except the timestamps ([`RunManifest::same_inputs`])
//! describe runs whose outputs are byte-identical.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// File name of the manifest inside an output directory; the CLI
/// writes exactly one per run.
pub const MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad manifest json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Subcommand that produced the outputs.
    pub command: String,
    /// Full configuration snapshot as flat key/value pairs.
    pub config: BTreeMap<String, String>,
    pub master_seed: u64,
    pub artifact_version: String,
    /// Input label → SHA-256 hex digest of the file as read.
    pub inputs: BTreeMap<String, String>,
    /// RFC 3339 UTC timestamps.
    pub started: String,
    pub finished: String,
}

impl RunManifest {
    /// Starts a manifest now; `finish` stamps the end time.
    pub fn begin(
        command: &str,
        master_seed: u64,
        config: impl IntoIterator<Item = (String, String)>,
    ) -> Self {
        Self {
            command: command.to_string(),
            config: config.into_iter().collect(),
            master_seed,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: BTreeMap::new(),
            started: now_rfc3339(),
            finished: String::new(),
        }
    }

    /// Records an input file under `label` with its SHA-256 digest.
    pub fn add_input(&mut self, label: &str, path: &Path) -> Result<(), ManifestError> {
        let digest = sha256_file(path)?;
        self.inputs.insert(label.to_string(), digest);
        Ok(())
    }

    pub fn finish(&mut self) {
        self.finished = now_rfc3339();
    }

    /// True when the two manifests pin the same run — identical except
    /// possibly the timestamps. Outputs of such runs are byte-equal.
    pub fn same_inputs(&self, other: &Self) -> bool {
        self.command == other.command
            && self.config == other.config
            && self.master_seed == other.master_seed
            && self.artifact_version == other.artifact_version
            && self.inputs == other.inputs
    }

    /// Writes `run_manifest.json` into `dir` and returns its path.
    pub fn write_to(&self, dir: &Path) -> Result<PathBuf, ManifestError> {
        let path = dir.join(MANIFEST_FILE);
        let mut w = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

pub fn sha256_file(path: &Path) -> Result<String, ManifestError> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    let mut out = String::with_capacity(64);
    for b in hasher.finalize() {
        out.push_str(&format!("{b:02x}"));
    }
    Ok(out)
}

fn now_rfc3339() -> String {
    humantime::format_rfc3339_seconds(SystemTime::now()).to_string()
}
