//! Content hashes and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::RunnerError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(64);
    for b in Sha256::digest(bytes).iter() {
        write!(s, "{b:02x}").unwrap();
    }
    s
}

/// Hash of a file's contents, or `None` if it cannot be read.
pub fn file_hash(path: &Path) -> Option<String> {
    fs::read(path).ok().map(|b| sha256_hex(&b))
}

/// Writes through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

/// Output files relative to `root`, keyed by relative path, with their hashes.
pub type Artifacts = BTreeMap<String, String>;

/// Relative paths whose file is missing or no longer matches its hash.
pub fn stale_artifacts(root: &Path, artifacts: &Artifacts) -> Vec<String> {
    artifacts
        .iter()
        .filter(|(rel, h)| file_hash(&root.join(rel)).as_deref() != Some(h.as_str()))
        .map(|(rel, _)| rel.clone())
        .collect()
}

/// Written next to a language's corpus files by `gen`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenRecord {
    pub config_id: String,
    pub input_hash: String,
    /// Relative to the language directory.
    pub files: Artifacts,
    pub notes: Vec<String>,
}

pub const GEN_RECORD: &str = "gen.json";

impl GenRecord {
    pub fn read(dir: &Path) -> Option<GenRecord> {
        serde_json::from_str(&fs::read_to_string(dir.join(GEN_RECORD)).ok()?).ok()
    }

    pub fn write(&self, dir: &Path) -> Result<(), RunnerError> {
        write_atomic(&dir.join(GEN_RECORD), (serde_json::to_string_pretty(self)? + "\n").as_bytes())?;
        Ok(())
    }

    pub fn is_current(&self, dir: &Path, input_hash: &str) -> bool {
        self.input_hash == input_hash && stale_artifacts(dir, &self.files).is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Pending,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub config_id: String,
    pub arch: String,
    pub regime: String,
    pub seed: u64,
    pub status: RunStatus,
    /// Hash over the run's corpus inputs, plan and hyperparameters.
    pub input_hash: String,
    /// Relative to the output directory.
    pub artifacts: Artifacts,
    pub error: Option<String>,
}

impl RunEntry {
    pub fn id(&self) -> String {
        run_id(&self.config_id, &self.arch, &self.regime, self.seed)
    }
}

pub fn run_id(config_id: &str, arch: &str, regime: &str, seed: u64) -> String {
    format!("{config_id}/{arch}/{regime}/{seed}")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub runs: BTreeMap<String, RunEntry>,
}

pub const RUN_MANIFEST: &str = "manifest.json";

impl RunManifest {
    pub fn path(out: &Path) -> PathBuf {
        out.join(RUN_MANIFEST)
    }

    /// Loads the manifest in `out`, or an empty one if there is none.
    pub fn load(out: &Path) -> Result<RunManifest, RunnerError> {
        match fs::read_to_string(Self::path(out)) {
            Ok(s) => Ok(serde_json::from_str(&s)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(RunManifest::default()),
            Err(e) => Err(e.into()),
        }
    }

    pub fn save(&self, out: &Path) -> Result<(), RunnerError> {
        write_atomic(&Self::path(out), (serde_json::to_string_pretty(self)? + "\n").as_bytes())?;
        Ok(())
    }

    /// True when the run is recorded done with the same inputs and all its
    /// artifacts are present and unchanged.
    pub fn is_done(&self, out: &Path, id: &str, input_hash: &str) -> bool {
        self.runs.get(id).is_some_and(|e| {
            e.status == RunStatus::Done
                && e.input_hash == input_hash
                && !e.artifacts.is_empty()
                && stale_artifacts(out, &e.artifacts).is_empty()
        })
    }

    pub fn count(&self, status: RunStatus) -> usize {
        self.runs.values().filter(|e| e.status == status).count()
    }
}
