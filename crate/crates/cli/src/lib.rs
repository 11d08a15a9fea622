//! Experiment runner behind the `wordorder` command: corpus generation,
//! resumable training runs, evaluation and aggregation.
//!
//! Output layout under the configured directory:
//!
//! - `corpus/{config}/`: corpus files, curriculum manifests and `gen.json`
//! - `runs/{config}/{arch}_{regime}_s{seed}.{ckpt,report.csv,report.json}`
//! - `manifest.json`: run status, input hashes and artifact hashes
//! - `results/`, `tables/`, `plots/`: evaluation output
//! - `diag/`: template category and rule counts

pub mod config;
mod diag;
mod evaluate;
mod gen;
pub mod manifest;
mod runs;
mod verify;

use std::path::{Path, PathBuf};

use wordorder_core::curriculum::Mode;
use wordorder_core::nn::Arch;
use wordorder_core::seed::sub_seed;

pub use config::{ExperimentConfig, LanguageSelection, ModelOverrides, Overrides, TrainingSettings, SCHEMA};
pub use diag::{cmd_diag, DiagSummary};
pub use evaluate::{cmd_eval, EvalSummary, JUDGMENT_HEADER};
pub use gen::{cmd_gen, GenSummary};
pub use manifest::{GenRecord, RunEntry, RunManifest, RunStatus};
pub use runs::{cmd_train, TrainSummary};
pub use verify::{cmd_verify, VerifyReport};

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("language {config}, {split}: {msg}")]
    Gen { config: String, split: String, msg: String },
    #[error("language {0} has no current corpus; run `gen` first")]
    MissingCorpus(String),
    #[error("{0}")]
    Run(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Eval(#[from] wordorder_core::eval::EvalError),
}

impl RunnerError {
    /// Process exit code: 2 for configuration errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunnerError::Config(_) => 2,
            _ => 1,
        }
    }
}

pub fn corpus_dir(out: &Path, config_id: &str) -> PathBuf {
    out.join("corpus").join(config_id)
}

pub fn plan_path(dir: &Path, config_id: &str, regime: Mode) -> PathBuf {
    dir.join(format!("{config_id}.plan_{regime}.json"))
}

/// Run artifact path relative to the output directory, without extension.
pub fn run_stem(config_id: &str, arch: Arch, regime: Mode, seed: u64) -> String {
    format!("runs/{config_id}/{arch}_{regime}_s{seed}")
}

pub fn corpus_seed(master: u64, config_id: &str) -> u64 {
    sub_seed(master, &["corpus", config_id])
}

pub fn validation_seed(master: u64, config_id: &str) -> u64 {
    sub_seed(master, &["validation", config_id])
}

pub fn plan_seed(master: u64, config_id: &str) -> u64 {
    sub_seed(master, &["plan", config_id])
}

pub fn run_seed(master: u64, config_id: &str, arch: Arch, regime: Mode, seed: u64) -> u64 {
    sub_seed(master, &["run", config_id, arch.name(), regime.name(), &seed.to_string()])
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, RunnerError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunnerError::Run(format!("cannot start worker pool: {e}")))
}
