use std::fs;

use crate::config::ExperimentConfig;
use crate::manifest::{stale_artifacts, GenRecord, RunManifest, RunStatus};
use crate::RunnerError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub corpora: usize,
    pub done_runs: usize,
    pub problems: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Checks that every generated corpus file and every artifact of a run
/// marked done still exists with its recorded hash.
pub fn cmd_verify(cfg: &ExperimentConfig) -> Result<VerifyReport, RunnerError> {
    cfg.validate()?;
    let mut report = VerifyReport::default();
    let corpus_root = cfg.out.join("corpus");
    if corpus_root.is_dir() {
        let mut dirs: Vec<_> = fs::read_dir(&corpus_root)?.collect::<Result<_, _>>()?;
        dirs.sort_by_key(|d| d.file_name());
        for d in dirs.into_iter().filter(|d| d.path().is_dir()) {
            let name = d.file_name().to_string_lossy().into_owned();
            if name.starts_with('.') {
                report.problems.push(format!("corpus {name}: interrupted generation left behind"));
                continue;
            }
            match GenRecord::read(&d.path()) {
                None => report.problems.push(format!("corpus {name}: no readable gen.json")),
                Some(r) => {
                    report.corpora += 1;
                    for f in stale_artifacts(&d.path(), &r.files) {
                        report.problems.push(format!("corpus {name}: {f} missing or modified"));
                    }
                }
            }
        }
    }
    let manifest = RunManifest::load(&cfg.out)?;
    for (id, e) in &manifest.runs {
        if e.status != RunStatus::Done {
            continue;
        }
        report.done_runs += 1;
        if e.artifacts.is_empty() {
            report.problems.push(format!("run {id}: done without artifacts"));
        }
        for f in stale_artifacts(&cfg.out, &e.artifacts) {
            report.problems.push(format!("run {id}: {f} missing or modified"));
        }
    }
    Ok(report)
}
