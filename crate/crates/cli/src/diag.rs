use std::path::PathBuf;

use wordorder_core::corpus::io::read_split;
use wordorder_core::corpus::{
    enumerate_templates, split_diagnostics, template_diagnostics, SlotInventory, SplitName, DEFAULT_CANDIDATE_CAP,
};

use crate::config::ExperimentConfig;
use crate::manifest::write_atomic;
use crate::runs::{current_record, language};
use crate::{corpus_dir, RunnerError};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagSummary {
    /// Relative to the output directory.
    pub files: Vec<PathBuf>,
}

/// Per language, category and rule counts over all templates of lengths
/// 3 to 10 (`diag/{config}.templates.csv`) and, when a current corpus
/// exists, over the templates its training split uses (`diag/{config}.train.csv`).
pub fn cmd_diag(cfg: &ExperimentConfig) -> Result<DiagSummary, RunnerError> {
    cfg.prepare()?;
    let mut out = DiagSummary::default();
    for id in cfg.language_ids()? {
        let lang = language(cfg, &id)?;
        let gerr = |split: &str, msg: String| RunnerError::Gen { config: id.clone(), split: split.into(), msg };
        let g = lang.grammar().map_err(|e| gerr("templates", e.to_string()))?;
        let inv = SlotInventory::new(&g);
        let templates =
            enumerate_templates(&g, &inv, 3..=10, DEFAULT_CANDIDATE_CAP).map_err(|e| gerr("templates", e.to_string()))?;
        let d = template_diagnostics(&g, &inv, &templates).map_err(|e| gerr("templates", e.to_string()))?;
        let rel = format!("diag/{id}.templates.csv");
        write_atomic(&cfg.out.join(&rel), d.to_csv().as_bytes())?;
        out.files.push(rel.into());
        if current_record(cfg, &id).is_some() {
            let train = read_split(&corpus_dir(&cfg.out, &id), &id, SplitName::Train).map_err(|e| gerr("train", e.to_string()))?;
            let d = split_diagnostics(&g, &inv, &train).map_err(|e| gerr("train", e.to_string()))?;
            let rel = format!("diag/{id}.train.csv");
            write_atomic(&cfg.out.join(&rel), d.to_csv().as_bytes())?;
            out.files.push(rel.into());
        }
    }
    Ok(out)
}
