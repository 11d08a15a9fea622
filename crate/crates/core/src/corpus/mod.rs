//! Templates, sentence splits, targeted sets and judgment pairs.

mod diagnostics;
pub mod io;
mod judgment;
mod splits;
mod targeted;
mod template;

pub use diagnostics::{split_diagnostics, template_diagnostics, Diagnostics};
pub use judgment::{build_judgment_pairs, JudgmentKind, JudgmentPair, JudgmentSet};
pub use splits::{
    build_splits, build_splits_from_bank, even_counts, BaseSplits, CorpusSplit, SentenceRecord, SplitName, SplitSizes,
    TemplateBank,
};
pub use targeted::{build_targeted, build_targeted_split, embedded_template, recursive_template, TargetedSets};
pub use template::{
    combine_templates, enumerate_templates, extend_templates, ExtendedTemplates, Slot, SlotInventory, Template,
    TemplateOrigin, DEFAULT_CANDIDATE_CAP, LONG_LENGTHS,
};

use crate::grammar::GrammarError;
use crate::language::LanguageError;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("more than {cap} template candidates at length {length}")]
    CandidateCap { length: usize, cap: usize },
    #[error("lexicon has no {0} slot")]
    MissingSlot(&'static str),
    #[error("language {config} has no valid template of length {length}")]
    NoTemplates { config: String, length: usize },
    #[error("language {config}: template {template} cannot yield {wanted} distinct sentences (about {capacity} exist)")]
    Exhausted { config: String, template: String, wanted: usize, capacity: f64 },
    #[error("language {config} cannot derive the {construction} construction")]
    Unsatisfiable { config: String, construction: &'static str },
    #[error("template {0} does not derive a sentence")]
    InvalidTemplate(String),
    #[error("{path}: {msg}")]
    Format { path: std::path::PathBuf, msg: String },
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Language(#[from] LanguageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
