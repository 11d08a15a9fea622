//! Generalized categorial grammar: categories, the rule inventory, lexicons
//! and a chart parser with per-cell permutation closure.

mod category;
mod chart;
mod lexicon;
mod rules;

pub use category::{Atom, Category, Slash, DEFAULT_MAX_DEPTH};
pub use chart::{is_grammatical, parse, slot_ids, CatId, Derivation, Grammar, ParseLimits};
pub use lexicon::{LexEntry, Lexicon, PosClass};
pub use rules::{apply_binary, apply_permutation, is_coordinable, RuleKind};

#[derive(Debug, thiserror::Error)]
pub enum GrammarError {
    #[error("unknown atomic category `{0}`")]
    UnknownAtom(String),
    #[error("unknown part-of-speech class `{0}`")]
    UnknownPosClass(String),
    #[error("malformed category `{input}` at byte {pos}: {msg}")]
    CategorySyntax { input: String, pos: usize, msg: String },
    #[error("category {category} has depth {depth}, limit is {max}")]
    DepthExceeded { category: String, depth: usize, max: usize },
    #[error("lexicon line {line}: {msg}")]
    LexiconLine { line: usize, msg: String },
    #[error("token `{0}` is not in the lexicon")]
    UnknownToken(String),
    #[error("empty input")]
    EmptyInput,
    #[error("parse limit `{limit}` exceeded (limit {value})")]
    LimitExceeded { limit: &'static str, value: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
