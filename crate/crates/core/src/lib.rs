//! Word-order learnability experiments with categorial-grammar artificial
//! languages: grammar and parser, language configurations, corpus
//! construction, length curricula, tiny neural language models and the
//! evaluation metrics that tie them to word-order typology.

pub mod grammar;
pub mod language;
pub mod corpus;
pub mod seed;
pub mod curriculum;
pub mod nn;
pub mod eval;
