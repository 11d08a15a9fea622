//! Perplexity, typological alignment, grammaticality judgments, cross-model
//! correlations and the aggregate tables and plots built from them.

mod metrics;
mod plots;
mod stats;
mod tables;

pub use metrics::{
    accuracy_typology_correlation, cross_model_correlation, group_means, judgment_accuracy, read_results,
    results_file_name, typological_alignment, write_results, CorrMatrix, FreqTable, JudgmentOutcome, JudgmentStatistic,
    ModelRuns, PplVector, ResultRow, TaPoints, LANGUAGE_COUNT,
};
pub use plots::{correlation_heatmap_svg, ppl_scatter_svg};
pub use stats::{correlation_test, mean_sd, pearson, pearson_p_value, TaResult, SIGNIFICANCE};
pub use tables::{
    aggregate_tables, analysis_table, analysis_table_csv, group_table_csv, AnalysisInput, AnalysisRow, GroupRow,
    ANALYSIS_HEADER, GROUP_HEADER,
};

pub use crate::nn::perplexity;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("correlation undefined: one coordinate has zero variance")]
    UndefinedCorrelation,
    #[error("need more points for a correlation, got {0}")]
    TooFewPoints(usize),
    #[error("mismatched inputs: {0}")]
    Mismatch(String),
    #[error("unknown language `{0}`")]
    UnknownConfig(String),
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
