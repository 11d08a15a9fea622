use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::language::BaseOrder;

use super::metrics::{
    accuracy_typology_correlation, group_means, typological_alignment, FreqTable, PplVector, TaPoints, LANGUAGE_COUNT,
};
use super::stats::{mean_sd, TaResult};

/// Per-base-order mean perplexity of one model, regime and split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub model: String,
    pub regime: String,
    pub split: String,
    /// In [`BaseOrder::ALL`] order; `None` when no language of that order was scored.
    pub group_means: Vec<Option<f64>>,
    pub ta: Option<TaResult>,
    pub ta_base_orders: Option<TaResult>,
    pub languages: usize,
    pub seeds: usize,
    pub complete: bool,
}

pub fn aggregate_tables(vectors: &[PplVector], freq: &FreqTable) -> Vec<GroupRow> {
    vectors
        .iter()
        .map(|v| {
            let means = group_means(&v.values).unwrap_or_default();
            GroupRow {
                model: v.model.clone(),
                regime: v.regime.clone(),
                split: v.split.clone(),
                group_means: BaseOrder::ALL.iter().map(|o| means.get(o).copied()).collect(),
                ta: typological_alignment(v, freq, TaPoints::Configs).ok(),
                ta_base_orders: typological_alignment(v, freq, TaPoints::BaseOrders).ok(),
                languages: v.values.len(),
                seeds: v.seed_count,
                complete: v.is_complete() && means.len() == 6,
            }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

fn ta_cells(t: &Option<TaResult>) -> String {
    match t {
        Some(t) => format!("{:.4},{:.6},{}", t.coefficient, t.p_value, t.significant()),
        None => ",,".into(),
    }
}

pub const GROUP_HEADER: &str =
    "model,regime,split,SOV,OSV,SVO,OVS,VSO,VOS,TA,TA_p,TA_significant,TA6,TA6_p,TA6_significant,languages,seeds,complete";

/// CSV with one row per vector and a closing natural-language frequency row.
pub fn group_table_csv(rows: &[GroupRow], freq: &FreqTable) -> String {
    let mut s = String::from(GROUP_HEADER);
    s.push('\n');
    for r in rows {
        let means: Vec<String> = r.group_means.iter().map(|m| opt(*m)).collect();
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.model,
            r.regime,
            r.split,
            means.join(","),
            ta_cells(&r.ta),
            ta_cells(&r.ta_base_orders),
            r.languages,
            r.seeds,
            r.complete
        )
        .unwrap();
    }
    let nl: Vec<String> = BaseOrder::ALL.iter().map(|o| freq.get(*o).to_string()).collect();
    writeln!(s, "NL,,,{},,,,,,,,,", nl.join(",")).unwrap();
    s
}

/// Inputs for one row of the targeted-set and judgment table.
#[derive(Debug, Clone, Default)]
pub struct AnalysisInput {
    pub model: String,
    pub regime: String,
    pub recursive: Option<PplVector>,
    pub embedded: Option<PplVector>,
    /// Judgment accuracy (0..100) per language, averaged over seeds.
    pub case_accuracy: BTreeMap<String, f64>,
    pub verb_accuracy: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRow {
    pub model: String,
    pub regime: String,
    pub recursive_ta: Option<TaResult>,
    pub embedded_ta: Option<TaResult>,
    pub case_accuracy: Option<(f64, f64)>,
    pub case_corr: Option<TaResult>,
    pub verb_accuracy: Option<(f64, f64)>,
    pub verb_corr: Option<TaResult>,
    /// Human-readable notes on missing or partial inputs.
    pub flags: Vec<String>,
}

pub fn analysis_table(inputs: &[AnalysisInput], freq: &FreqTable) -> Vec<AnalysisRow> {
    inputs
        .iter()
        .map(|a| {
            let mut flags = Vec::new();
            let mut ta = |name: &str, v: &Option<PplVector>| match v {
                None => {
                    flags.push(format!("{name}:missing"));
                    None
                }
                Some(v) => {
                    if !v.is_complete() {
                        flags.push(format!("{name}:{}/{LANGUAGE_COUNT}", v.values.len()));
                    }
                    typological_alignment(v, freq, TaPoints::Configs).ok()
                }
            };
            let recursive_ta = ta("recursive", &a.recursive);
            let embedded_ta = ta("embedded", &a.embedded);
            let mut acc = |name: &str, m: &BTreeMap<String, f64>| {
                if m.len() != LANGUAGE_COUNT {
                    flags.push(format!("{name}:{}/{LANGUAGE_COUNT}", m.len()));
                }
                let xs: Vec<f64> = m.values().copied().collect();
                (mean_sd(&xs), accuracy_typology_correlation(m, freq, TaPoints::Configs).ok())
            };
            let (case_accuracy, case_corr) = acc("case", &a.case_accuracy);
            let (verb_accuracy, verb_corr) = acc("verb", &a.verb_accuracy);
            AnalysisRow {
                model: a.model.clone(),
                regime: a.regime.clone(),
                recursive_ta,
                embedded_ta,
                case_accuracy,
                case_corr,
                verb_accuracy,
                verb_corr,
                flags,
            }
        })
        .collect()
}

pub const ANALYSIS_HEADER: &str = "model,regime,recursive_TA,recursive_p,recursive_significant,embedded_TA,embedded_p,embedded_significant,\
case_acc_mean,case_acc_sd,case_corr,case_corr_p,case_corr_significant,\
verb_acc_mean,verb_acc_sd,verb_corr,verb_corr_p,verb_corr_significant,flags";

pub fn analysis_table_csv(rows: &[AnalysisRow]) -> String {
    let mut s = String::from(ANALYSIS_HEADER);
    s.push('\n');
    let ms = |m: &Option<(f64, f64)>| m.map(|(a, b)| format!("{a:.4},{b:.4}")).unwrap_or_else(|| ",".into());
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.model,
            r.regime,
            ta_cells(&r.recursive_ta),
            ta_cells(&r.embedded_ta),
            ms(&r.case_accuracy),
            ta_cells(&r.case_corr),
            ms(&r.verb_accuracy),
            ta_cells(&r.verb_corr),
            r.flags.join(";")
        )
        .unwrap();
    }
    s
}
