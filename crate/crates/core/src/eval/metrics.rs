use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::language::{BaseOrder, WordOrderConfig};
use crate::nn::SentenceScorer;

use super::stats::{correlation_test, pearson, TaResult};
use super::EvalError;

/// Share of natural languages with each dominant base order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreqTable {
    pub probs: BTreeMap<BaseOrder, f64>,
}

impl Default for FreqTable {
    fn default() -> Self {
        let values = [0.54, 0.04, 0.23, 0.01, 0.12, 0.05];
        FreqTable { probs: BaseOrder::ALL.iter().copied().zip(values).collect() }
    }
}

impl FreqTable {
    pub fn get(&self, order: BaseOrder) -> f64 {
        self.probs[&order]
    }

    pub fn for_config(&self, config_id: &str) -> Result<f64, EvalError> {
        let c: WordOrderConfig = config_id.parse().map_err(|_| EvalError::UnknownConfig(config_id.to_string()))?;
        Ok(self.get(c.base_order()))
    }
}

/// One line of a results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub config_id: String,
    pub base_order: String,
    pub seed: u64,
    pub ppl: f64,
}

pub fn results_file_name(model: &str, regime: &str, split: &str) -> String {
    format!("{model}_{regime}_{split}.csv")
}

pub fn write_results(path: &Path, rows: &[ResultRow]) -> Result<(), EvalError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>, EvalError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Seed-averaged perplexity per language for one model, regime and split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PplVector {
    pub model: String,
    pub regime: String,
    pub split: String,
    pub values: BTreeMap<String, f64>,
    pub seed_count: usize,
}

pub const LANGUAGE_COUNT: usize = 96;

impl PplVector {
    pub fn from_rows(model: &str, regime: &str, split: &str, rows: &[ResultRow]) -> Self {
        let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        let mut seeds = BTreeSet::new();
        for r in rows {
            let e = acc.entry(r.config_id.clone()).or_insert((0.0, 0));
            e.0 += r.ppl;
            e.1 += 1;
            seeds.insert(r.seed);
        }
        PplVector {
            model: model.into(),
            regime: regime.into(),
            split: split.into(),
            values: acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect(),
            seed_count: seeds.len(),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.values.len() == LANGUAGE_COUNT
    }

    pub fn label(&self) -> String {
        format!("{}_{}", self.model, self.regime)
    }
}

/// Which points enter the typological correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaPoints {
    /// One point per language, each carrying its base order's frequency.
    Configs,
    /// One point per base order, at the mean over its languages.
    BaseOrders,
}

fn points(values: &BTreeMap<String, f64>, freq: &FreqTable, mode: TaPoints) -> Result<(Vec<f64>, Vec<f64>), EvalError> {
    match mode {
        TaPoints::Configs => {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (id, &v) in values {
                xs.push(v);
                ys.push(freq.for_config(id)?);
            }
            Ok((xs, ys))
        }
        TaPoints::BaseOrders => {
            let means = group_means(values)?;
            Ok(means.iter().map(|(o, &m)| (m, freq.get(*o))).unzip())
        }
    }
}

/// Mean value per base order over the languages present.
pub fn group_means(values: &BTreeMap<String, f64>) -> Result<BTreeMap<BaseOrder, f64>, EvalError> {
    let mut acc: BTreeMap<BaseOrder, (f64, usize)> = BTreeMap::new();
    for (id, &v) in values {
        let c: WordOrderConfig = id.parse().map_err(|_| EvalError::UnknownConfig(id.clone()))?;
        let e = acc.entry(c.base_order()).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    Ok(acc.into_iter().map(|(o, (s, n))| (o, s / n as f64)).collect())
}

/// Pearson correlation between perplexity and base-order frequency, times
/// 100. Negative means commoner orders are easier.
pub fn typological_alignment(ppl: &PplVector, freq: &FreqTable, mode: TaPoints) -> Result<TaResult, EvalError> {
    let (x, y) = points(&ppl.values, freq, mode)?;
    correlation_test(&x, &y, 100.0)
}

/// Pearson correlation between judgment accuracy and base-order frequency on
/// the raw scale. Positive means commoner orders are judged better.
pub fn accuracy_typology_correlation(
    acc_by_config: &BTreeMap<String, f64>,
    freq: &FreqTable,
    mode: TaPoints,
) -> Result<TaResult, EvalError> {
    let (x, y) = points(acc_by_config, freq, mode)?;
    correlation_test(&x, &y, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JudgmentStatistic {
    PerToken,
    Total,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentOutcome {
    /// Percentage of pairs whose grammatical side scores strictly better.
    pub accuracy: f64,
    /// Ungrammatical minus grammatical NLL per pair; positive is correct.
    pub margins: Vec<f64>,
}

/// Scores each `(grammatical, ungrammatical)` pair. Ties count as wrong.
pub fn judgment_accuracy(
    scorer: &dyn SentenceScorer,
    pairs: &[(Vec<u32>, Vec<u32>)],
    eos: u32,
    statistic: JudgmentStatistic,
) -> Result<JudgmentOutcome, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::TooFewPoints(0));
    }
    let sents: Vec<Vec<u32>> = pairs.iter().flat_map(|(g, u)| [g.clone(), u.clone()]).collect();
    let nlls = scorer.token_nlls(&sents, eos)?;
    let stat = |v: &Vec<f64>| {
        let total: f64 = v.iter().sum();
        match statistic {
            JudgmentStatistic::PerToken => total / v.len() as f64,
            JudgmentStatistic::Total => total,
        }
    };
    let margins: Vec<f64> = nlls.chunks(2).map(|c| stat(&c[1]) - stat(&c[0])).collect();
    let correct = margins.iter().filter(|&&m| m > 0.0).count();
    Ok(JudgmentOutcome { accuracy: 100.0 * correct as f64 / pairs.len() as f64, margins })
}

/// Seed-level perplexity vectors of one model and regime.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRuns {
    pub label: String,
    pub per_seed: Vec<BTreeMap<String, f64>>,
}

impl ModelRuns {
    pub fn mean(&self) -> BTreeMap<String, f64> {
        let mut out: BTreeMap<String, f64> = BTreeMap::new();
        for v in &self.per_seed {
            for (k, x) in v {
                *out.entry(k.clone()).or_insert(0.0) += x / self.per_seed.len() as f64;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrMatrix {
    pub labels: Vec<String>,
    /// Row-major; the diagonal holds the mean correlation between seeds.
    pub values: Vec<Vec<f64>>,
}

impl CorrMatrix {
    pub fn to_csv(&self) -> String {
        let mut s = format!("model,{}\n", self.labels.join(","));
        for (l, row) in self.labels.iter().zip(&self.values) {
            let cells: Vec<String> = row.iter().map(|v| if v.is_nan() { String::new() } else { format!("{v:.4}") }).collect();
            s.push_str(&format!("{l},{}\n", cells.join(",")));
        }
        s
    }
}

fn aligned(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> Result<(Vec<f64>, Vec<f64>), EvalError> {
    if !a.keys().eq(b.keys()) {
        return Err(EvalError::Mismatch("vectors cover different languages".into()));
    }
    Ok((a.values().copied().collect(), b.values().copied().collect()))
}

/// Pairwise correlation of seed-averaged vectors; the diagonal is the mean
/// pairwise correlation between a model's seeds (`NaN` with fewer than two).
pub fn cross_model_correlation(runs: &[ModelRuns]) -> Result<CorrMatrix, EvalError> {
    let means: Vec<BTreeMap<String, f64>> = runs.iter().map(ModelRuns::mean).collect();
    let k = runs.len();
    let mut values = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            values[i][j] = if i == j {
                let seeds = &runs[i].per_seed;
                let mut rs = Vec::new();
                for a in 0..seeds.len() {
                    for b in a + 1..seeds.len() {
                        let (x, y) = aligned(&seeds[a], &seeds[b])?;
                        rs.push(pearson(&x, &y)?);
                    }
                }
                if rs.is_empty() {
                    f64::NAN
                } else {
                    rs.iter().sum::<f64>() / rs.len() as f64
                }
            } else {
                let (x, y) = aligned(&means[i], &means[j])?;
                pearson(&x, &y)?
            };
        }
    }
    Ok(CorrMatrix { labels: runs.iter().map(|r| r.label.clone()).collect(), values })
}
