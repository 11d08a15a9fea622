use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::Mutex;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wordorder_core::corpus::io::{read_judgments, read_sentences, split_path};
use wordorder_core::corpus::{JudgmentKind, SplitName};
use wordorder_core::eval::{
    aggregate_tables, analysis_table, analysis_table_csv, correlation_heatmap_svg, cross_model_correlation,
    group_table_csv, judgment_accuracy, perplexity, ppl_scatter_svg, results_file_name, write_results, AnalysisInput,
    FreqTable, JudgmentStatistic, ModelRuns, PplVector, ResultRow,
};
use wordorder_core::language::{Language, WordOrderConfig};
use wordorder_core::nn::{load_checkpoint, SentenceScorer, UnigramModel};

use crate::config::ExperimentConfig;
use crate::gen::carve;
use crate::manifest::{run_id, write_atomic, RunManifest};
use crate::runs::{current_record, encode, language, run_input_hash};
use crate::{corpus_dir, pool, run_stem, RunnerError};

pub const JUDGMENT_HEADER: &str = "config_id,base_order,seed,accuracy";

/// Label of the unigram baseline in results and tables.
const BASELINE: (&str, &str) = ("unigram", "none");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct JudgmentRow {
    config_id: String,
    base_order: String,
    seed: u64,
    accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub evaluated: Vec<String>,
    /// Runs in the selection without a done, current checkpoint.
    pub missing: Vec<String>,
    /// Notes on partial or skipped aggregates.
    pub flags: Vec<String>,
    /// Written files, relative to the output directory.
    pub files: Vec<PathBuf>,
}

impl EvalSummary {
    pub fn ok(&self) -> bool {
        self.missing.is_empty()
    }
}

struct LangEval {
    lang: Language,
    splits: Vec<(SplitName, Vec<Vec<u32>>)>,
    judgments: Vec<(JudgmentKind, Vec<(Vec<u32>, Vec<u32>)>)>,
    unigram: UnigramModel,
}

fn load_eval(cfg: &ExperimentConfig, id: &str) -> Result<LangEval, RunnerError> {
    let record = current_record(cfg, id).ok_or_else(|| RunnerError::MissingCorpus(id.into()))?;
    let dir = corpus_dir(&cfg.out, id);
    let lang = language(cfg, id)?;
    let corpus = |split: &str, e: wordorder_core::corpus::CorpusError| RunnerError::Gen {
        config: id.into(),
        split: split.into(),
        msg: e.to_string(),
    };
    let mut splits = Vec::new();
    for name in SplitName::EVAL {
        let path = split_path(&dir, id, name);
        if record.files.contains_key(&path.file_name().unwrap().to_string_lossy().into_owned()) {
            let s = read_sentences(&path).map_err(|e| corpus(name.name(), e))?;
            splits.push((name, encode(&lang, &s)?));
        }
    }
    let mut judgments = Vec::new();
    for kind in JudgmentKind::ALL {
        let set = read_judgments(&dir, id, kind).map_err(|e| corpus(kind.name(), e))?;
        let good: Vec<Vec<String>> = set.pairs.iter().map(|p| p.grammatical.tokens.clone()).collect();
        let bad: Vec<Vec<String>> = set.pairs.iter().map(|p| p.ungrammatical.tokens.clone()).collect();
        judgments.push((kind, encode(&lang, &good)?.into_iter().zip(encode(&lang, &bad)?).collect()));
    }
    let train = wordorder_core::corpus::io::read_split(&dir, id, SplitName::Train).map_err(|e| corpus("train", e))?;
    let (rest, _) = carve(cfg, id, &train);
    let toks: Vec<Vec<String>> = rest.records.iter().map(|r| r.tokens.clone()).collect();
    let unigram = UnigramModel::fit(&encode(&lang, &toks)?, lang.vocabulary.eos(), lang.vocabulary.len())
        .map_err(|e| RunnerError::Run(format!("{id}: {e}")))?;
    Ok(LangEval { lang, splits, judgments, unigram })
}

struct Scores {
    ppl: Vec<(SplitName, f64)>,
    judgments: Vec<(JudgmentKind, f64)>,
}

fn score(scorer: &dyn SentenceScorer, data: &LangEval) -> Result<Scores, RunnerError> {
    let eos = data.lang.vocabulary.eos();
    let nn = |e: wordorder_core::nn::NnError| RunnerError::Run(e.to_string());
    let mut ppl = Vec::new();
    for (name, sents) in &data.splits {
        ppl.push((*name, perplexity(scorer, sents, eos).map_err(nn)?));
    }
    let mut judgments = Vec::new();
    for (kind, pairs) in &data.judgments {
        if !pairs.is_empty() {
            judgments.push((*kind, judgment_accuracy(scorer, pairs, eos, JudgmentStatistic::PerToken)?.accuracy));
        }
    }
    Ok(Scores { ppl, judgments })
}

struct RunScores {
    id: String,
    model: String,
    regime: String,
    seed: u64,
    scores: Scores,
}

fn base_order(id: &str) -> String {
    id.parse::<WordOrderConfig>().map(|c| c.base_order().name().to_string()).unwrap_or_default()
}

/// Scores every done run and the unigram baseline, then writes result
/// files, aggregate tables and plots. Missing runs are listed and the
/// aggregates are built from what is available.
pub fn cmd_eval(cfg: &ExperimentConfig) -> Result<EvalSummary, RunnerError> {
    cfg.prepare()?;
    let ids = cfg.language_ids()?;
    let manifest = RunManifest::load(&cfg.out)?;
    let mut summary = EvalSummary::default();
    let mut available = Vec::new();
    for id in &ids {
        let record = current_record(cfg, id);
        for &arch in &cfg.archs {
            for &regime in &cfg.regimes {
                for &seed in &cfg.seeds {
                    let rid = run_id(id, arch.name(), regime.name(), seed);
                    match &record {
                        Some(r) if manifest.is_done(&cfg.out, &rid, &run_input_hash(cfg, r, id, arch, regime, seed)) => {
                            available.push((id.clone(), arch, regime, seed))
                        }
                        _ => summary.missing.push(rid),
                    }
                }
            }
        }
    }
    let workers = pool(cfg.worker_count())?;
    let langs: BTreeMap<String, LangEval> = workers.install(|| {
        ids.par_iter()
            .filter(|id| current_record(cfg, id).is_some())
            .filter_map(|id| match load_eval(cfg, id) {
                Ok(d) => Some((id.clone(), d)),
                Err(e) => {
                    warn!("{e}");
                    None
                }
            })
            .collect()
    });
    for id in &ids {
        if !langs.contains_key(id) {
            summary.flags.push(format!("{id}: no corpus"));
        }
    }

    let flags = Mutex::new(Vec::new());
    let mut runs: Vec<RunScores> = workers.install(|| {
        available
            .par_iter()
            .filter_map(|(id, arch, regime, seed)| {
                let rid = run_id(id, arch.name(), regime.name(), *seed);
                let data = langs.get(id)?;
                let path = cfg.out.join(format!("{}.ckpt", run_stem(id, *arch, *regime, *seed)));
                let result = load_checkpoint(&path)
                    .map_err(|e| RunnerError::Run(format!("{}: {e}", path.display())))
                    .and_then(|(model, _)| score(&model, data));
                match result {
                    Ok(scores) => {
                        info!("{rid}: scored");
                        Some(RunScores { id: id.clone(), model: arch.name().into(), regime: regime.name().into(), seed: *seed, scores })
                    }
                    Err(e) => {
                        flags.lock().unwrap().push(format!("{rid}: {e}"));
                        None
                    }
                }
            })
            .collect()
    });
    summary.flags.extend(flags.into_inner().unwrap());
    let scored: BTreeSet<String> =
        runs.iter().map(|r| run_id(&r.id, &r.model, &r.regime, r.seed)).collect();
    for (id, arch, regime, seed) in &available {
        let rid = run_id(id, arch.name(), regime.name(), *seed);
        if scored.contains(&rid) {
            summary.evaluated.push(rid);
        } else {
            summary.missing.push(rid);
        }
    }
    let baseline: Vec<RunScores> = workers.install(|| {
        langs
            .par_iter()
            .filter_map(|(id, d)| {
                let scores = score(&d.unigram, d).ok()?;
                Some(RunScores { id: id.clone(), model: BASELINE.0.into(), regime: BASELINE.1.into(), seed: 0, scores })
            })
            .collect()
    });
    runs.extend(baseline);
    runs.sort_by(|a, b| (&a.model, &a.regime, &a.id, a.seed).cmp(&(&b.model, &b.regime, &b.id, b.seed)));

    aggregate(cfg, &runs, &mut summary)?;
    summary.missing.sort();
    summary.evaluated.sort();
    summary.flags.sort();
    let path = cfg.out.join("eval_summary.json");
    write_atomic(&path, (serde_json::to_string_pretty(&summary)? + "\n").as_bytes())?;
    Ok(summary)
}

fn model_labels(cfg: &ExperimentConfig) -> Vec<(String, String)> {
    let mut v: Vec<(String, String)> =
        cfg.archs.iter().flat_map(|a| cfg.regimes.iter().map(move |r| (a.name().to_string(), r.name().to_string()))).collect();
    v.push((BASELINE.0.into(), BASELINE.1.into()));
    v
}

fn aggregate(cfg: &ExperimentConfig, runs: &[RunScores], summary: &mut EvalSummary) -> Result<(), RunnerError> {
    let freq = FreqTable::default();
    let mut files = Vec::new();
    let mut emit = |rel: String, text: String| -> Result<(), RunnerError> {
        write_atomic(&cfg.out.join(&rel), text.as_bytes())?;
        files.push(PathBuf::from(rel));
        Ok(())
    };
    let mut emitted = Vec::new();
    let labels = model_labels(cfg);
    let mut vectors = Vec::new();
    let mut by_split: BTreeMap<SplitName, Vec<ModelRuns>> = BTreeMap::new();
    let mut analysis = Vec::new();
    for (model, regime) in &labels {
        let mine: Vec<&RunScores> = runs.iter().filter(|r| &r.model == model && &r.regime == regime).collect();
        if mine.is_empty() {
            continue;
        }
        let mut input = AnalysisInput { model: model.clone(), regime: regime.clone(), ..Default::default() };
        for split in SplitName::EVAL {
            let rows: Vec<ResultRow> = mine
                .iter()
                .filter_map(|r| {
                    r.scores.ppl.iter().find(|(n, _)| *n == split).map(|(_, p)| ResultRow {
                        config_id: r.id.clone(),
                        base_order: base_order(&r.id),
                        seed: r.seed,
                        ppl: *p,
                    })
                })
                .collect();
            if rows.is_empty() {
                continue;
            }
            let rel = format!("results/{}", results_file_name(model, regime, split.name()));
            write_results(&cfg.out.join(&rel), &rows)?;
            emitted.push(PathBuf::from(rel));
            let v = PplVector::from_rows(model, regime, split.name(), &rows);
            match split {
                SplitName::Recursive => input.recursive = Some(v.clone()),
                SplitName::Embedded => input.embedded = Some(v.clone()),
                _ => {}
            }
            if (model.as_str(), regime.as_str()) != BASELINE {
                let mut per_seed: BTreeMap<u64, BTreeMap<String, f64>> = BTreeMap::new();
                for r in &rows {
                    per_seed.entry(r.seed).or_default().insert(r.config_id.clone(), r.ppl);
                }
                by_split
                    .entry(split)
                    .or_default()
                    .push(ModelRuns { label: v.label(), per_seed: per_seed.into_values().collect() });
            }
            vectors.push(v);
        }
        for kind in JudgmentKind::ALL {
            let rows: Vec<JudgmentRow> = mine
                .iter()
                .filter_map(|r| {
                    r.scores.judgments.iter().find(|(k, _)| *k == kind).map(|(_, a)| JudgmentRow {
                        config_id: r.id.clone(),
                        base_order: base_order(&r.id),
                        seed: r.seed,
                        accuracy: *a,
                    })
                })
                .collect();
            if rows.is_empty() {
                continue;
            }
            let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
            let mut text = String::from(JUDGMENT_HEADER);
            text.push('\n');
            for r in &rows {
                text.push_str(&format!("{},{},{},{}\n", r.config_id, r.base_order, r.seed, r.accuracy));
                let e = sums.entry(r.config_id.clone()).or_insert((0.0, 0));
                e.0 += r.accuracy;
                e.1 += 1;
            }
            emit(format!("results/{model}_{regime}_judgment_{kind}.csv"), text)?;
            let means = sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect();
            match kind {
                JudgmentKind::Case => input.case_accuracy = means,
                JudgmentKind::Verb => input.verb_accuracy = means,
            }
        }
        analysis.push(input);
    }

    emit("tables/ppl_by_base_order.csv".into(), group_table_csv(&aggregate_tables(&vectors, &freq), &freq))?;
    let rows = analysis_table(&analysis, &freq);
    for r in &rows {
        summary.flags.extend(r.flags.iter().map(|f| format!("{}_{} {f}", r.model, r.regime)));
    }
    emit("tables/targeted_and_judgments.csv".into(), analysis_table_csv(&rows))?;
    for v in &vectors {
        emit(format!("plots/ppl_{}_{}_{}.svg", v.model, v.regime, v.split), ppl_scatter_svg(v, &freq))?;
    }
    for (split, models) in by_split {
        let models = common_languages(models);
        match cross_model_correlation(&models) {
            Ok(m) => {
                emit(format!("tables/correlation_{split}.csv"), m.to_csv())?;
                emit(format!("plots/correlation_{split}.svg"), correlation_heatmap_svg(&m))?;
            }
            Err(e) => summary.flags.push(format!("correlation {split}: {e}")),
        }
    }
    emitted.extend(files);
    emitted.sort();
    summary.files = emitted;
    Ok(())
}

/// Restricts every seed vector to the languages all of them share.
fn common_languages(models: Vec<ModelRuns>) -> Vec<ModelRuns> {
    let mut common: Option<BTreeSet<String>> = None;
    for v in models.iter().flat_map(|m| &m.per_seed) {
        let keys: BTreeSet<String> = v.keys().cloned().collect();
        common = Some(match common {
            None => keys,
            Some(c) => c.intersection(&keys).cloned().collect(),
        });
    }
    let common = common.unwrap_or_default();
    models
        .into_iter()
        .map(|m| ModelRuns {
            label: m.label,
            per_seed: m
                .per_seed
                .into_iter()
                .map(|v| v.into_iter().filter(|(k, _)| common.contains(k)).collect())
                .collect(),
        })
        .collect()
}
