use std::collections::BTreeMap;
use std::fs;
use std::sync::{Arc, Mutex, OnceLock};

use log::{debug, info, warn};
use rayon::prelude::*;
use serde_json::json;
use wordorder_core::corpus::io::read_split;
use wordorder_core::corpus::SplitName;
use wordorder_core::curriculum::{CurriculumPlan, Mode};
use wordorder_core::language::{Language, WordOrderConfig};
use wordorder_core::nn::{save_checkpoint, train, Arch, LanguageModel};

use crate::config::ExperimentConfig;
use crate::gen::{build_plans, carve, gen_input_hash};
use crate::manifest::{file_hash, run_id, sha256_hex, Artifacts, GenRecord, RunEntry, RunManifest, RunStatus};
use crate::{corpus_dir, plan_path, pool, run_seed, run_stem, RunnerError};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainSummary {
    /// Every run in the selection.
    pub runs: Vec<String>,
    pub trained: Vec<String>,
    /// Already done with matching inputs and artifacts.
    pub skipped: Vec<String>,
    pub failed: Vec<(String, String)>,
}

impl TrainSummary {
    pub fn ok(&self) -> bool {
        self.failed.is_empty()
    }
}

/// One language's encoded training data and plans, shared read-only by its runs.
pub(crate) struct LanguageData {
    pub lang: Language,
    pub rest: Vec<Vec<u32>>,
    pub val: Vec<Vec<u32>>,
    pub plans: Vec<(Mode, CurriculumPlan)>,
}

impl LanguageData {
    fn plan(&self, regime: Mode) -> &CurriculumPlan {
        &self.plans.iter().find(|(m, _)| *m == regime).expect("both regimes planned").1
    }
}

/// The language's gen record if its corpus matches the configuration.
pub(crate) fn current_record(cfg: &ExperimentConfig, id: &str) -> Option<GenRecord> {
    let dir = corpus_dir(&cfg.out, id);
    GenRecord::read(&dir).filter(|r| r.is_current(&dir, &gen_input_hash(cfg, id)))
}

pub(crate) fn language(cfg: &ExperimentConfig, id: &str) -> Result<Language, RunnerError> {
    let config: WordOrderConfig = id.parse().map_err(|e| RunnerError::Config(format!("{e}")))?;
    Language::build(config, &cfg.vocab).map_err(|e| RunnerError::Run(format!("{id}: {e}")))
}

pub(crate) fn encode(lang: &Language, tokens: &[Vec<String>]) -> Result<Vec<Vec<u32>>, RunnerError> {
    tokens
        .iter()
        .map(|t| lang.vocabulary.encode(t).map_err(|e| RunnerError::Run(format!("{}: {e}", lang.id()))))
        .collect()
}

fn load_language(cfg: &ExperimentConfig, id: &str) -> Result<LanguageData, RunnerError> {
    if current_record(cfg, id).is_none() {
        return Err(RunnerError::MissingCorpus(id.into()));
    }
    let dir = corpus_dir(&cfg.out, id);
    let lang = language(cfg, id)?;
    let train_split = read_split(&dir, id, SplitName::Train)
        .map_err(|e| RunnerError::Gen { config: id.into(), split: "train".into(), msg: e.to_string() })?;
    let (rest, val) = carve(cfg, id, &train_split);
    let plans = build_plans(cfg, id, &rest)?;
    for (regime, plan) in &plans {
        let path = plan_path(&dir, id, *regime);
        if fs::read_to_string(&path).ok().as_deref() != Some(plan.to_manifest().as_str()) {
            return Err(RunnerError::Run(format!("{} does not match the rebuilt plan; rerun `gen`", path.display())));
        }
    }
    let toks = |s: &wordorder_core::corpus::CorpusSplit| s.records.iter().map(|r| r.tokens.clone()).collect::<Vec<_>>();
    Ok(LanguageData { rest: encode(&lang, &toks(&rest))?, val: encode(&lang, &toks(&val))?, lang, plans })
}

/// Hash over the corpus files, plan and hyperparameters that determine a run.
pub(crate) fn run_input_hash(
    cfg: &ExperimentConfig,
    record: &GenRecord,
    id: &str,
    arch: Arch,
    regime: Mode,
    seed: u64,
) -> String {
    let file = |name: String| record.files.get(&name).cloned().unwrap_or_default();
    let plan_name = plan_path(std::path::Path::new(""), id, regime).to_string_lossy().into_owned();
    let v = json!({
        "train": file(format!("{id}.train.txt")),
        "plan": file(plan_name),
        "validation_fraction": cfg.training.validation_fraction,
        "spec": cfg.model_spec(arch),
        "train_config": cfg.train_config(run_seed(cfg.seed, id, arch, regime, seed)),
    });
    sha256_hex(v.to_string().as_bytes())
}

#[derive(Debug, Clone)]
struct RunKey {
    id: String,
    arch: Arch,
    regime: Mode,
    seed: u64,
}

impl RunKey {
    fn run_id(&self) -> String {
        run_id(&self.id, self.arch.name(), self.regime.name(), self.seed)
    }
}

/// Trains every (language, architecture, regime, seed) run that is not
/// already done, updating the manifest after each one.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainSummary, RunnerError> {
    cfg.prepare()?;
    let ids = cfg.language_ids()?;
    let mut manifest = RunManifest::load(&cfg.out)?;
    let mut summary = TrainSummary::default();
    let mut pending = Vec::new();
    for id in &ids {
        let record = current_record(cfg, id);
        for &arch in &cfg.archs {
            for &regime in &cfg.regimes {
                for &seed in &cfg.seeds {
                    let key = RunKey { id: id.clone(), arch, regime, seed };
                    let rid = key.run_id();
                    summary.runs.push(rid.clone());
                    let mut entry = RunEntry {
                        config_id: id.clone(),
                        arch: arch.name().into(),
                        regime: regime.name().into(),
                        seed,
                        status: RunStatus::Pending,
                        input_hash: String::new(),
                        artifacts: Artifacts::new(),
                        error: None,
                    };
                    match &record {
                        None => {
                            let msg = RunnerError::MissingCorpus(id.clone()).to_string();
                            entry.status = RunStatus::Failed;
                            entry.error = Some(msg.clone());
                            summary.failed.push((rid.clone(), msg));
                        }
                        Some(r) => {
                            let h = run_input_hash(cfg, r, id, arch, regime, seed);
                            if manifest.is_done(&cfg.out, &rid, &h) {
                                summary.skipped.push(rid);
                                continue;
                            }
                            entry.input_hash = h;
                            pending.push(key);
                        }
                    }
                    manifest.runs.insert(rid, entry);
                }
            }
        }
    }
    manifest.save(&cfg.out)?;
    info!("{} runs: {} done, {} to train", summary.runs.len(), summary.skipped.len(), pending.len());

    let cache: BTreeMap<String, OnceLock<Result<Arc<LanguageData>, String>>> =
        pending.iter().map(|k| (k.id.clone(), OnceLock::new())).collect();
    let manifest = Mutex::new(manifest);
    let outcomes = Mutex::new(Vec::new());
    pool(cfg.worker_count())?.install(|| {
        pending.par_iter().for_each(|key| {
            let rid = key.run_id();
            let data = cache[&key.id].get_or_init(|| load_language(cfg, &key.id).map(Arc::new).map_err(|e| e.to_string()));
            let result = match data {
                Ok(d) => execute(cfg, d, key).map_err(|e| e.to_string()),
                Err(e) => Err(e.clone()),
            };
            let mut m = manifest.lock().unwrap();
            let entry = m.runs.get_mut(&rid).expect("entry inserted above");
            match &result {
                Ok(artifacts) => {
                    info!("{rid}: done");
                    entry.status = RunStatus::Done;
                    entry.artifacts = artifacts.clone();
                    entry.error = None;
                }
                Err(e) => {
                    warn!("{rid}: {e}");
                    entry.status = RunStatus::Failed;
                    entry.error = Some(e.clone());
                }
            }
            if let Err(e) = m.save(&cfg.out) {
                warn!("cannot save manifest: {e}");
            }
            outcomes.lock().unwrap().push((rid, result));
        })
    });
    for (rid, r) in outcomes.into_inner().unwrap() {
        match r {
            Ok(_) => summary.trained.push(rid),
            Err(e) => summary.failed.push((rid, e)),
        }
    }
    manifest.into_inner().unwrap().save(&cfg.out)?;
    summary.trained.sort();
    summary.skipped.sort();
    summary.failed.sort();
    Ok(summary)
}

fn execute(cfg: &ExperimentConfig, data: &LanguageData, key: &RunKey) -> Result<Artifacts, RunnerError> {
    let rseed = run_seed(cfg.seed, &key.id, key.arch, key.regime, key.seed);
    let rid = key.run_id();
    let nn = |e: wordorder_core::nn::NnError| RunnerError::Run(format!("{rid}: {e}"));
    let mut model = LanguageModel::new(cfg.model_spec(key.arch), rseed).map_err(nn)?;
    let eos = data.lang.vocabulary.eos();
    let report = train(&mut model, data.plan(key.regime), &data.rest, &data.val, eos, &cfg.train_config(rseed), |e| {
        debug!("{rid} stage {} epoch {}: train {:.3} val {:.3}", e.stage, e.epoch, e.train_ppl, e.val_ppl)
    })
    .map_err(nn)?;
    let stem = run_stem(&key.id, key.arch, key.regime, key.seed);
    let meta = json!({
        "config_id": key.id,
        "arch": key.arch.name(),
        "regime": key.regime.name(),
        "seed": key.seed,
        "run_seed": rseed,
        "best_epoch": report.best_epoch,
        "best_val_ppl": report.best_val_ppl,
    });
    let mut artifacts = Artifacts::new();
    let ckpt = format!("{stem}.ckpt");
    save_checkpoint(&cfg.out.join(&ckpt), &model, meta).map_err(nn)?;
    let csv = format!("{stem}.report.csv");
    fs::write(cfg.out.join(&csv), report.to_csv())?;
    let js = format!("{stem}.report.json");
    fs::write(cfg.out.join(&js), serde_json::to_string_pretty(&report)? + "\n")?;
    for rel in [ckpt, csv, js] {
        let h = file_hash(&cfg.out.join(&rel)).ok_or_else(|| RunnerError::Run(format!("cannot read back {rel}")))?;
        artifacts.insert(rel, h);
    }
    Ok(artifacts)
}
