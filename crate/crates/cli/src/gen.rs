use std::fs;
use std::path::Path;
use std::sync::Mutex;

use log::{info, warn};
use rayon::prelude::*;
use serde_json::json;
use wordorder_core::corpus::io::{lexicon_path, write_judgments, write_split};
use wordorder_core::corpus::{build_judgment_pairs, build_splits, build_targeted_split, CorpusError, CorpusSplit, JudgmentKind, SplitName};
use wordorder_core::curriculum::{carve_validation, plan_length_curriculum, plan_original, CurriculumPlan, Mode};
use wordorder_core::language::{Language, WordOrderConfig};
use wordorder_core::seed::sub_seed;

use crate::config::ExperimentConfig;
use crate::manifest::{file_hash, sha256_hex, Artifacts, GenRecord};
use crate::{corpus_dir, corpus_seed, plan_path, plan_seed, pool, validation_seed, RunnerError};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GenSummary {
    pub generated: Vec<String>,
    pub unchanged: Vec<String>,
    /// Files created or replaced; zero on an idempotent rerun.
    pub files_written: usize,
    pub failed: Vec<(String, String)>,
    pub notes: Vec<String>,
}

impl GenSummary {
    pub fn ok(&self) -> bool {
        self.failed.is_empty()
    }
}

/// Hash over everything that determines a language's corpus files.
pub(crate) fn gen_input_hash(cfg: &ExperimentConfig, config_id: &str) -> String {
    let v = json!({
        "schema": crate::SCHEMA,
        "config_id": config_id,
        "seed": cfg.seed,
        "sizes": cfg.sizes,
        "vocab": cfg.vocab,
        "validation_fraction": cfg.training.validation_fraction,
        "budget": cfg.training.budget,
    });
    sha256_hex(v.to_string().as_bytes())
}

/// Builds the lexicon, splits, targeted sets, judgment pairs and curriculum
/// manifests of every selected language.
pub fn cmd_gen(cfg: &ExperimentConfig) -> Result<GenSummary, RunnerError> {
    cfg.prepare()?;
    let ids = cfg.language_ids()?;
    let summary = Mutex::new(GenSummary::default());
    pool(cfg.worker_count())?.install(|| {
        ids.par_iter().for_each(|id| {
            let outcome = gen_language(cfg, id);
            let mut s = summary.lock().unwrap();
            match outcome {
                Ok(Some((written, notes))) => {
                    info!("gen {id}: {written} files written");
                    s.generated.push(id.clone());
                    s.files_written += written;
                    s.notes.extend(notes.into_iter().map(|n| format!("{id}: {n}")));
                }
                Ok(None) => {
                    info!("gen {id}: up to date");
                    s.unchanged.push(id.clone());
                }
                Err(e) => {
                    warn!("gen {id} failed: {e}");
                    s.failed.push((id.clone(), e.to_string()));
                }
            }
        })
    });
    let mut s = summary.into_inner().unwrap();
    s.generated.sort();
    s.unchanged.sort();
    s.failed.sort();
    s.notes.sort();
    Ok(s)
}

fn gen_err(id: &str, split: &str) -> impl Fn(CorpusError) -> RunnerError {
    let (id, split) = (id.to_string(), split.to_string());
    move |e| RunnerError::Gen { config: id.clone(), split: split.clone(), msg: e.to_string() }
}

/// `None` when the existing files are current.
fn gen_language(cfg: &ExperimentConfig, id: &str) -> Result<Option<(usize, Vec<String>)>, RunnerError> {
    let dir = corpus_dir(&cfg.out, id);
    let input_hash = gen_input_hash(cfg, id);
    if GenRecord::read(&dir).is_some_and(|r| r.is_current(&dir, &input_hash)) {
        return Ok(None);
    }
    let staging = cfg.out.join("corpus").join(format!(".{id}.partial"));
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    let notes = build_into(cfg, id, &staging)?;
    let old = GenRecord::read(&dir);
    fs::create_dir_all(&dir)?;
    let mut files = Artifacts::new();
    let mut written = 0;
    let mut entries: Vec<_> = fs::read_dir(&staging)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let name = e.file_name().to_string_lossy().into_owned();
        let hash = file_hash(&e.path()).ok_or_else(|| RunnerError::Run(format!("cannot read {}", e.path().display())))?;
        let dest = dir.join(&name);
        if file_hash(&dest).as_deref() != Some(hash.as_str()) {
            fs::rename(e.path(), &dest)?;
            written += 1;
        }
        files.insert(name, hash);
    }
    fs::remove_dir_all(&staging)?;
    for name in old.iter().flat_map(|r| r.files.keys()).filter(|n| !files.contains_key(*n)) {
        let _ = fs::remove_file(dir.join(name));
    }
    GenRecord { config_id: id.to_string(), input_hash, files, notes: notes.clone() }.write(&dir)?;
    Ok(Some((written, notes)))
}

fn build_into(cfg: &ExperimentConfig, id: &str, dir: &Path) -> Result<Vec<String>, RunnerError> {
    let mut notes = Vec::new();
    let config: WordOrderConfig = id.parse().map_err(|e| RunnerError::Config(format!("{e}")))?;
    let lang = Language::build(config, &cfg.vocab)
        .map_err(|e| RunnerError::Gen { config: id.into(), split: "lexicon".into(), msg: e.to_string() })?;
    fs::create_dir_all(dir)?;
    fs::write(lexicon_path(dir, id), lang.lexicon.to_text())?;
    let seed = corpus_seed(cfg.seed, id);
    let base = build_splits(&lang, &cfg.sizes, seed).map_err(gen_err(id, "train/short/medium/long"))?;
    if base.long_short_of_budget {
        notes.push("fewer long templates than requested".into());
    }
    for name in [SplitName::Train, SplitName::Short, SplitName::Medium, SplitName::Long] {
        write_split(dir, base.get(name).expect("base split")).map_err(gen_err(id, name.name()))?;
    }
    for name in [SplitName::Recursive, SplitName::Embedded] {
        match build_targeted_split(&lang, name, cfg.sizes.targeted, seed) {
            Ok(split) => {
                write_split(dir, &split).map_err(gen_err(id, name.name()))?;
            }
            Err(CorpusError::Unsatisfiable { .. }) => notes.push(format!("{name} construction not derivable")),
            Err(e) => return Err(gen_err(id, name.name())(e)),
        }
    }
    let g = lang.grammar().map_err(|e| gen_err(id, "judgment")(e.into()))?;
    for kind in JudgmentKind::ALL {
        let label = format!("judgment_{kind}");
        let jseed = sub_seed(seed, &["judgment", kind.name()]);
        let set = build_judgment_pairs(&g, &base.medium, kind, cfg.sizes.judgment, jseed).map_err(gen_err(id, &label))?;
        if set.short_of_target {
            notes.push(format!("{label}: {} of {} pairs", set.pairs.len(), cfg.sizes.judgment));
        }
        write_judgments(dir, id, &set, jseed).map_err(gen_err(id, &label))?;
    }
    let (rest, _) = carve(cfg, id, &base.train);
    for (regime, plan) in build_plans(cfg, id, &rest)? {
        fs::write(plan_path(dir, id, regime), plan.to_manifest())?;
    }
    Ok(notes)
}

/// Training remainder and validation split.
pub(crate) fn carve(cfg: &ExperimentConfig, id: &str, train: &CorpusSplit) -> (CorpusSplit, CorpusSplit) {
    carve_validation(train, cfg.training.validation_fraction, validation_seed(cfg.seed, id))
}

/// Both regimes' plans over the post-carve training split.
pub(crate) fn build_plans(cfg: &ExperimentConfig, id: &str, rest: &CorpusSplit) -> Result<Vec<(Mode, CurriculumPlan)>, RunnerError> {
    let pseed = plan_seed(cfg.seed, id);
    let budget = cfg.training.budget.unwrap_or(rest.len());
    let cl = plan_length_curriculum(rest, budget, pseed)
        .map_err(|e| RunnerError::Gen { config: id.into(), split: "curriculum".into(), msg: e.to_string() })?;
    Ok(vec![(Mode::Curriculum, cl), (Mode::Original, plan_original(rest, pseed))])
}
