//! Experiment configuration: a TOML file, optionally overridden from the
//! command line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wordorder_core::corpus::SplitSizes;
use wordorder_core::curriculum::Mode;
use wordorder_core::language::{enumerate_configs, VocabSpec, WordOrderConfig};
use wordorder_core::nn::{AdamWConfig, Arch, ModelSpec, Schedule, TrainConfig};

use crate::RunnerError;

pub const SCHEMA: &str = "wordorder-experiment/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LanguageSelection {
    /// The literal string `"all"`.
    Keyword(String),
    List(Vec<String>),
}

impl Default for LanguageSelection {
    fn default() -> Self {
        LanguageSelection::Keyword("all".into())
    }
}

impl LanguageSelection {
    /// Parses `all` or a comma-separated id list.
    pub fn parse(s: &str) -> Self {
        if s.trim() == "all" {
            LanguageSelection::Keyword("all".into())
        } else {
            LanguageSelection::List(s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect())
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOverrides {
    pub embed_dim: Option<usize>,
    pub hidden_dim: Option<usize>,
    pub layers: Option<usize>,
    pub heads: Option<usize>,
    pub dropout: Option<f64>,
    pub attn_dropout: Option<f64>,
    pub tied: Option<bool>,
    pub window_len: Option<usize>,
}

impl ModelOverrides {
    fn apply(&self, mut s: ModelSpec) -> ModelSpec {
        if let Some(v) = self.embed_dim {
            s.embed_dim = v;
        }
        if let Some(v) = self.hidden_dim {
            s.hidden_dim = v;
        }
        if let Some(v) = self.layers {
            s.layers = v;
        }
        if let Some(v) = self.heads {
            s.heads = v;
        }
        if let Some(v) = self.dropout {
            s.dropout = v;
        }
        if let Some(v) = self.attn_dropout {
            s.attn_dropout = v;
        }
        if let Some(v) = self.tied {
            s.tied = v;
        }
        if let Some(v) = self.window_len {
            s.window_len = v;
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSettings {
    pub batch_windows: usize,
    pub warmup_updates: u64,
    pub warmup_init_lr: f64,
    pub peak_lr: f64,
    pub weight_decay: f64,
    pub validation_fraction: f64,
    /// Curriculum budget; defaults to the training split size after the
    /// validation carve.
    pub budget: Option<usize>,
}

impl Default for TrainingSettings {
    fn default() -> Self {
        let s = Schedule::default();
        TrainingSettings {
            batch_windows: 16,
            warmup_updates: s.warmup_updates,
            warmup_init_lr: s.warmup_init_lr,
            peak_lr: s.peak_lr,
            weight_decay: AdamWConfig::default().weight_decay,
            validation_fraction: 0.05,
            budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    pub out: PathBuf,
    /// Master seed for corpora, plans and runs.
    pub seed: u64,
    pub languages: LanguageSelection,
    pub archs: Vec<Arch>,
    pub regimes: Vec<Mode>,
    pub seeds: Vec<u64>,
    /// Worker threads for training and evaluation; 0 uses available parallelism.
    pub workers: usize,
    pub sizes: SplitSizes,
    pub vocab: VocabSpec,
    pub training: TrainingSettings,
    /// Keyed by architecture name.
    pub model: BTreeMap<String, ModelOverrides>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema: SCHEMA.into(),
            out: PathBuf::from("out"),
            seed: 1,
            languages: LanguageSelection::default(),
            archs: Arch::ALL.to_vec(),
            regimes: vec![Mode::Curriculum, Mode::Original],
            seeds: vec![1, 2, 3],
            workers: 0,
            sizes: SplitSizes::default(),
            vocab: VocabSpec::default(),
            training: TrainingSettings::default(),
            model: BTreeMap::new(),
        }
    }
}

/// Command-line values that replace config-file fields when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub languages: Option<String>,
    pub archs: Option<Vec<String>>,
    pub regimes: Option<Vec<String>>,
    pub seeds: Option<Vec<u64>>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunnerError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| RunnerError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, RunnerError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunnerError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            RunnerError::Config(m) => RunnerError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), RunnerError> {
        let bad = |e: String| RunnerError::Config(e);
        if let Some(l) = &o.languages {
            self.languages = LanguageSelection::parse(l);
        }
        if let Some(a) = &o.archs {
            self.archs = a.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(bad)?;
        }
        if let Some(r) = &o.regimes {
            self.regimes = r.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(bad)?;
        }
        if let Some(s) = &o.seeds {
            self.seeds = s.clone();
        }
        if let Some(p) = &o.out {
            self.out = p.clone();
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        Ok(())
    }

    /// Selected languages in enumeration order, or an error naming an unknown id.
    pub fn language_ids(&self) -> Result<Vec<String>, RunnerError> {
        let all: Vec<String> = enumerate_configs().iter().map(WordOrderConfig::id).collect();
        match &self.languages {
            LanguageSelection::Keyword(k) if k == "all" => Ok(all),
            LanguageSelection::Keyword(k) => Err(RunnerError::Config(format!("languages must be \"all\" or a list, got `{k}`"))),
            LanguageSelection::List(ids) => {
                if ids.is_empty() {
                    return Err(RunnerError::Config("no languages selected".into()));
                }
                for id in ids {
                    if !all.contains(id) {
                        return Err(RunnerError::Config(format!("`{id}` is not one of the 96 languages")));
                    }
                }
                Ok(all.into_iter().filter(|a| ids.contains(a)).collect())
            }
        }
    }

    pub fn validate(&self) -> Result<(), RunnerError> {
        let err = |m: String| Err(RunnerError::Config(m));
        if self.schema != SCHEMA {
            return err(format!("unsupported schema `{}` (expected `{SCHEMA}`)", self.schema));
        }
        self.language_ids()?;
        if self.archs.is_empty() {
            return err("no architectures selected".into());
        }
        if self.regimes.is_empty() {
            return err("no regimes selected".into());
        }
        if self.seeds.is_empty() {
            return err("seeds must not be empty".into());
        }
        let mut uniq = self.seeds.clone();
        uniq.sort_unstable();
        uniq.dedup();
        if uniq.len() != self.seeds.len() {
            return err("seeds must be distinct".into());
        }
        for key in self.model.keys() {
            if key.parse::<Arch>().is_err() {
                return err(format!("[model.{key}] does not name an architecture"));
            }
        }
        for a in &self.archs {
            self.model_spec(*a).validate().map_err(|e| RunnerError::Config(format!("model {a}: {e}")))?;
        }
        let t = &self.training;
        if !(0.0..1.0).contains(&t.validation_fraction) || t.validation_fraction == 0.0 {
            return err("validation_fraction must be in (0, 1)".into());
        }
        if t.batch_windows == 0 {
            return err("batch_windows must be positive".into());
        }
        if !(t.peak_lr > 0.0 && t.warmup_init_lr >= 0.0) {
            return err("learning rates must be positive".into());
        }
        if self.sizes.train == 0 {
            return err("sizes.train must be positive".into());
        }
        Ok(())
    }

    /// Validates and makes sure the output directory exists and is writable.
    pub fn prepare(&self) -> Result<(), RunnerError> {
        self.validate()?;
        let probe = self.out.join(".write-probe");
        std::fs::create_dir_all(&self.out)
            .and_then(|_| std::fs::write(&probe, b""))
            .and_then(|_| std::fs::remove_file(&probe))
            .map_err(|e| RunnerError::Config(format!("output directory {} is not writable: {e}", self.out.display())))
    }

    pub fn model_spec(&self, arch: Arch) -> ModelSpec {
        let base = ModelSpec::default_for(arch, self.vocab.target_size);
        match self.model.get(arch.name()) {
            Some(o) => o.apply(base),
            None => base,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        let t = &self.training;
        TrainConfig {
            batch_windows: t.batch_windows,
            schedule: Schedule { warmup_updates: t.warmup_updates, warmup_init_lr: t.warmup_init_lr, peak_lr: t.peak_lr },
            optimizer: AdamWConfig { weight_decay: t.weight_decay, ..AdamWConfig::default() },
            seed,
        }
    }

    pub fn worker_count(&self) -> usize {
        if self.workers > 0 {
            self.workers
        } else {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        }
    }
}
