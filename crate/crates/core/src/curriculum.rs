//! Length-based curriculum with replay, the shuffled baseline ordering, and
//! the windowed token streams both are trained on.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusSplit, SplitName};
use crate::seed::sub_seed;

/// Share of each earlier length replayed in later stages.
pub const REPLAY_FRACTION: f64 = 0.05;
pub const CURRICULUM_LENGTHS: [usize; 6] = [3, 4, 5, 6, 7, 8];

#[derive(Debug, thiserror::Error)]
pub enum CurriculumError {
    #[error("training split has no sentences of length {0}")]
    MissingLength(usize),
    #[error("stage {stage} needs {wanted} sentences of length {length}, only {available} exist")]
    PartTooSmall { stage: usize, length: usize, wanted: usize, available: usize },
    #[error("stage {0} is empty")]
    EmptyStage(usize),
    #[error("window length must be positive")]
    ZeroWindow,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Curriculum,
    Original,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Curriculum => "curriculum",
            Mode::Original => "original",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "curriculum" | "cl" => Ok(Mode::Curriculum),
            "original" => Ok(Mode::Original),
            _ => Err(format!("unknown regime `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum EpochPolicy {
    Fixed { epochs: usize },
    EarlyStop { patience: usize, max_epochs: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    /// 1-based.
    pub index: usize,
    pub focal_length: Option<usize>,
    /// length → share of the stage
    pub composition: BTreeMap<usize, f64>,
    /// length → realised sentence count
    pub counts: BTreeMap<usize, usize>,
    pub count: usize,
    pub epoch_policy: EpochPolicy,
    pub seed: u64,
    /// Indices into the training split, sorted.
    #[serde(skip)]
    pub records: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumPlan {
    pub mode: Mode,
    pub budget: usize,
    pub seed: u64,
    pub stages: Vec<Stage>,
}

impl CurriculumPlan {
    pub fn total(&self) -> usize {
        self.stages.iter().map(|s| s.count).sum()
    }

    /// Human-readable JSON manifest (record indices are omitted; they are
    /// reproducible from the seeds).
    pub fn to_manifest(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes") + "\n"
    }

    pub fn write_manifest(&self, path: &Path) -> Result<(), CurriculumError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_manifest())?;
        Ok(())
    }

    pub fn read_manifest(path: &Path) -> Result<Self, CurriculumError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Composition of stage `k` (1-based): 5% for each earlier length, the rest
/// for the focal length `k + 2`.
pub fn stage_composition(k: usize) -> BTreeMap<usize, f64> {
    let focal = k + 2;
    let mut c: BTreeMap<usize, f64> = (3..focal).map(|l| (l, REPLAY_FRACTION)).collect();
    c.insert(focal, 1.0 - REPLAY_FRACTION * (k - 1) as f64);
    c
}

/// Integer counts summing to `total` with every count within one of
/// `share * total` (largest-remainder method, ties to the smaller key).
pub fn apportion(total: usize, composition: &BTreeMap<usize, f64>) -> BTreeMap<usize, usize> {
    let exact: Vec<(usize, f64)> = composition.iter().map(|(&k, &f)| (k, f * total as f64)).collect();
    let mut counts: BTreeMap<usize, usize> = exact.iter().map(|&(k, x)| (k, x.floor() as usize)).collect();
    let assigned: usize = counts.values().sum();
    let mut rema: Vec<(usize, f64)> = exact.iter().map(|&(k, x)| (k, x - x.floor())).collect();
    rema.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite").then(a.0.cmp(&b.0)));
    for &(k, _) in rema.iter().take(total.saturating_sub(assigned)) {
        *counts.get_mut(&k).expect("key exists") += 1;
    }
    counts
}

fn parts(train: &CorpusSplit) -> BTreeMap<usize, Vec<usize>> {
    let mut p: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, r) in train.records.iter().enumerate() {
        p.entry(r.len()).or_default().push(i);
    }
    p
}

/// Six stages with focal lengths 3..8. Stage sizes are `budget / 6`, the
/// last stage also taking the remainder. Each stage draws its sentences
/// without replacement from the per-length parts of `train`.
pub fn plan_length_curriculum(train: &CorpusSplit, budget: usize, seed: u64) -> Result<CurriculumPlan, CurriculumError> {
    let parts = parts(train);
    for l in CURRICULUM_LENGTHS {
        if !parts.contains_key(&l) {
            return Err(CurriculumError::MissingLength(l));
        }
    }
    let per_stage = budget / CURRICULUM_LENGTHS.len();
    let mut stages = Vec::with_capacity(6);
    for (i, &focal) in CURRICULUM_LENGTHS.iter().enumerate() {
        let k = i + 1;
        let count = if k == 6 { budget - per_stage * 5 } else { per_stage };
        let composition = stage_composition(k);
        let counts = apportion(count, &composition);
        let stage_seed = sub_seed(seed, &["stage", &k.to_string()]);
        let mut rng = ChaCha8Rng::seed_from_u64(stage_seed);
        let mut records = Vec::with_capacity(count);
        for (&len, &n) in &counts {
            let part = &parts[&len];
            if n > part.len() {
                return Err(CurriculumError::PartTooSmall { stage: k, length: len, wanted: n, available: part.len() });
            }
            records.extend(part.iter().copied().choose_multiple(&mut rng, n));
        }
        records.sort_unstable();
        let epoch_policy = if k < 6 {
            EpochPolicy::Fixed { epochs: 2 }
        } else {
            EpochPolicy::EarlyStop { patience: 5, max_epochs: 50 }
        };
        stages.push(Stage { index: k, focal_length: Some(focal), composition, counts, count, epoch_policy, seed: stage_seed, records });
    }
    Ok(CurriculumPlan { mode: Mode::Curriculum, budget, seed, stages })
}

/// The whole training split as one early-stopped stage in seeded random order.
pub fn plan_original(train: &CorpusSplit, seed: u64) -> CurriculumPlan {
    let mut records: Vec<usize> = (0..train.len()).collect();
    let stage_seed = sub_seed(seed, &["stage", "1"]);
    records.shuffle(&mut ChaCha8Rng::seed_from_u64(stage_seed));
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for r in &train.records {
        *counts.entry(r.len()).or_insert(0) += 1;
    }
    let n = train.len().max(1) as f64;
    let composition = counts.iter().map(|(&l, &c)| (l, c as f64 / n)).collect();
    let stage = Stage {
        index: 1,
        focal_length: None,
        composition,
        counts,
        count: train.len(),
        epoch_policy: EpochPolicy::EarlyStop { patience: 5, max_epochs: 10 },
        seed: stage_seed,
        records,
    };
    CurriculumPlan { mode: Mode::Original, budget: train.len(), seed, stages: vec![stage] }
}

/// Concatenates sentences, each followed by `eos`, and cuts the stream into
/// windows of exactly `window_len` tokens. The trailing partial window is dropped.
pub fn windows_from_sentences<'a>(
    sentences: impl IntoIterator<Item = &'a [u32]>,
    eos: u32,
    window_len: usize,
) -> Vec<Vec<u32>> {
    let mut stream = Vec::new();
    for s in sentences {
        stream.extend_from_slice(s);
        stream.push(eos);
    }
    stream.chunks_exact(window_len).map(<[u32]>::to_vec).collect()
}

/// Shuffles a stage's sentences with `seed` and chunks them into windows.
/// `encoded` is the token-id form of the training split the stage indexes.
pub fn assemble_stage_stream(
    stage: &Stage,
    encoded: &[Vec<u32>],
    eos: u32,
    window_len: usize,
    seed: u64,
) -> Result<Vec<Vec<u32>>, CurriculumError> {
    if stage.records.is_empty() {
        return Err(CurriculumError::EmptyStage(stage.index));
    }
    if window_len == 0 {
        return Err(CurriculumError::ZeroWindow);
    }
    let mut order = stage.records.clone();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(windows_from_sentences(order.iter().map(|&i| encoded[i].as_slice()), eos, window_len))
}

/// Removes `fraction` of every length bucket of `train` (rounded to nearest)
/// as a validation split.
pub fn carve_validation(train: &CorpusSplit, fraction: f64, seed: u64) -> (CorpusSplit, CorpusSplit) {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, &["validation"]));
    let mut held = vec![false; train.len()];
    for idx in parts(train).values() {
        let k = (idx.len() as f64 * fraction).round() as usize;
        for i in idx.iter().copied().choose_multiple(&mut rng, k) {
            held[i] = true;
        }
    }
    let (mut keep, mut val) = (Vec::new(), Vec::new());
    for (r, h) in train.records.iter().zip(held) {
        if h {
            val.push(r.clone());
        } else {
            keep.push(r.clone());
        }
    }
    let rest = CorpusSplit { name: SplitName::Train, config_id: train.config_id.clone(), seed: train.seed, records: keep };
    let val = CorpusSplit { name: SplitName::Train, config_id: train.config_id.clone(), seed: train.seed, records: val };
    (rest, val)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compositions_follow_the_replay_rule() {
        assert_eq!(stage_composition(1), BTreeMap::from([(3, 1.0)]));
        let s3 = stage_composition(3);
        assert_eq!(s3.len(), 3);
        assert!((s3[&3] - 0.05).abs() < 1e-12 && (s3[&4] - 0.05).abs() < 1e-12 && (s3[&5] - 0.90).abs() < 1e-12);
        let s6 = stage_composition(6);
        assert!((s6[&8] - 0.75).abs() < 1e-12);
        assert!((s6.values().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn apportion_stays_within_one() {
        let c = stage_composition(6);
        let counts = apportion(13_335, &c);
        assert_eq!(counts.values().sum::<usize>(), 13_335);
        for (l, &n) in &counts {
            assert!((n as f64 - c[l] * 13_335.0).abs() < 1.0);
        }
    }

    #[test]
    fn window_arithmetic() {
        let s = [vec![1, 2, 3], vec![4, 5, 6, 7], vec![8, 9, 10, 11, 12]];
        let w = windows_from_sentences(s.iter().map(Vec::as_slice), 0, 8);
        assert_eq!(w, vec![vec![1, 2, 3, 0, 4, 5, 6, 7]]);
    }
}
