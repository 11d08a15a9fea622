use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curriculum::{assemble_stage_stream, CurriculumPlan, EpochPolicy};
use crate::seed::sub_seed;

use super::model::LanguageModel;
use super::optim::{AdamWConfig, OptimizerState, Schedule};
use super::score::perplexity;
use super::NnError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Windows per update; tokens per batch are this times the window length.
    pub batch_windows: usize,
    pub schedule: Schedule,
    pub optimizer: AdamWConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { batch_windows: 16, schedule: Schedule::default(), optimizer: AdamWConfig::default(), seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based, counted over the whole run.
    pub epoch: usize,
    pub stage: usize,
    pub train_ppl: f64,
    pub val_ppl: f64,
    /// Learning rate of the last update in the epoch.
    pub lr: f64,
    /// Optimizer step count at the end of the epoch.
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub index: usize,
    pub policy: EpochPolicy,
    pub epochs: usize,
    pub start_step: u64,
    pub end_step: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// The last stage ran out of patience.
    EarlyStopped,
    /// The last stage hit its epoch cap.
    EpochCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub stages: Vec<StageSummary>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_val_ppl: f64,
    pub stop_reason: StopReason,
}

impl TrainReport {
    pub const CSV_HEADER: &'static str = "epoch,stage,train_ppl,val_ppl,lr,step";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for e in &self.epochs {
            writeln!(s, "{},{},{:.6},{:.6},{:e},{}", e.epoch, e.stage, e.train_ppl, e.val_ppl, e.lr, e.step).unwrap();
        }
        s
    }

    pub fn final_val_ppl(&self) -> f64 {
        self.best_val_ppl
    }
}

/// Trains `model` through every stage of `plan`. `train` is the encoded
/// training split the plan indexes; `val` is scored after every epoch.
/// Optimizer and schedule state run on across stages, and the parameters of
/// the best validation epoch of the final stage are restored at the end.
pub fn train(
    model: &mut LanguageModel,
    plan: &CurriculumPlan,
    train: &[Vec<u32>],
    val: &[Vec<u32>],
    eos: u32,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainReport, NnError> {
    if plan.stages.is_empty() {
        return Err(NnError::EmptyPlan);
    }
    if val.is_empty() {
        return Err(NnError::EmptyBatch);
    }
    let window = model.spec.window_len;
    let mut opt = OptimizerState::new(cfg.optimizer, &model.params.mats);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, &["dropout"]));
    let mut epochs = Vec::new();
    let mut stages = Vec::new();
    let mut best: Option<(f64, usize, Vec<super::tensor::Mat>)> = None;
    let mut stop_reason = StopReason::EpochCap;
    let last = plan.stages.len() - 1;
    for (si, stage) in plan.stages.iter().enumerate() {
        let start_step = opt.step;
        let (max_epochs, patience) = match stage.epoch_policy {
            EpochPolicy::Fixed { epochs } => (epochs, None),
            EpochPolicy::EarlyStop { patience, max_epochs } => (max_epochs, Some(patience)),
        };
        let mut stage_best = f64::INFINITY;
        let mut stale = 0;
        let mut ran = 0;
        for e in 0..max_epochs {
            let shuffle = sub_seed(cfg.seed, &["epoch", &stage.index.to_string(), &e.to_string()]);
            let windows = assemble_stage_stream(stage, train, eos, window, shuffle)?;
            if windows.is_empty() {
                return Err(NnError::NoWindows { stage: stage.index });
            }
            let mut loss_sum = 0.0;
            let mut lr = 0.0;
            for batch in windows.chunks(cfg.batch_windows) {
                let refs: Vec<&[u32]> = batch.iter().map(Vec::as_slice).collect();
                let (loss, grads) = model.window_loss_grad(&refs, Some(&mut dropout_rng))?;
                if !loss.is_finite() {
                    return Err(NnError::Diverged { stage: stage.index, epoch: e + 1, step: opt.step });
                }
                loss_sum += loss * batch.len() as f64;
                lr = cfg.schedule.lr_at(opt.step);
                opt.update(&mut model.params.mats, &grads, lr);
            }
            let train_ppl = (loss_sum / windows.len() as f64).exp();
            let val_ppl = perplexity(model, val, eos)?;
            if !val_ppl.is_finite() {
                return Err(NnError::Diverged { stage: stage.index, epoch: e + 1, step: opt.step });
            }
            let record = EpochRecord { epoch: epochs.len() + 1, stage: stage.index, train_ppl, val_ppl, lr, step: opt.step };
            on_epoch(&record);
            epochs.push(record);
            ran += 1;
            if si == last && best.as_ref().is_none_or(|(b, _, _)| val_ppl < *b) {
                best = Some((val_ppl, epochs.len(), model.params.mats.clone()));
            }
            if val_ppl < stage_best {
                stage_best = val_ppl;
                stale = 0;
            } else {
                stale += 1;
            }
            if patience.is_some_and(|p| stale >= p) {
                if si == last {
                    stop_reason = StopReason::EarlyStopped;
                }
                break;
            }
        }
        stages.push(StageSummary { index: stage.index, policy: stage.epoch_policy, epochs: ran, start_step, end_step: opt.step });
    }
    let (best_val_ppl, best_epoch, mats) = best.ok_or(NnError::EmptyPlan)?;
    model.params.mats = mats;
    Ok(TrainReport { epochs, stages, best_epoch, best_val_ppl, stop_reason })
}
