use serde::{Deserialize, Serialize};

use super::tensor::Mat;

/// Linear warmup followed by inverse square-root decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub warmup_updates: u64,
    pub warmup_init_lr: f64,
    pub peak_lr: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { warmup_updates: 400, warmup_init_lr: 1e-7, peak_lr: 5e-4 }
    }
}

impl Schedule {
    pub fn lr_at(&self, step: u64) -> f64 {
        let w = self.warmup_updates;
        if step < w {
            self.warmup_init_lr + (self.peak_lr - self.warmup_init_lr) * step as f64 / w as f64
        } else if w == 0 {
            self.peak_lr / (step.max(1) as f64).sqrt()
        } else {
            self.peak_lr * (w as f64 / step as f64).sqrt()
        }
    }
}

pub fn lr_at(schedule: &Schedule, step: u64) -> f64 {
    schedule.lr_at(step)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    /// Global gradient-norm clip; zero disables clipping.
    pub clip_norm: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig { beta1: 0.9, beta2: 0.98, eps: 1e-8, weight_decay: 0.01, clip_norm: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub config: AdamWConfig,
    pub m: Vec<Mat>,
    pub v: Vec<Mat>,
    /// Updates applied so far.
    pub step: u64,
}

impl OptimizerState {
    pub fn new(config: AdamWConfig, params: &[Mat]) -> Self {
        let zeros = || params.iter().map(|p| Mat::zeros(p.rows, p.cols)).collect();
        OptimizerState { config, m: zeros(), v: zeros(), step: 0 }
    }

    /// One AdamW update with learning rate `lr` and decoupled weight decay.
    pub fn update(&mut self, params: &mut [Mat], grads: &[Mat], lr: f64) {
        let c = self.config;
        let mut scale = 1.0;
        if c.clip_norm > 0.0 {
            let norm = grads.iter().map(Mat::sum_sq).sum::<f64>().sqrt();
            if norm > c.clip_norm {
                scale = c.clip_norm / norm;
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.data.len() {
                let gi = g.data[i] * scale;
                m.data[i] = c.beta1 * m.data[i] + (1.0 - c.beta1) * gi;
                v.data[i] = c.beta2 * v.data[i] + (1.0 - c.beta2) * gi * gi;
                let mh = m.data[i] / bc1;
                let vh = v.data[i] / bc2;
                p.data[i] -= lr * (mh / (vh.sqrt() + c.eps) + c.weight_decay * p.data[i]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_anchor_points() {
        let s = Schedule::default();
        assert_eq!(s.lr_at(0), 1e-7);
        assert!((s.lr_at(400) - 5e-4).abs() < 1e-18);
        assert!((s.lr_at(1600) - 2.5e-4).abs() < 1e-18);
        assert!((s.lr_at(399) - 5e-4).abs() < 2e-6);
    }

    #[test]
    fn first_step_moves_each_weight_by_about_lr() {
        let mut p = vec![Mat::from_vec(1, 2, vec![1.0, -1.0])];
        let g = vec![Mat::from_vec(1, 2, vec![0.3, -2.0])];
        let mut opt = OptimizerState::new(AdamWConfig { weight_decay: 0.0, ..Default::default() }, &p);
        opt.update(&mut p, &g, 0.1);
        assert!((p[0].data[0] - 0.9).abs() < 1e-6);
        assert!((p[0].data[1] + 0.9).abs() < 1e-6);
        assert_eq!(opt.step, 1);
    }

    #[test]
    fn zero_gradient_only_decays() {
        let mut p = vec![Mat::from_vec(1, 1, vec![2.0])];
        let g = vec![Mat::zeros(1, 1)];
        let mut opt = OptimizerState::new(AdamWConfig::default(), &p);
        opt.update(&mut p, &g, 0.5);
        assert!((p[0].data[0] - (2.0 - 0.5 * 0.01 * 2.0)).abs() < 1e-12);
    }
}
