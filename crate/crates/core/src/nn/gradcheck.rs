use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{Arch, LanguageModel, ModelSpec};
use super::NnError;

#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub probes: Vec<Probe>,
    pub max_rel_error: f64,
}

/// Downsized two-layer spec with 8-wide embeddings and no dropout.
pub fn toy_spec(arch: Arch) -> ModelSpec {
    let base = ModelSpec::default_for(arch, 13);
    ModelSpec {
        embed_dim: 8,
        hidden_dim: if arch == Arch::Rnn { 8 } else { 12 },
        layers: 2,
        heads: 1,
        dropout: 0.0,
        attn_dropout: 0.0,
        window_len: 7,
        ..base
    }
}

/// Compares backpropagated gradients with central differences at `probes`
/// randomly chosen parameter entries.
pub fn grad_check(spec: &ModelSpec, seed: u64, probes: usize) -> Result<GradCheckReport, NnError> {
    let mut model = LanguageModel::new(spec.clone(), seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    // lift every bias and gain off its initial constant so their gradients are generic
    for m in &mut model.params.mats {
        if m.rows == 1 {
            for x in &mut m.data {
                *x += rng.gen_range(-0.2..0.2);
            }
        }
    }
    let windows: Vec<Vec<u32>> =
        (0..3).map(|_| (0..spec.window_len).map(|_| rng.gen_range(0..spec.vocab_size as u32)).collect()).collect();
    let refs: Vec<&[u32]> = windows.iter().map(Vec::as_slice).collect();
    let (_, grads) = model.window_loss_grad(&refs, None)?;
    let h = 1e-5;
    let mut out = Vec::with_capacity(probes);
    for _ in 0..probes {
        let p = rng.gen_range(0..model.params.mats.len());
        let i = rng.gen_range(0..model.params.mats[p].len());
        let orig = model.params.mats[p].data[i];
        model.params.mats[p].data[i] = orig + h;
        let up = model.window_loss(&refs, None)?;
        model.params.mats[p].data[i] = orig - h;
        let down = model.window_loss(&refs, None)?;
        model.params.mats[p].data[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let analytic = grads[p].data[i];
        let rel_error = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
        out.push(Probe { param: model.params.names[p].clone(), index: i, analytic, numeric, rel_error });
    }
    let max_rel_error = out.iter().map(|p| p.rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport { probes: out, max_rel_error })
}
