use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tape::{Tape, Var};
use super::tensor::Mat;
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Rnn,
    Lstm,
    Transformer,
}

impl Arch {
    pub const ALL: [Arch; 3] = [Arch::Rnn, Arch::Lstm, Arch::Transformer];

    pub fn name(self) -> &'static str {
        match self {
            Arch::Rnn => "rnn",
            Arch::Lstm => "lstm",
            Arch::Transformer => "transformer",
        }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Arch::ALL.iter().copied().find(|a| a.name() == s).ok_or_else(|| format!("unknown architecture `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub arch: Arch,
    pub embed_dim: usize,
    /// Recurrent state size, or the feed-forward width for transformers.
    pub hidden_dim: usize,
    pub layers: usize,
    pub heads: usize,
    pub dropout: f64,
    pub attn_dropout: f64,
    pub tied: bool,
    pub vocab_size: usize,
    pub window_len: usize,
}

impl ModelSpec {
    pub fn default_for(arch: Arch, vocab_size: usize) -> Self {
        let base = ModelSpec {
            arch,
            embed_dim: 128,
            hidden_dim: 512,
            layers: 2,
            heads: 1,
            dropout: 0.1,
            attn_dropout: 0.0,
            tied: true,
            vocab_size,
            window_len: 128,
        };
        match arch {
            Arch::Transformer => ModelSpec { heads: 2, dropout: 0.3, attn_dropout: 0.1, ..base },
            Arch::Lstm => base,
            Arch::Rnn => ModelSpec { embed_dim: 64, hidden_dim: 64, ..base },
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: &str| Err(NnError::BadSpec(m.to_string()));
        if self.embed_dim == 0 || self.hidden_dim == 0 || self.layers == 0 || self.vocab_size == 0 {
            return bad("dimensions, layers and vocabulary must be positive");
        }
        if self.window_len < 2 {
            return bad("window length must be at least 2");
        }
        if !(0.0..1.0).contains(&self.dropout) || !(0.0..1.0).contains(&self.attn_dropout) {
            return bad("dropout rates must lie in [0, 1)");
        }
        if self.arch == Arch::Transformer && (self.heads == 0 || !self.embed_dim.is_multiple_of(self.heads)) {
            return Err(NnError::BadSpec(format!("{} heads do not divide embedding size {}", self.heads, self.embed_dim)));
        }
        Ok(())
    }

    /// Recurrent models project back to the embedding size before the tied
    /// output layer when the two sizes differ.
    fn needs_projection(&self) -> bool {
        self.arch != Arch::Transformer && self.hidden_dim != self.embed_dim
    }

    /// Names and shapes of every parameter, in storage order.
    pub fn param_shapes(&self) -> Vec<(String, (usize, usize))> {
        let (v, e, h) = (self.vocab_size, self.embed_dim, self.hidden_dim);
        let mut out = vec![("embed".to_string(), (v, e))];
        match self.arch {
            Arch::Rnn | Arch::Lstm => {
                let (tag, gates) = if self.arch == Arch::Rnn { ("rnn", 1) } else { ("lstm", 4) };
                for l in 0..self.layers {
                    let input = if l == 0 { e } else { h };
                    out.push((format!("{tag}.{l}.w_ih"), (input, gates * h)));
                    out.push((format!("{tag}.{l}.w_hh"), (h, gates * h)));
                    out.push((format!("{tag}.{l}.b"), (1, gates * h)));
                }
                if self.needs_projection() {
                    out.push(("proj.w".into(), (h, e)));
                    out.push(("proj.b".into(), (1, e)));
                }
            }
            Arch::Transformer => {
                out.push(("pos".into(), (self.window_len, e)));
                for l in 0..self.layers {
                    for m in ["q", "k", "v", "o"] {
                        out.push((format!("tf.{l}.w{m}"), (e, e)));
                        out.push((format!("tf.{l}.b{m}"), (1, e)));
                    }
                    out.push((format!("tf.{l}.ln1.g"), (1, e)));
                    out.push((format!("tf.{l}.ln1.b"), (1, e)));
                    out.push((format!("tf.{l}.w1"), (e, h)));
                    out.push((format!("tf.{l}.b1"), (1, h)));
                    out.push((format!("tf.{l}.w2"), (h, e)));
                    out.push((format!("tf.{l}.b2"), (1, e)));
                    out.push((format!("tf.{l}.ln2.g"), (1, e)));
                    out.push((format!("tf.{l}.ln2.b"), (1, e)));
                }
            }
        }
        if !self.tied {
            out.push(("out.w".into(), (v, e)));
        }
        out.push(("out.b".into(), (1, v)));
        out
    }

    pub fn param_count(&self) -> usize {
        self.param_shapes().iter().map(|(_, (r, c))| r * c).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub names: Vec<String>,
    pub mats: Vec<Mat>,
}

impl Params {
    pub fn count(&self) -> usize {
        self.mats.iter().map(Mat::len).sum()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, name: &str) -> Option<&Mat> {
        self.index(name).map(|i| &self.mats[i])
    }

    pub fn zeros_like(&self) -> Vec<Mat> {
        self.mats.iter().map(|m| Mat::zeros(m.rows, m.cols)).collect()
    }
}

/// Deterministic initialisation: weight matrices uniform in
/// `±1/sqrt(fan_in)`, embeddings with standard deviation `1/sqrt(dim)`,
/// layer-norm gains one and every bias zero.
pub fn init_params(spec: &ModelSpec, seed: u64) -> Result<Params, NnError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut names = Vec::new();
    let mut mats = Vec::new();
    for (name, (r, c)) in spec.param_shapes() {
        let is_bias = r == 1;
        let m = if name.ends_with(".g") {
            Mat::from_vec(r, c, vec![1.0; c])
        } else if is_bias {
            Mat::zeros(r, c)
        } else {
            let bound = if name == "embed" || name == "pos" || name == "out.w" {
                3f64.sqrt() / (c as f64).sqrt()
            } else {
                1.0 / (r as f64).sqrt()
            };
            Mat::from_vec(r, c, (0..r * c).map(|_| rng.gen_range(-bound..bound)).collect())
        };
        names.push(name);
        mats.push(m);
    }
    Ok(Params { names, mats })
}

fn dropout_mask(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<f64> {
    let keep = 1.0 / (1.0 - p);
    (0..n).map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep }).collect()
}

/// A parameter set bound to a fresh tape.
struct Bound<'a> {
    params: &'a Params,
    vars: Vec<Option<Var>>,
}

impl<'a> Bound<'a> {
    fn new(params: &'a Params) -> Self {
        Bound { params, vars: vec![None; params.mats.len()] }
    }

    fn var(&mut self, tape: &mut Tape, name: &str) -> Var {
        let i = self.params.index(name).unwrap_or_else(|| panic!("missing parameter `{name}`"));
        *self.vars[i].get_or_insert_with(|| tape.param(i, &self.params.mats[i]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LanguageModel {
    pub spec: ModelSpec,
    pub params: Params,
}

impl LanguageModel {
    pub fn new(spec: ModelSpec, seed: u64) -> Result<Self, NnError> {
        let params = init_params(&spec, seed)?;
        Ok(LanguageModel { spec, params })
    }

    /// Sets the embedding and output bias to zero, so every prediction is
    /// uniform over the vocabulary.
    pub fn zero_output_layer(&mut self) {
        for name in ["embed", "out.w", "out.b"] {
            if let Some(i) = self.params.index(name) {
                self.params.mats[i].data.fill(0.0);
            }
        }
    }

    fn check_batch(&self, inputs: &[&[u32]]) -> Result<usize, NnError> {
        let len = inputs.first().map_or(0, |s| s.len());
        if len == 0 {
            return Err(NnError::EmptyBatch);
        }
        if len > self.spec.window_len {
            return Err(NnError::TooLong { len, window: self.spec.window_len });
        }
        for s in inputs {
            if s.len() != len {
                return Err(NnError::Ragged);
            }
            if let Some(&id) = s.iter().find(|&&id| id as usize >= self.spec.vocab_size) {
                return Err(NnError::TokenOutOfRange { id, vocab: self.spec.vocab_size });
            }
        }
        Ok(len)
    }

    /// Logits for every input position, rows ordered sequence-major
    /// (`b * len + t`). Dropout is applied only when `rng` is given.
    fn logits(
        &self,
        tape: &mut Tape,
        p: &mut Bound<'_>,
        inputs: &[&[u32]],
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Var, NnError> {
        let len = self.check_batch(inputs)?;
        let h = match self.spec.arch {
            Arch::Rnn | Arch::Lstm => self.recurrent(tape, p, inputs, len, rng),
            Arch::Transformer => self.transformer(tape, p, inputs, len, rng),
        };
        let out_w = if self.spec.tied { p.var(tape, "embed") } else { p.var(tape, "out.w") };
        let logits = tape.matmul_bt(h, out_w);
        let b = p.var(tape, "out.b");
        Ok(tape.add_row(logits, b))
    }

    fn recurrent(&self, tape: &mut Tape, p: &mut Bound<'_>, inputs: &[&[u32]], len: usize, mut rng: Option<&mut ChaCha8Rng>) -> Var {
        let spec = &self.spec;
        let (batch, hd) = (inputs.len(), spec.hidden_dim);
        let lstm = spec.arch == Arch::Lstm;
        let tag = if lstm { "lstm" } else { "rnn" };
        let ids: Vec<u32> = (0..len).flat_map(|t| inputs.iter().map(move |s| s[t])).collect();
        let embed = p.var(tape, "embed");
        let mut x = tape.gather(embed, &ids);
        let mut drop = |tape: &mut Tape, v: Var| match rng.as_deref_mut() {
            Some(r) if spec.dropout > 0.0 => {
                let m = dropout_mask(r, tape.value(v).len(), spec.dropout);
                tape.mask(v, m)
            }
            _ => v,
        };
        x = drop(tape, x);
        for l in 0..spec.layers {
            let w_ih = p.var(tape, &format!("{tag}.{l}.w_ih"));
            let w_hh = p.var(tape, &format!("{tag}.{l}.w_hh"));
            let bias = p.var(tape, &format!("{tag}.{l}.b"));
            let xw = tape.matmul(x, w_ih);
            let xw = tape.add_row(xw, bias);
            let mut hprev: Option<Var> = None;
            let mut cprev: Option<Var> = None;
            let mut outs = Vec::with_capacity(len);
            for t in 0..len {
                let mut pre = tape.slice_rows(xw, t * batch, batch);
                if let Some(hp) = hprev {
                    let r = tape.matmul(hp, w_hh);
                    pre = tape.add(pre, r);
                }
                let hn = if lstm {
                    let gi = tape.slice_cols(pre, 0, hd);
                    let gf = tape.slice_cols(pre, hd, hd);
                    let gg = tape.slice_cols(pre, 2 * hd, hd);
                    let go = tape.slice_cols(pre, 3 * hd, hd);
                    let i = tape.sigmoid(gi);
                    let g = tape.tanh(gg);
                    let o = tape.sigmoid(go);
                    let mut c = tape.mul(i, g);
                    if let Some(cp) = cprev {
                        let f = tape.sigmoid(gf);
                        let fc = tape.mul(f, cp);
                        c = tape.add(c, fc);
                    }
                    cprev = Some(c);
                    let tc = tape.tanh(c);
                    tape.mul(o, tc)
                } else {
                    tape.tanh(pre)
                };
                hprev = Some(hn);
                outs.push(hn);
            }
            x = tape.concat_rows(&outs);
            x = drop(tape, x);
        }
        if spec.needs_projection() {
            let w = p.var(tape, "proj.w");
            let b = p.var(tape, "proj.b");
            let y = tape.matmul(x, w);
            x = tape.add_row(y, b);
        }
        // time-major to sequence-major
        let order: Vec<u32> = (0..batch).flat_map(|b| (0..len).map(move |t| (t * batch + b) as u32)).collect();
        tape.gather(x, &order)
    }

    fn transformer(&self, tape: &mut Tape, p: &mut Bound<'_>, inputs: &[&[u32]], len: usize, mut rng: Option<&mut ChaCha8Rng>) -> Var {
        let spec = &self.spec;
        let batch = inputs.len();
        let ids: Vec<u32> = inputs.iter().flat_map(|s| s.iter().copied()).collect();
        let positions: Vec<u32> = (0..batch).flat_map(|_| 0..len as u32).collect();
        let embed = p.var(tape, "embed");
        let pos = p.var(tape, "pos");
        let e = tape.gather(embed, &ids);
        let e = tape.scale(e, (spec.embed_dim as f64).sqrt());
        let pe = tape.gather(pos, &positions);
        let mut x = tape.add(e, pe);
        let drop = |tape: &mut Tape, v: Var, rng: Option<&mut ChaCha8Rng>| match rng {
            Some(r) if spec.dropout > 0.0 => {
                let m = dropout_mask(r, tape.value(v).len(), spec.dropout);
                tape.mask(v, m)
            }
            _ => v,
        };
        x = drop(tape, x, rng.as_deref_mut());
        for l in 0..spec.layers {
            let proj = |tape: &mut Tape, p: &mut Bound<'_>, x: Var, m: &str| {
                let w = p.var(tape, &format!("tf.{l}.w{m}"));
                let b = p.var(tape, &format!("tf.{l}.b{m}"));
                let y = tape.matmul(x, w);
                tape.add_row(y, b)
            };
            let q = proj(tape, p, x, "q");
            let k = proj(tape, p, x, "k");
            let v = proj(tape, p, x, "v");
            let a = match rng.as_deref_mut() {
                Some(r) if spec.attn_dropout > 0.0 => {
                    let pd = spec.attn_dropout;
                    let mut f = |n: usize| dropout_mask(r, n, pd);
                    tape.causal_attention(q, k, v, batch, len, spec.heads, Some(&mut f))
                }
                _ => tape.causal_attention(q, k, v, batch, len, spec.heads, None),
            };
            let a = proj(tape, p, a, "o");
            let a = drop(tape, a, rng.as_deref_mut());
            let r = tape.add(x, a);
            let (g1, b1) = (p.var(tape, &format!("tf.{l}.ln1.g")), p.var(tape, &format!("tf.{l}.ln1.b")));
            x = tape.layer_norm(r, g1, b1);
            let w1 = p.var(tape, &format!("tf.{l}.w1"));
            let bb1 = p.var(tape, &format!("tf.{l}.b1"));
            let w2 = p.var(tape, &format!("tf.{l}.w2"));
            let bb2 = p.var(tape, &format!("tf.{l}.b2"));
            let f = tape.matmul(x, w1);
            let f = tape.add_row(f, bb1);
            let f = tape.relu(f);
            let f = tape.matmul(f, w2);
            let f = tape.add_row(f, bb2);
            let f = drop(tape, f, rng.as_deref_mut());
            let r = tape.add(x, f);
            let (g2, b2) = (p.var(tape, &format!("tf.{l}.ln2.g")), p.var(tape, &format!("tf.{l}.ln2.b")));
            x = tape.layer_norm(r, g2, b2);
        }
        x
    }

    /// Mean next-token NLL over windows: each window predicts its tokens
    /// `1..` from the tokens before them. Recurrent state starts at zero in
    /// every window.
    pub fn window_loss(&self, windows: &[&[u32]], rng: Option<&mut ChaCha8Rng>) -> Result<f64, NnError> {
        let mut tape = Tape::new();
        let loss = self.window_graph(&mut tape, windows, rng)?;
        Ok(tape.value(loss).data[0])
    }

    /// [`LanguageModel::window_loss`] together with its parameter gradients.
    pub fn window_loss_grad(&self, windows: &[&[u32]], rng: Option<&mut ChaCha8Rng>) -> Result<(f64, Vec<Mat>), NnError> {
        let mut tape = Tape::new();
        let loss = self.window_graph(&mut tape, windows, rng)?;
        let mut grads = self.params.zeros_like();
        tape.backward(loss, &mut grads);
        Ok((tape.value(loss).data[0], grads))
    }

    fn window_graph(&self, tape: &mut Tape, windows: &[&[u32]], rng: Option<&mut ChaCha8Rng>) -> Result<Var, NnError> {
        if windows.iter().any(|w| w.len() < 2) {
            return Err(NnError::TooShort);
        }
        let inputs: Vec<&[u32]> = windows.iter().map(|w| &w[..w.len() - 1]).collect();
        let targets: Vec<u32> = windows.iter().flat_map(|w| w[1..].iter().copied()).collect();
        let mut p = Bound::new(&self.params);
        let logits = self.logits(tape, &mut p, &inputs, rng)?;
        Ok(tape.softmax_xent(logits, &targets))
    }

    /// Per-position NLL of `targets` given `inputs` in evaluation mode. All
    /// sequences must share one length.
    pub fn token_nll(&self, inputs: &[&[u32]], targets: &[&[u32]]) -> Result<Vec<Vec<f64>>, NnError> {
        if inputs.len() != targets.len() || inputs.iter().zip(targets).any(|(a, b)| a.len() != b.len()) {
            return Err(NnError::Ragged);
        }
        self.check_batch(targets)?;
        let mut tape = Tape::new();
        let mut p = Bound::new(&self.params);
        let logits = self.logits(&mut tape, &mut p, inputs, None)?;
        let l = tape.value(logits);
        let len = inputs[0].len();
        Ok(targets
            .iter()
            .enumerate()
            .map(|(b, ts)| {
                ts.iter()
                    .enumerate()
                    .map(|(t, &y)| {
                        let row = l.row(b * len + t);
                        log_sum_exp(row) - row[y as usize]
                    })
                    .collect()
            })
            .collect())
    }
}

pub fn log_sum_exp(row: &[f64]) -> f64 {
    let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    mx + row.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}
