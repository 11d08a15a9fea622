//! Position-by-position language model forward passes written with plain
//! loops over vectors, sharing nothing with the tape implementation.

use wordorder_core::nn::{Arch, LanguageModel};

type V = Vec<f64>;

fn mat<'a>(m: &'a LanguageModel, name: &str) -> (&'a [f64], usize, usize) {
    let x = m.params.get(name).unwrap_or_else(|| panic!("no {name}"));
    (&x.data, x.rows, x.cols)
}

/// `x * W + b` with `W` stored `in x out`.
fn affine(m: &LanguageModel, x: &[f64], w: &str, b: Option<&str>) -> V {
    let (wd, r, c) = mat(m, w);
    assert_eq!(x.len(), r);
    let mut y = match b {
        Some(b) => mat(m, b).0.to_vec(),
        None => vec![0.0; c],
    };
    for i in 0..r {
        for j in 0..c {
            y[j] += x[i] * wd[i * c + j];
        }
    }
    y
}

fn add(a: &[f64], b: &[f64]) -> V {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn embed_row(m: &LanguageModel, id: u32) -> V {
    let (e, _, c) = mat(m, "embed");
    e[id as usize * c..(id as usize + 1) * c].to_vec()
}

fn layer_norm(x: &[f64], g: &[f64], b: &[f64]) -> V {
    let n = x.len() as f64;
    let mu = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
    x.iter().enumerate().map(|(i, v)| (v - mu) / (var + 1e-5).sqrt() * g[i] + b[i]).collect()
}

fn top_states(m: &LanguageModel, ids: &[u32]) -> Vec<V> {
    let s = &m.spec;
    match s.arch {
        Arch::Rnn | Arch::Lstm => {
            let lstm = s.arch == Arch::Lstm;
            let tag = if lstm { "lstm" } else { "rnn" };
            let mut xs: Vec<V> = ids.iter().map(|&id| embed_row(m, id)).collect();
            for l in 0..s.layers {
                let mut h = vec![0.0; s.hidden_dim];
                let mut c = vec![0.0; s.hidden_dim];
                let mut outs = Vec::new();
                for x in &xs {
                    let pre = add(
                        &affine(m, x, &format!("{tag}.{l}.w_ih"), Some(&format!("{tag}.{l}.b"))),
                        &affine(m, &h, &format!("{tag}.{l}.w_hh"), None),
                    );
                    if lstm {
                        let n = s.hidden_dim;
                        for k in 0..n {
                            let (i, f, g, o) = (sig(pre[k]), sig(pre[n + k]), pre[2 * n + k].tanh(), sig(pre[3 * n + k]));
                            c[k] = f * c[k] + i * g;
                            h[k] = o * c[k].tanh();
                        }
                    } else {
                        h = pre.iter().map(|v| v.tanh()).collect();
                    }
                    outs.push(h.clone());
                }
                xs = outs;
            }
            if s.hidden_dim != s.embed_dim {
                xs = xs.iter().map(|x| affine(m, x, "proj.w", Some("proj.b"))).collect();
            }
            xs
        }
        Arch::Transformer => {
            let d = s.embed_dim;
            let dh = d / s.heads;
            let (pos, _, _) = mat(m, "pos");
            let mut xs: Vec<V> = ids
                .iter()
                .enumerate()
                .map(|(t, &id)| embed_row(m, id).iter().enumerate().map(|(j, e)| e * (d as f64).sqrt() + pos[t * d + j]).collect())
                .collect();
            for l in 0..s.layers {
                let p = |n: &str| format!("tf.{l}.{n}");
                let q: Vec<V> = xs.iter().map(|x| affine(m, x, &p("wq"), Some(&p("bq")))).collect();
                let k: Vec<V> = xs.iter().map(|x| affine(m, x, &p("wk"), Some(&p("bk")))).collect();
                let v: Vec<V> = xs.iter().map(|x| affine(m, x, &p("wv"), Some(&p("bv")))).collect();
                let mut next = Vec::new();
                for t in 0..xs.len() {
                    let mut att = vec![0.0; d];
                    for h in 0..s.heads {
                        let r = h * dh..(h + 1) * dh;
                        let scores: V = (0..=t)
                            .map(|j| q[t][r.clone()].iter().zip(&k[j][r.clone()]).map(|(a, b)| a * b).sum::<f64>() / (dh as f64).sqrt())
                            .collect();
                        let mx = scores.iter().cloned().fold(f64::MIN, f64::max);
                        let z: f64 = scores.iter().map(|s| (s - mx).exp()).sum();
                        for (j, sc) in scores.iter().enumerate() {
                            let w = (sc - mx).exp() / z;
                            for c in r.clone() {
                                att[c] += w * v[j][c];
                            }
                        }
                    }
                    let a = affine(m, &att, &p("wo"), Some(&p("bo")));
                    let x1 = layer_norm(&add(&xs[t], &a), mat(m, &p("ln1.g")).0, mat(m, &p("ln1.b")).0);
                    let f: V = affine(m, &x1, &p("w1"), Some(&p("b1"))).into_iter().map(|v| v.max(0.0)).collect();
                    let f = affine(m, &f, &p("w2"), Some(&p("b2")));
                    next.push(layer_norm(&add(&x1, &f), mat(m, &p("ln2.g")).0, mat(m, &p("ln2.b")).0));
                }
                xs = next;
            }
            xs
        }
    }
}

/// NLL of `targets[t]` after reading `inputs[..=t]`, for every `t`.
pub fn naive_token_nll(m: &LanguageModel, inputs: &[u32], targets: &[u32]) -> Vec<f64> {
    let out_name = if m.spec.tied { "embed" } else { "out.w" };
    let (w, vocab, d) = mat(m, out_name);
    let (b, _, _) = mat(m, "out.b");
    top_states(m, inputs)
        .iter()
        .zip(targets)
        .map(|(h, &y)| {
            let logits: V = (0..vocab).map(|r| b[r] + (0..d).map(|j| h[j] * w[r * d + j]).sum::<f64>()).collect();
            let mx = logits.iter().cloned().fold(f64::MIN, f64::max);
            let lz = mx + logits.iter().map(|l| (l - mx).exp()).sum::<f64>().ln();
            lz - logits[y as usize]
        })
        .collect()
}
