//! Reverse-mode automatic differentiation over [`Mat`] values.
//!
//! Every operation appends a node holding its value; [`Tape::backward`]
//! walks the nodes in reverse and accumulates parameter gradients.

use super::tensor::{gemm, matmul, Mat};

pub type Var = usize;

const LN_EPS: f64 = 1e-5;

enum Op {
    Const,
    Param(usize),
    /// `a * b` or `a * b^T`
    MatMul(Var, Var, bool),
    Add(Var, Var),
    /// Adds a `1 x n` row to every row.
    AddRow(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    /// Elementwise product with a constant mask (dropout).
    Mask(Var, Vec<f64>),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    Gather(Var, Vec<u32>),
    SliceCols(Var, usize),
    SliceRows(Var, usize),
    ConcatRows(Vec<Var>),
    LayerNorm { x: Var, gamma: Var, beta: Var, xhat: Mat, inv_std: Vec<f64> },
    Attention(Box<AttnCache>),
    SoftmaxXent { logits: Var, targets: Vec<u32>, probs: Mat },
}

struct AttnCache {
    q: Var,
    k: Var,
    v: Var,
    batch: usize,
    seq: usize,
    heads: usize,
    /// Softmax weights per (window, head), each `seq x seq`.
    probs: Vec<Mat>,
    /// Scaled keep-masks, present only when attention dropout was applied.
    masks: Option<Vec<Mat>>,
}

#[derive(Default)]
pub struct Tape {
    vals: Vec<Mat>,
    ops: Vec<Op>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    fn push(&mut self, value: Mat, op: Op) -> Var {
        self.vals.push(value);
        self.ops.push(op);
        self.vals.len() - 1
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn value(&self, v: Var) -> &Mat {
        &self.vals[v]
    }

    pub fn constant(&mut self, m: Mat) -> Var {
        self.push(m, Op::Const)
    }

    /// A leaf whose gradient is reported under parameter index `pid`.
    pub fn param(&mut self, pid: usize, value: &Mat) -> Var {
        self.push(value.clone(), Op::Param(pid))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = matmul(&self.vals[a], false, &self.vals[b], false);
        self.push(v, Op::MatMul(a, b, false))
    }

    /// `a * b^T`
    pub fn matmul_bt(&mut self, a: Var, b: Var) -> Var {
        let v = matmul(&self.vals[a], false, &self.vals[b], true);
        self.push(v, Op::MatMul(a, b, true))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let mut v = self.vals[a].clone();
        v.add_assign(&self.vals[b]);
        self.push(v, Op::Add(a, b))
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let r = &self.vals[row];
        assert_eq!(r.rows, 1);
        let mut v = self.vals[a].clone();
        assert_eq!(v.cols, r.cols);
        for i in 0..v.rows {
            for (x, b) in v.row_mut(i).iter_mut().zip(&r.data) {
                *x += b;
            }
        }
        self.push(v, Op::AddRow(a, row))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (&self.vals[a], &self.vals[b]);
        assert_eq!(x.shape(), y.shape());
        let v = Mat::from_vec(x.rows, x.cols, x.data.iter().zip(&y.data).map(|(p, q)| p * q).collect());
        self.push(v, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let v = self.vals[a].map(|x| x * s);
        self.push(v, Op::Scale(a, s))
    }

    /// Multiplies by a constant mask of the same shape.
    pub fn mask(&mut self, a: Var, mask: Vec<f64>) -> Var {
        let x = &self.vals[a];
        assert_eq!(mask.len(), x.len());
        let v = Mat::from_vec(x.rows, x.cols, x.data.iter().zip(&mask).map(|(p, m)| p * m).collect());
        self.push(v, Op::Mask(a, mask))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.vals[a].map(f64::tanh);
        self.push(v, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.vals[a].map(sigmoid);
        self.push(v, Op::Sigmoid(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.vals[a].map(|x| x.max(0.0));
        self.push(v, Op::Relu(a))
    }

    /// Rows `ids` of `table`.
    pub fn gather(&mut self, table: Var, ids: &[u32]) -> Var {
        let t = &self.vals[table];
        let mut v = Mat::zeros(ids.len(), t.cols);
        for (i, &id) in ids.iter().enumerate() {
            v.row_mut(i).copy_from_slice(t.row(id as usize));
        }
        self.push(v, Op::Gather(table, ids.to_vec()))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, width: usize) -> Var {
        let x = &self.vals[a];
        assert!(start + width <= x.cols);
        let mut v = Mat::zeros(x.rows, width);
        for i in 0..x.rows {
            v.row_mut(i).copy_from_slice(&x.row(i)[start..start + width]);
        }
        self.push(v, Op::SliceCols(a, start))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, count: usize) -> Var {
        let x = &self.vals[a];
        assert!(start + count <= x.rows);
        let v = Mat::from_vec(count, x.cols, x.data[start * x.cols..(start + count) * x.cols].to_vec());
        self.push(v, Op::SliceRows(a, start))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        let cols = self.vals[parts[0]].cols;
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            assert_eq!(self.vals[p].cols, cols);
            data.extend_from_slice(&self.vals[p].data);
            rows += self.vals[p].rows;
        }
        self.push(Mat::from_vec(rows, cols, data), Op::ConcatRows(parts.to_vec()))
    }

    /// Row-wise layer normalisation with affine `1 x n` gain and bias.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var) -> Var {
        let xm = &self.vals[x];
        let (g, b) = (&self.vals[gamma], &self.vals[beta]);
        let n = xm.cols as f64;
        let mut xhat = Mat::zeros(xm.rows, xm.cols);
        let mut out = Mat::zeros(xm.rows, xm.cols);
        let mut inv_std = Vec::with_capacity(xm.rows);
        for i in 0..xm.rows {
            let r = xm.row(i);
            let mu = r.iter().sum::<f64>() / n;
            let var = r.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
            let s = 1.0 / (var + LN_EPS).sqrt();
            inv_std.push(s);
            for j in 0..xm.cols {
                let h = (r[j] - mu) * s;
                xhat.data[i * xm.cols + j] = h;
                out.data[i * xm.cols + j] = h * g.data[j] + b.data[j];
            }
        }
        self.push(out, Op::LayerNorm { x, gamma, beta, xhat, inv_std })
    }

    /// Causal multi-head scaled dot-product attention over `batch` windows of
    /// `seq` rows each. `q`, `k`, `v` are `(batch*seq) x d`, heads split `d`
    /// evenly. `dropout` gives a keep-mask source for the attention weights.
    pub fn causal_attention(
        &mut self,
        q: Var,
        k: Var,
        v: Var,
        batch: usize,
        seq: usize,
        heads: usize,
        mut dropout: Option<&mut dyn FnMut(usize) -> Vec<f64>>,
    ) -> Var {
        let d = self.vals[q].cols;
        assert_eq!(d % heads, 0);
        assert_eq!(self.vals[q].rows, batch * seq);
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let mut out = Mat::zeros(batch * seq, d);
        let mut probs = Vec::with_capacity(batch * heads);
        let mut masks = dropout.as_ref().map(|_| Vec::with_capacity(batch * heads));
        for b in 0..batch {
            for h in 0..heads {
                let qb = block(&self.vals[q], b * seq, seq, h * dh, dh);
                let kb = block(&self.vals[k], b * seq, seq, h * dh, dh);
                let vb = block(&self.vals[v], b * seq, seq, h * dh, dh);
                let mut s = matmul(&qb, false, &kb, true);
                for i in 0..seq {
                    let row = s.row_mut(i);
                    let mut mx = f64::NEG_INFINITY;
                    for x in row.iter_mut().take(i + 1) {
                        *x *= scale;
                        mx = mx.max(*x);
                    }
                    let mut z = 0.0;
                    for x in row.iter_mut().take(i + 1) {
                        *x = (*x - mx).exp();
                        z += *x;
                    }
                    for (j, x) in row.iter_mut().enumerate() {
                        *x = if j <= i { *x / z } else { 0.0 };
                    }
                }
                let weights = match (&mut dropout, &mut masks) {
                    (Some(f), Some(ms)) => {
                        let m = Mat::from_vec(seq, seq, f(seq * seq));
                        let w = Mat::from_vec(seq, seq, s.data.iter().zip(&m.data).map(|(p, k)| p * k).collect());
                        ms.push(m);
                        w
                    }
                    _ => s.clone(),
                };
                let o = matmul(&weights, false, &vb, false);
                put_block(&mut out, &o, b * seq, h * dh);
                probs.push(s);
            }
        }
        let cache = AttnCache { q, k, v, batch, seq, heads, probs, masks };
        self.push(out, Op::Attention(Box::new(cache)))
    }

    /// Mean next-token cross-entropy of `logits` rows against `targets`.
    pub fn softmax_xent(&mut self, logits: Var, targets: &[u32]) -> Var {
        let l = &self.vals[logits];
        assert_eq!(l.rows, targets.len());
        let mut probs = Mat::zeros(l.rows, l.cols);
        let mut total = 0.0;
        for (i, &t) in targets.iter().enumerate() {
            let r = l.row(i);
            let mx = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = r.iter().map(|x| (x - mx).exp()).sum();
            let lz = mx + z.ln();
            total += lz - r[t as usize];
            for (p, x) in probs.row_mut(i).iter_mut().zip(r) {
                *p = (x - lz).exp();
            }
        }
        let loss = total / targets.len() as f64;
        self.push(Mat::scalar(loss), Op::SoftmaxXent { logits, targets: targets.to_vec(), probs })
    }

    /// Accumulates d`loss`/d`param` into `grads[pid]` for every parameter leaf.
    pub fn backward(&self, loss: Var, grads: &mut [Mat]) {
        let mut g: Vec<Option<Mat>> = (0..self.vals.len()).map(|_| None).collect();
        g[loss] = Some(Mat::scalar(1.0));
        let shape_of = |v: Var| self.vals[v].shape();
        let acc = |g: &mut Vec<Option<Mat>>, v: Var, d: Mat| match &mut g[v] {
            Some(x) => x.add_assign(&d),
            slot => *slot = Some(d),
        };
        for i in (0..=loss).rev() {
            let Some(dy) = g[i].take() else { continue };
            match &self.ops[i] {
                Op::Const => {}
                Op::Param(pid) => grads[*pid].add_assign(&dy),
                Op::MatMul(a, b, tb) => {
                    let (a, b, tb) = (*a, *b, *tb);
                    // y = a * op(b)
                    let da = matmul(&dy, false, &self.vals[b], !tb);
                    let db = if tb { matmul(&dy, true, &self.vals[a], false) } else { matmul(&self.vals[a], true, &dy, false) };
                    acc(&mut g, a, da);
                    acc(&mut g, b, db);
                }
                Op::Add(a, b) => {
                    acc(&mut g, *b, dy.clone());
                    acc(&mut g, *a, dy);
                }
                Op::AddRow(a, row) => {
                    let mut dr = Mat::zeros(1, dy.cols);
                    for r in 0..dy.rows {
                        for (s, x) in dr.data.iter_mut().zip(dy.row(r)) {
                            *s += x;
                        }
                    }
                    acc(&mut g, *row, dr);
                    acc(&mut g, *a, dy);
                }
                Op::Mul(a, b) => {
                    let (x, y) = (&self.vals[*a], &self.vals[*b]);
                    let da = Mat::from_vec(dy.rows, dy.cols, dy.data.iter().zip(&y.data).map(|(d, v)| d * v).collect());
                    let db = Mat::from_vec(dy.rows, dy.cols, dy.data.iter().zip(&x.data).map(|(d, v)| d * v).collect());
                    acc(&mut g, *a, da);
                    acc(&mut g, *b, db);
                }
                Op::Scale(a, s) => acc(&mut g, *a, dy.map(|x| x * s)),
                Op::Mask(a, m) => {
                    let d = Mat::from_vec(dy.rows, dy.cols, dy.data.iter().zip(m).map(|(d, k)| d * k).collect());
                    acc(&mut g, *a, d);
                }
                Op::Tanh(a) => {
                    let y = &self.vals[i];
                    let d = Mat::from_vec(dy.rows, dy.cols, dy.data.iter().zip(&y.data).map(|(d, t)| d * (1.0 - t * t)).collect());
                    acc(&mut g, *a, d);
                }
                Op::Sigmoid(a) => {
                    let y = &self.vals[i];
                    let d = Mat::from_vec(dy.rows, dy.cols, dy.data.iter().zip(&y.data).map(|(d, s)| d * s * (1.0 - s)).collect());
                    acc(&mut g, *a, d);
                }
                Op::Relu(a) => {
                    let x = &self.vals[*a];
                    let d = Mat::from_vec(
                        dy.rows,
                        dy.cols,
                        dy.data.iter().zip(&x.data).map(|(d, v)| if *v > 0.0 { *d } else { 0.0 }).collect(),
                    );
                    acc(&mut g, *a, d);
                }
                Op::Gather(table, ids) => {
                    let (r, c) = shape_of(*table);
                    let mut dt = Mat::zeros(r, c);
                    for (k, &id) in ids.iter().enumerate() {
                        for (s, x) in dt.row_mut(id as usize).iter_mut().zip(dy.row(k)) {
                            *s += x;
                        }
                    }
                    acc(&mut g, *table, dt);
                }
                Op::SliceCols(a, start) => {
                    let (r, c) = shape_of(*a);
                    let da = g[*a].get_or_insert_with(|| Mat::zeros(r, c));
                    for k in 0..r {
                        for (s, x) in da.row_mut(k)[*start..*start + dy.cols].iter_mut().zip(dy.row(k)) {
                            *s += x;
                        }
                    }
                }
                Op::SliceRows(a, start) => {
                    let (r, c) = shape_of(*a);
                    let da = g[*a].get_or_insert_with(|| Mat::zeros(r, c));
                    for (s, x) in da.data[start * c..start * c + dy.len()].iter_mut().zip(&dy.data) {
                        *s += x;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let (r, c) = shape_of(p);
                        acc(&mut g, p, Mat::from_vec(r, c, dy.data[off..off + r * c].to_vec()));
                        off += r * c;
                    }
                }
                Op::LayerNorm { x, gamma, beta, xhat, inv_std } => {
                    let gm = &self.vals[*gamma];
                    let (rows, cols) = dy.shape();
                    let n = cols as f64;
                    let mut dg = Mat::zeros(1, cols);
                    let mut db = Mat::zeros(1, cols);
                    let mut dx = Mat::zeros(rows, cols);
                    for r in 0..rows {
                        let (dyr, xh) = (dy.row(r), xhat.row(r));
                        let mut s1 = 0.0;
                        let mut s2 = 0.0;
                        for j in 0..cols {
                            dg.data[j] += dyr[j] * xh[j];
                            db.data[j] += dyr[j];
                            let dxh = dyr[j] * gm.data[j];
                            s1 += dxh;
                            s2 += dxh * xh[j];
                        }
                        let out = dx.row_mut(r);
                        for j in 0..cols {
                            let dxh = dyr[j] * gm.data[j];
                            out[j] = inv_std[r] / n * (n * dxh - s1 - xh[j] * s2);
                        }
                    }
                    acc(&mut g, *gamma, dg);
                    acc(&mut g, *beta, db);
                    acc(&mut g, *x, dx);
                }
                Op::Attention(c) => {
                    let (dq, dk, dv) = self.attention_backward(c, &dy);
                    acc(&mut g, c.q, dq);
                    acc(&mut g, c.k, dk);
                    acc(&mut g, c.v, dv);
                }
                Op::SoftmaxXent { logits, targets, probs } => {
                    let s = dy.data[0] / targets.len() as f64;
                    let mut d = probs.clone();
                    for (r, &t) in targets.iter().enumerate() {
                        d.data[r * d.cols + t as usize] -= 1.0;
                    }
                    for x in &mut d.data {
                        *x *= s;
                    }
                    acc(&mut g, *logits, d);
                }
            }
        }
    }

    fn attention_backward(&self, c: &AttnCache, dy: &Mat) -> (Mat, Mat, Mat) {
        let d = self.vals[c.q].cols;
        let dh = d / c.heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let rows = c.batch * c.seq;
        let (mut dq, mut dk, mut dv) = (Mat::zeros(rows, d), Mat::zeros(rows, d), Mat::zeros(rows, d));
        for b in 0..c.batch {
            for h in 0..c.heads {
                let idx = b * c.heads + h;
                let (r0, c0) = (b * c.seq, h * dh);
                let qb = block(&self.vals[c.q], r0, c.seq, c0, dh);
                let kb = block(&self.vals[c.k], r0, c.seq, c0, dh);
                let vb = block(&self.vals[c.v], r0, c.seq, c0, dh);
                let dob = block(dy, r0, c.seq, c0, dh);
                let p = &c.probs[idx];
                let weights = match &c.masks {
                    Some(ms) => Mat::from_vec(c.seq, c.seq, p.data.iter().zip(&ms[idx].data).map(|(a, m)| a * m).collect()),
                    None => p.clone(),
                };
                let dvb = matmul(&weights, true, &dob, false);
                let mut dw = matmul(&dob, false, &vb, true);
                if let Some(ms) = &c.masks {
                    for (x, m) in dw.data.iter_mut().zip(&ms[idx].data) {
                        *x *= m;
                    }
                }
                // softmax backward, then the 1/sqrt(dh) scale
                let mut ds = Mat::zeros(c.seq, c.seq);
                for i in 0..c.seq {
                    let (pr, dr) = (p.row(i), dw.row(i));
                    let dot: f64 = pr.iter().zip(dr).map(|(a, b)| a * b).sum();
                    for (j, x) in ds.row_mut(i).iter_mut().enumerate() {
                        *x = pr[j] * (dr[j] - dot) * scale;
                    }
                }
                let mut dqb = Mat::zeros(c.seq, dh);
                gemm(1.0, &ds, false, &kb, false, 0.0, &mut dqb);
                let mut dkb = Mat::zeros(c.seq, dh);
                gemm(1.0, &ds, true, &qb, false, 0.0, &mut dkb);
                put_block(&mut dq, &dqb, r0, c0);
                put_block(&mut dk, &dkb, r0, c0);
                put_block(&mut dv, &dvb, r0, c0);
            }
        }
        (dq, dk, dv)
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn block(m: &Mat, r0: usize, rows: usize, c0: usize, cols: usize) -> Mat {
    let mut out = Mat::zeros(rows, cols);
    for r in 0..rows {
        out.row_mut(r).copy_from_slice(&m.row(r0 + r)[c0..c0 + cols]);
    }
    out
}

fn put_block(dst: &mut Mat, src: &Mat, r0: usize, c0: usize) {
    for r in 0..src.rows {
        dst.row_mut(r0 + r)[c0..c0 + src.cols].copy_from_slice(src.row(r));
    }
}
