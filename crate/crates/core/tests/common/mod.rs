//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

pub mod naive_lm;

use std::collections::BTreeSet;

use wordorder_core::grammar::{Atom, Category, Lexicon, Slash};

/// Rule schemas restated directly on category trees.
fn combine(l: &Category, r: &Category) -> Vec<Category> {
    let mut out = Vec::new();
    if let Some((x, Slash::Forward, y)) = l.split() {
        if y == r {
            out.push(x.clone());
        }
        if let Some((y2, Slash::Forward, z)) = r.split() {
            if y == y2 {
                out.push(Category::fwd(x.clone(), z.clone()));
            }
        }
    }
    if let Some((x, Slash::Backward, y)) = r.split() {
        if y == l {
            out.push(x.clone());
        }
        if let Some((y2, Slash::Backward, z)) = l.split() {
            if y2 == y {
                out.push(Category::bwd(x.clone(), z.clone()));
            }
        }
    }
    let coordinable = match r {
        Category::Atom(a) => *a == Atom::S || *a == Atom::Np,
        Category::Functor { result, arg, .. } => result.is(Atom::Np) && arg.is(Atom::Np),
    };
    if l.is(Atom::Conj) && coordinable {
        out.push(Category::bwd(r.clone(), r.clone()));
    }
    out.retain(|c| c.depth() <= 8);
    out
}

/// Argument list of a functor, outermost first.
fn args_outer_first(c: &Category) -> (Category, Vec<(Slash, Category)>) {
    let mut args = Vec::new();
    let mut cur = c.clone();
    while let Some((res, s, a)) = cur.clone().split().map(|(r, s, a)| (r.clone(), s, a.clone())) {
        args.push((s, a));
        cur = res;
    }
    (cur, args)
}

/// Every category reachable by repeatedly rotating the argument list by one.
pub fn rotation_closure(c: &Category) -> BTreeSet<Category> {
    let (res, args) = args_outer_first(c);
    let mut out = BTreeSet::new();
    out.insert(c.clone());
    let n = args.len();
    if n < 2 {
        return out;
    }
    let mut cur = args;
    for _ in 0..n {
        cur.rotate_left(1);
        let mut acc = res.clone();
        for (s, a) in cur.iter().rev() {
            acc = Category::functor(acc, *s, a.clone());
        }
        out.insert(acc);
    }
    out
}

fn close(set: BTreeSet<Category>) -> BTreeSet<Category> {
    set.iter().flat_map(rotation_closure).collect()
}

/// Binary trees over `n` leaves, as nested split points.
#[derive(Clone)]
enum Tree {
    Leaf(usize),
    Node(Box<Tree>, Box<Tree>),
}

fn trees(lo: usize, hi: usize) -> Vec<Tree> {
    if hi - lo == 1 {
        return vec![Tree::Leaf(lo)];
    }
    let mut out = Vec::new();
    for k in lo + 1..hi {
        for l in trees(lo, k) {
            for r in trees(k, hi) {
                out.push(Tree::Node(Box::new(l.clone()), Box::new(r)));
            }
        }
    }
    out
}

fn eval(t: &Tree, leaves: &[Category]) -> BTreeSet<Category> {
    match t {
        Tree::Leaf(i) => close(BTreeSet::from([leaves[*i].clone()])),
        Tree::Node(l, r) => {
            let (ls, rs) = (eval(l, leaves), eval(r, leaves));
            let mut out = BTreeSet::new();
            for a in &ls {
                for b in &rs {
                    out.extend(combine(a, b));
                }
            }
            close(out)
        }
    }
}

/// Categories spanning `leaves` under some bracketing.
pub fn brute_force_span(leaves: &[Category]) -> BTreeSet<Category> {
    trees(0, leaves.len()).iter().flat_map(|t| eval(t, leaves)).collect()
}

pub fn brute_force_derives_s(leaves: &[Category]) -> bool {
    trees(0, leaves.len()).iter().any(|t| eval(t, leaves).contains(&Category::Atom(Atom::S)))
}

/// Grammaticality by trying every lexical reading of every token.
pub fn brute_force_grammatical(tokens: &[&str], lex: &Lexicon) -> bool {
    fn go(i: usize, tokens: &[&str], lex: &Lexicon, acc: &mut Vec<Category>) -> bool {
        if i == tokens.len() {
            return brute_force_derives_s(acc);
        }
        for e in lex.lookup(tokens[i]) {
            acc.push(e.category.clone());
            if go(i + 1, tokens, lex, acc) {
                return true;
            }
            acc.pop();
        }
        false
    }
    go(0, tokens, lex, &mut Vec::new())
}

/// Pearson r from raw sums (single pass, no centring).
pub fn pearson_closed_form(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt()
}
