use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::category::{Atom, Category, DEFAULT_MAX_DEPTH};
use super::lexicon::{Lexicon, PosClass};
use super::rules::{apply_binary, apply_permutation, RuleKind};
use super::GrammarError;

/// Hard bounds on a parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseLimits {
    pub max_tokens: usize,
    pub max_depth: usize,
    pub max_cell: usize,
    /// Also rotate inner sub-spines during permutation.
    pub deep_permutation: bool,
}

impl Default for ParseLimits {
    fn default() -> Self {
        ParseLimits { max_tokens: 32, max_depth: DEFAULT_MAX_DEPTH, max_cell: 256, deep_permutation: false }
    }
}

/// Upper bound on distinct categories reachable from one lexicon.
const MAX_REACHABLE: usize = 8192;

pub type CatId = u32;

/// A lexicon compiled into integer category tables.
///
/// Every category derivable from the lexical categories (within the depth
/// bound) gets an id, and all binary combinations and permutations between
/// them are tabulated once, so parsing is table lookups only.
#[derive(Debug, Clone)]
pub struct Grammar {
    lexicon: Lexicon,
    limits: ParseLimits,
    cats: Vec<Category>,
    index: HashMap<Category, CatId>,
    combos: HashMap<(CatId, CatId), Vec<(RuleKind, CatId)>>,
    perms: Vec<Vec<CatId>>,
    token_cats: HashMap<String, Vec<CatId>>,
    s_id: CatId,
}

impl Grammar {
    pub fn new(lexicon: Lexicon, limits: ParseLimits) -> Result<Self, GrammarError> {
        let mut g = Grammar {
            lexicon,
            limits,
            cats: Vec::new(),
            index: HashMap::new(),
            combos: HashMap::new(),
            perms: Vec::new(),
            token_cats: HashMap::new(),
            s_id: 0,
        };
        g.intern(Category::Atom(Atom::S))?;
        let lexical: Vec<Category> = g.lexicon.entries().iter().map(|e| e.category.clone()).collect();
        for c in &lexical {
            c.check_depth(limits.max_depth)?;
            g.intern(c.clone())?;
        }
        g.close()?;
        let mut token_cats: HashMap<String, Vec<CatId>> = HashMap::new();
        for e in g.lexicon.entries() {
            let id = g.index[&e.category];
            let ids = token_cats.entry(e.token.clone()).or_default();
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
        g.token_cats = token_cats;
        Ok(g)
    }

    pub fn with_defaults(lexicon: Lexicon) -> Result<Self, GrammarError> {
        Self::new(lexicon, ParseLimits::default())
    }

    fn intern(&mut self, c: Category) -> Result<CatId, GrammarError> {
        if let Some(&id) = self.index.get(&c) {
            return Ok(id);
        }
        if self.cats.len() >= MAX_REACHABLE {
            return Err(GrammarError::LimitExceeded { limit: "reachable categories", value: MAX_REACHABLE });
        }
        let id = self.cats.len() as CatId;
        self.index.insert(c.clone(), id);
        self.cats.push(c);
        self.perms.push(Vec::new());
        Ok(id)
    }

    /// Fixpoint over all rules, pairing every reachable category with every other.
    fn close(&mut self) -> Result<(), GrammarError> {
        // all pairs below `done` have been combined and permuted
        let mut done = 0usize;
        loop {
            let n = self.cats.len();
            if done == n {
                return Ok(());
            }
            for id in done..n {
                let rotations = apply_permutation(&self.cats[id], self.limits.deep_permutation);
                let mut ids = Vec::new();
                for r in rotations {
                    if r.depth() <= self.limits.max_depth {
                        ids.push(self.intern(r)?);
                    }
                }
                self.perms[id] = ids;
            }
            for a in 0..n {
                for b in 0..n {
                    if a >= done || b >= done {
                        self.combine_pair(a as CatId, b as CatId)?;
                    }
                }
            }
            done = n;
        }
    }

    fn combine_pair(&mut self, a: CatId, b: CatId) -> Result<(), GrammarError> {
        let mut found = Vec::new();
        for rule in RuleKind::BINARY {
            if let Some(r) = apply_binary(rule, &self.cats[a as usize], &self.cats[b as usize]) {
                if r.depth() <= self.limits.max_depth {
                    found.push((rule, self.intern(r)?));
                }
            }
        }
        if !found.is_empty() {
            self.combos.insert((a, b), found);
        }
        Ok(())
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn limits(&self) -> &ParseLimits {
        &self.limits
    }

    pub fn categories(&self) -> &[Category] {
        &self.cats
    }

    pub fn category(&self, id: CatId) -> &Category {
        &self.cats[id as usize]
    }

    pub fn id_of(&self, c: &Category) -> Option<CatId> {
        self.index.get(c).copied()
    }

    pub fn sentence_id(&self) -> CatId {
        self.s_id
    }

    /// Results of combining `left` and `right` with each applicable binary rule.
    pub fn combine(&self, left: CatId, right: CatId) -> &[(RuleKind, CatId)] {
        self.combos.get(&(left, right)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn permutations(&self, id: CatId) -> &[CatId] {
        &self.perms[id as usize]
    }

    /// All `(left, right, rule)` triples producing each category, indexed by result.
    pub fn producers(&self) -> Vec<Vec<(CatId, CatId, RuleKind)>> {
        let mut out = vec![Vec::new(); self.cats.len()];
        let mut keys: Vec<_> = self.combos.iter().collect();
        keys.sort_by_key(|(k, _)| **k);
        for (&(a, b), results) in keys {
            for &(rule, r) in results {
                out[r as usize].push((a, b, rule));
            }
        }
        out
    }

    fn leaf_ids(&self, tokens: &[&str]) -> Result<Vec<Vec<CatId>>, GrammarError> {
        tokens
            .iter()
            .map(|t| {
                self.token_cats.get(*t).cloned().ok_or_else(|| GrammarError::UnknownToken(t.to_string()))
            })
            .collect()
    }

    fn check_len(&self, n: usize) -> Result<(), GrammarError> {
        if n == 0 {
            return Err(GrammarError::EmptyInput);
        }
        if n > self.limits.max_tokens {
            return Err(GrammarError::LimitExceeded { limit: "max_tokens", value: self.limits.max_tokens });
        }
        Ok(())
    }

    /// Canonical sentential derivation of `tokens`, if any.
    pub fn parse<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Option<Derivation>, GrammarError> {
        let toks: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
        self.check_len(toks.len())?;
        let leaves = self.leaf_ids(&toks)?;
        let chart = self.fill_chart(&leaves)?;
        Ok(chart.derivation(self, self.s_id, Some(&toks)))
    }

    pub fn is_grammatical<S: AsRef<str>>(&self, tokens: &[S]) -> Result<bool, GrammarError> {
        let toks: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
        self.check_len(toks.len())?;
        let leaves = self.leaf_ids(&toks)?;
        Ok(self.fill_chart(&leaves)?.top_contains(self.s_id))
    }

    /// Parses a sequence of leaf categories directly (template parsing).
    pub fn parse_categories(&self, leaves: &[CatId]) -> Result<Option<Derivation>, GrammarError> {
        self.check_len(leaves.len())?;
        let leaves: Vec<Vec<CatId>> = leaves.iter().map(|&c| vec![c]).collect();
        let chart = self.fill_chart(&leaves)?;
        Ok(chart.derivation(self, self.s_id, None))
    }

    pub fn categories_derive_sentence(&self, leaves: &[CatId]) -> Result<bool, GrammarError> {
        self.check_len(leaves.len())?;
        let leaves: Vec<Vec<CatId>> = leaves.iter().map(|&c| vec![c]).collect();
        Ok(self.fill_chart(&leaves)?.top_contains(self.s_id))
    }

    /// Every category spanning the whole input (with permutation closure).
    pub fn span_categories(&self, leaves: &[CatId]) -> Result<Vec<CatId>, GrammarError> {
        self.check_len(leaves.len())?;
        let leaves: Vec<Vec<CatId>> = leaves.iter().map(|&c| vec![c]).collect();
        let chart = self.fill_chart(&leaves)?;
        let n = leaves.len();
        Ok(chart.cell(0, n).iter().map(|e| e.cat).collect())
    }

    fn fill_chart(&self, leaves: &[Vec<CatId>]) -> Result<Chart, GrammarError> {
        let n = leaves.len();
        let mut chart = Chart::new(n);
        for (i, ids) in leaves.iter().enumerate() {
            let mut cell = Vec::with_capacity(ids.len());
            for &id in ids {
                relax(&mut cell, Entry { cat: id, cost: 0, back: Back::Leaf });
            }
            self.close_cell(&mut cell)?;
            *chart.cell_mut(i, i + 1) = cell;
        }
        for width in 2..=n {
            for start in 0..=n - width {
                let end = start + width;
                let mut cell: Vec<Entry> = Vec::new();
                for split in start + 1..end {
                    let left = chart.cell(start, split);
                    let right = chart.cell(split, end);
                    for (li, l) in left.iter().enumerate() {
                        for (ri, r) in right.iter().enumerate() {
                            for &(rule, result) in self.combine(l.cat, r.cat) {
                                let cost = l.cost + r.cost + rule.cost();
                                relax(
                                    &mut cell,
                                    Entry { cat: result, cost, back: Back::Binary { rule, split, left: li, right: ri } },
                                );
                            }
                        }
                    }
                }
                self.close_cell(&mut cell)?;
                *chart.cell_mut(start, end) = cell;
            }
        }
        Ok(chart)
    }

    /// Unary permutation closure of one cell; terminates because each
    /// category's rotation orbit is finite.
    fn close_cell(&self, cell: &mut Vec<Entry>) -> Result<(), GrammarError> {
        let mut changed = true;
        while changed {
            changed = false;
            let mut i = 0;
            while i < cell.len() {
                let (cat, cost) = (cell[i].cat, cell[i].cost);
                for &p in self.permutations(cat) {
                    let e = Entry { cat: p, cost: cost + RuleKind::WeakGeneralizedPermutation.cost(), back: Back::Permute(i) };
                    if relax(cell, e) {
                        changed = true;
                    }
                }
                i += 1;
            }
        }
        if cell.len() > self.limits.max_cell {
            return Err(GrammarError::LimitExceeded { limit: "max_cell", value: self.limits.max_cell });
        }
        Ok(())
    }
}

/// Inserts `e`, or replaces an existing entry for the same category when `e`
/// is strictly cheaper. Returns whether the cell changed.
fn relax(cell: &mut Vec<Entry>, e: Entry) -> bool {
    match cell.iter_mut().find(|x| x.cat == e.cat) {
        Some(existing) if e.cost < existing.cost => {
            *existing = e;
            true
        }
        Some(_) => false,
        None => {
            cell.push(e);
            true
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    cat: CatId,
    cost: u32,
    back: Back,
}

#[derive(Debug, Clone, Copy)]
enum Back {
    Leaf,
    Binary { rule: RuleKind, split: usize, left: usize, right: usize },
    /// Permuted from another entry of the same cell.
    Permute(usize),
}

struct Chart {
    n: usize,
    cells: Vec<Vec<Entry>>,
}

impl Chart {
    fn new(n: usize) -> Self {
        Chart { n, cells: vec![Vec::new(); (n + 1) * (n + 1)] }
    }

    fn cell(&self, start: usize, end: usize) -> &[Entry] {
        &self.cells[start * (self.n + 1) + end]
    }

    fn cell_mut(&mut self, start: usize, end: usize) -> &mut Vec<Entry> {
        &mut self.cells[start * (self.n + 1) + end]
    }

    fn top_contains(&self, cat: CatId) -> bool {
        self.cell(0, self.n).iter().any(|e| e.cat == cat)
    }

    fn derivation(&self, g: &Grammar, cat: CatId, tokens: Option<&[&str]>) -> Option<Derivation> {
        let idx = self.cell(0, self.n).iter().position(|e| e.cat == cat)?;
        Some(self.build(g, 0, self.n, idx, tokens))
    }

    fn build(&self, g: &Grammar, start: usize, end: usize, idx: usize, tokens: Option<&[&str]>) -> Derivation {
        let e = self.cell(start, end)[idx];
        let category = g.category(e.cat).clone();
        match e.back {
            Back::Leaf => Derivation {
                category,
                rule: None,
                children: Vec::new(),
                span: (start, end),
                token: tokens.map(|t| t[start].to_string()),
            },
            Back::Binary { rule, split, left, right } => Derivation {
                category,
                rule: Some(rule),
                children: vec![self.build(g, start, split, left, tokens), self.build(g, split, end, right, tokens)],
                span: (start, end),
                token: None,
            },
            Back::Permute(from) => Derivation {
                category,
                rule: Some(RuleKind::WeakGeneralizedPermutation),
                children: vec![self.build(g, start, end, from, tokens)],
                span: (start, end),
                token: None,
            },
        }
    }
}

/// A derivation tree. Leaves have no rule and carry their lexical category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    #[serde(with = "cat_string")]
    pub category: Category,
    pub rule: Option<RuleKind>,
    pub children: Vec<Derivation>,
    /// Half-open token interval.
    pub span: (usize, usize),
    pub token: Option<String>,
}

mod cat_string {
    use super::Category;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(c: &Category, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(c)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Category, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Derivation {
    pub fn is_leaf(&self) -> bool {
        self.rule.is_none()
    }

    pub fn is_sentential(&self, n_tokens: usize) -> bool {
        self.category.is(Atom::S) && self.span == (0, n_tokens)
    }

    /// Re-applies every rule to its children and checks the stored categories.
    pub fn verify(&self, deep_permutation: bool) -> bool {
        match (self.rule, self.children.as_slice()) {
            (None, []) => self.span.1 == self.span.0 + 1,
            (Some(RuleKind::WeakGeneralizedPermutation), [child]) => {
                child.span == self.span
                    && apply_permutation(&child.category, deep_permutation).contains(&self.category)
                    && child.verify(deep_permutation)
            }
            (Some(rule), [l, r]) => {
                l.span.0 == self.span.0
                    && l.span.1 == r.span.0
                    && r.span.1 == self.span.1
                    && apply_binary(rule, &l.category, &r.category).as_ref() == Some(&self.category)
                    && l.verify(deep_permutation)
                    && r.verify(deep_permutation)
            }
            _ => false,
        }
    }

    /// Rules in post-order (children before parents, left before right).
    pub fn rules_postorder(&self) -> Vec<RuleKind> {
        let mut out = Vec::new();
        self.walk(&mut |d| {
            if let Some(r) = d.rule {
                out.push(r);
            }
        });
        out
    }

    pub fn rule_counts(&self) -> BTreeMap<RuleKind, usize> {
        let mut counts = BTreeMap::new();
        for r in self.rules_postorder() {
            *counts.entry(r).or_insert(0) += 1;
        }
        counts
    }

    pub fn leaves(&self) -> Vec<&Derivation> {
        let mut out = Vec::new();
        self.walk(&mut |d| {
            if d.is_leaf() {
                out.push(d);
            }
        });
        out
    }

    fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Derivation)) {
        for c in &self.children {
            c.walk(f);
        }
        f(self);
    }

    /// Bracketed rendering, e.g. `(S ba (NP_SBJ ba man ga) ...)`.
    pub fn pretty(&self) -> String {
        match (&self.rule, &self.token) {
            (None, Some(t)) => format!("{t}:{}", self.category),
            (None, None) => format!("{}", self.category),
            (Some(r), _) => {
                let kids: Vec<String> = self.children.iter().map(Derivation::pretty).collect();
                format!("({} {} {})", self.category, r, kids.join(" "))
            }
        }
    }
}

/// One-shot parse; compiles the lexicon first. Prefer [`Grammar::parse`] in loops.
pub fn parse<S: AsRef<str>>(
    tokens: &[S],
    lexicon: &Lexicon,
    limits: &ParseLimits,
) -> Result<Option<Derivation>, GrammarError> {
    Grammar::new(lexicon.clone(), *limits)?.parse(tokens)
}

pub fn is_grammatical<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> Result<bool, GrammarError> {
    Grammar::with_defaults(lexicon.clone())?.is_grammatical(tokens)
}

/// Slot types of a compiled grammar: `(pos, category id)` pairs.
pub fn slot_ids(g: &Grammar) -> Vec<(PosClass, CatId)> {
    g.lexicon()
        .slot_types()
        .into_iter()
        .map(|(p, c)| (p, g.id_of(&c).expect("lexical categories are interned")))
        .collect()
}
