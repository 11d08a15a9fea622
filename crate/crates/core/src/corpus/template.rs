use std::collections::{HashMap, HashSet};
use std::fmt;
use std::ops::RangeInclusive;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::grammar::{slot_ids, CatId, Category, Grammar, PosClass};

use super::CorpusError;

/// Default cap on generated candidates per length.
pub const DEFAULT_CANDIDATE_CAP: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateOrigin {
    Enumerated,
    Appended,
    Conjoined,
    Embedded,
}

impl TemplateOrigin {
    pub fn name(self) -> &'static str {
        match self {
            TemplateOrigin::Enumerated => "enumerated",
            TemplateOrigin::Appended => "appended",
            TemplateOrigin::Conjoined => "conjoined",
            TemplateOrigin::Embedded => "embedded",
        }
    }
}

impl fmt::Display for TemplateOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One lexical slot type: every token with this `(pos, category)` pair is
/// interchangeable in a template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    pub pos: PosClass,
    pub category: Category,
    pub cat_id: CatId,
    pub label: String,
    pub tokens: Vec<String>,
}

/// The slot types of one compiled grammar, indexed by `u8`.
#[derive(Debug, Clone)]
pub struct SlotInventory {
    slots: Vec<Slot>,
}

impl SlotInventory {
    pub fn new(g: &Grammar) -> Self {
        let ids = slot_ids(g);
        let mut slots: Vec<Slot> = ids
            .into_iter()
            .map(|(pos, cat_id)| {
                let category = g.category(cat_id).clone();
                let tokens = g.lexicon().tokens_for(pos, &category).into_iter().map(String::from).collect();
                Slot { pos, category, cat_id, label: String::new(), tokens }
            })
            .collect();
        assert!(slots.len() <= u8::MAX as usize, "too many slot types");
        for i in 0..slots.len() {
            let shared = slots.iter().filter(|s| s.pos == slots[i].pos).count() > 1;
            slots[i].label = if shared {
                format!("{}_{}", slots[i].pos.tag(), slots[i].tokens[0])
            } else {
                slots[i].pos.tag().to_string()
            };
        }
        SlotInventory { slots }
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn get(&self, i: u8) -> &Slot {
        &self.slots[i as usize]
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn find(&self, pos: PosClass) -> Option<u8> {
        self.slots.iter().position(|s| s.pos == pos).map(|i| i as u8)
    }

    pub fn find_label(&self, label: &str) -> Option<u8> {
        self.slots.iter().position(|s| s.label == label).map(|i| i as u8)
    }

    pub fn cat_ids(&self, t: &Template) -> Vec<CatId> {
        t.slots.iter().map(|&s| self.slots[s as usize].cat_id).collect()
    }

    /// `-`-joined slot labels; unique per template within a language.
    pub fn template_id(&self, t: &Template) -> String {
        t.slots.iter().map(|&s| self.slots[s as usize].label.as_str()).collect::<Vec<_>>().join("-")
    }

    pub fn parse_template_id(&self, id: &str, origin: TemplateOrigin) -> Option<Template> {
        let slots = id.split('-').map(|l| self.find_label(l)).collect::<Option<Vec<u8>>>()?;
        Some(Template { slots, origin })
    }
}

/// A sequence of lexical slots.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Template {
    pub slots: Vec<u8>,
    pub origin: TemplateOrigin,
}

impl Template {
    pub fn new(slots: Vec<u8>, origin: TemplateOrigin) -> Self {
        Template { slots, origin }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn is_valid(&self, g: &Grammar, inv: &SlotInventory) -> Result<bool, CorpusError> {
        Ok(g.categories_derive_sentence(&inv.cat_ids(self))?)
    }
}

type Seqs = Rc<Vec<Box<[u8]>>>;

/// Top-down generator of slot sequences deriving a category, over the
/// inverse rule tables of a compiled grammar.
struct Generator<'a> {
    lexical: HashMap<CatId, Vec<u8>>,
    producers: Vec<Vec<(CatId, CatId)>>,
    /// `sources[c]`: categories whose permutation closure contains `c` (including `c`).
    sources: Vec<Vec<CatId>>,
    memo: HashMap<(CatId, usize), Seqs>,
    produced: usize,
    cap: usize,
    _g: &'a Grammar,
}

impl<'a> Generator<'a> {
    fn new(g: &'a Grammar, inv: &SlotInventory, cap: usize) -> Self {
        let n = g.categories().len();
        let mut lexical: HashMap<CatId, Vec<u8>> = HashMap::new();
        for (i, s) in inv.slots().iter().enumerate() {
            lexical.entry(s.cat_id).or_default().push(i as u8);
        }
        let producers = g
            .producers()
            .into_iter()
            .map(|ps| {
                let mut pairs: Vec<(CatId, CatId)> = ps.into_iter().map(|(l, r, _)| (l, r)).collect();
                pairs.sort_unstable();
                pairs.dedup();
                pairs
            })
            .collect();
        let mut sources = vec![Vec::new(); n];
        for c in 0..n as CatId {
            let mut seen = vec![c];
            let mut stack = vec![c];
            while let Some(x) = stack.pop() {
                for &p in g.permutations(x) {
                    if !seen.contains(&p) {
                        seen.push(p);
                        stack.push(p);
                    }
                }
            }
            for r in seen {
                sources[r as usize].push(c);
            }
        }
        Generator { lexical, producers, sources, memo: HashMap::new(), produced: 0, cap, _g: g }
    }

    fn derive(&mut self, cat: CatId, len: usize) -> Result<Seqs, CorpusError> {
        if let Some(s) = self.memo.get(&(cat, len)) {
            return Ok(s.clone());
        }
        let mut set: HashSet<Box<[u8]>> = HashSet::new();
        for src in self.sources[cat as usize].clone() {
            if len == 1 {
                for &slot in self.lexical.get(&src).into_iter().flatten() {
                    set.insert(Box::new([slot]));
                }
                continue;
            }
            for (l, r) in self.producers[src as usize].clone() {
                for k in 1..len {
                    let left = self.derive(l, k)?;
                    if left.is_empty() {
                        continue;
                    }
                    let right = self.derive(r, len - k)?;
                    self.produced += left.len() * right.len();
                    if self.produced > self.cap {
                        return Err(CorpusError::CandidateCap { length: len, cap: self.cap });
                    }
                    for a in left.iter() {
                        for b in right.iter() {
                            let mut v = Vec::with_capacity(len);
                            v.extend_from_slice(a);
                            v.extend_from_slice(b);
                            set.insert(v.into_boxed_slice());
                        }
                    }
                }
            }
        }
        let mut seqs: Vec<Box<[u8]>> = set.into_iter().collect();
        seqs.sort_unstable();
        let seqs = Rc::new(seqs);
        self.memo.insert((cat, len), seqs.clone());
        Ok(seqs)
    }
}

/// All valid templates with lengths in `lengths`, sorted by length then slot order.
///
/// Candidates come from a top-down expansion of `S` and each one is confirmed
/// by the chart parser. More than `cap` candidates for one length is an error.
pub fn enumerate_templates(
    g: &Grammar,
    inv: &SlotInventory,
    lengths: RangeInclusive<usize>,
    cap: usize,
) -> Result<Vec<Template>, CorpusError> {
    let mut out = Vec::new();
    let mut gen = Generator::new(g, inv, cap);
    for len in lengths {
        gen.produced = 0;
        let seqs = gen.derive(g.sentence_id(), len).map_err(|e| match e {
            CorpusError::CandidateCap { cap, .. } => CorpusError::CandidateCap { length: len, cap },
            other => other,
        })?;
        for s in seqs.iter() {
            let t = Template::new(s.to_vec(), TemplateOrigin::Enumerated);
            if t.is_valid(g, inv)? {
                out.push(t);
            }
        }
    }
    Ok(out)
}

/// Long templates produced by [`extend_templates`].
#[derive(Debug, Clone)]
pub struct ExtendedTemplates {
    pub templates: Vec<Template>,
    /// Set when fewer than the requested number of valid templates were found.
    pub short_of_budget: bool,
    pub attempts: usize,
}

pub const LONG_LENGTHS: RangeInclusive<usize> = 11..=20;

/// Combines two templates: `A B`, `A conj B`, or `B` spliced into `A` after
/// position `j` as `A[..j] conj B A[j..]`.
pub fn combine_templates(a: &Template, b: &Template, origin: TemplateOrigin, conj: u8, j: usize) -> Template {
    let mut slots = Vec::with_capacity(a.len() + b.len() + 1);
    match origin {
        TemplateOrigin::Appended => {
            slots.extend_from_slice(&a.slots);
            slots.extend_from_slice(&b.slots);
        }
        TemplateOrigin::Conjoined => {
            slots.extend_from_slice(&a.slots);
            slots.push(conj);
            slots.extend_from_slice(&b.slots);
        }
        TemplateOrigin::Embedded => {
            slots.extend_from_slice(&a.slots[..j]);
            slots.push(conj);
            slots.extend_from_slice(&b.slots);
            slots.extend_from_slice(&a.slots[j..]);
        }
        TemplateOrigin::Enumerated => panic!("enumerated is not a combination strategy"),
    }
    Template::new(slots, origin)
}

/// Samples up to `budget` distinct valid templates of length 11–20 by
/// combining pairs from `pool` with the three strategies.
///
/// Strategy, both templates and the splice point are drawn uniformly; invalid
/// or repeated candidates are rejected. Gives up after `max_attempts` draws.
pub fn extend_templates(
    pool: &[Template],
    g: &Grammar,
    inv: &SlotInventory,
    budget: usize,
    seed: u64,
    max_attempts: usize,
) -> Result<ExtendedTemplates, CorpusError> {
    use rand::{Rng, SeedableRng};
    let conj = inv.find(PosClass::Conjunction).ok_or(CorpusError::MissingSlot("conjunction"))?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    let mut out = Vec::new();
    let strategies = [TemplateOrigin::Appended, TemplateOrigin::Conjoined, TemplateOrigin::Embedded];
    let mut attempts = 0;
    while out.len() < budget && attempts < max_attempts && !pool.is_empty() {
        attempts += 1;
        let origin = strategies[rng.gen_range(0..3)];
        let a = &pool[rng.gen_range(0..pool.len())];
        let b = &pool[rng.gen_range(0..pool.len())];
        let j = if a.len() > 1 { rng.gen_range(1..a.len()) } else { 0 };
        let extra = usize::from(origin != TemplateOrigin::Appended);
        if !LONG_LENGTHS.contains(&(a.len() + b.len() + extra)) {
            continue;
        }
        let t = combine_templates(a, b, origin, conj, j);
        if seen.contains(&t.slots) {
            continue;
        }
        if t.is_valid(g, inv)? {
            seen.insert(t.slots.clone());
            out.push(t);
        }
    }
    Ok(ExtendedTemplates { short_of_budget: out.len() < budget, templates: out, attempts })
}
