use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grammar::Grammar;
use crate::language::Language;
use crate::seed::sub_seed;

use super::template::{enumerate_templates, extend_templates, SlotInventory, Template, DEFAULT_CANDIDATE_CAP};
use super::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Short,
    Medium,
    Long,
    Recursive,
    Embedded,
}

impl SplitName {
    pub const ALL: [SplitName; 6] =
        [SplitName::Train, SplitName::Short, SplitName::Medium, SplitName::Long, SplitName::Recursive, SplitName::Embedded];

    /// Splits scored for perplexity.
    pub const EVAL: [SplitName; 5] =
        [SplitName::Short, SplitName::Medium, SplitName::Long, SplitName::Recursive, SplitName::Embedded];

    pub fn name(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Short => "short",
            SplitName::Medium => "medium",
            SplitName::Long => "long",
            SplitName::Recursive => "recursive",
            SplitName::Embedded => "embedded",
        }
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SplitName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SplitName::ALL.iter().copied().find(|n| n.name() == s).ok_or_else(|| format!("unknown split `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub tokens: Vec<String>,
    pub config_id: String,
    pub template_id: String,
    pub split: SplitName,
}

impl SentenceRecord {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSplit {
    pub name: SplitName,
    pub config_id: String,
    pub seed: u64,
    pub records: Vec<SentenceRecord>,
}

impl CorpusSplit {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn length_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for r in &self.records {
            *h.entry(r.len()).or_insert(0) += 1;
        }
        h
    }

    /// Per-length template usage counts.
    pub fn template_counts(&self) -> BTreeMap<usize, BTreeMap<String, usize>> {
        let mut h: BTreeMap<usize, BTreeMap<String, usize>> = BTreeMap::new();
        for r in &self.records {
            *h.entry(r.len()).or_default().entry(r.template_id.clone()).or_insert(0) += 1;
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSizes {
    pub train: usize,
    pub short: usize,
    pub medium: usize,
    pub long: usize,
    /// Number of long templates sampled before instantiating the long split.
    pub long_templates: usize,
    pub targeted: usize,
    pub judgment: usize,
}

impl Default for SplitSizes {
    fn default() -> Self {
        SplitSizes { train: 80_000, short: 5_000, medium: 5_000, long: 5_000, long_templates: 20_000, targeted: 500, judgment: 500 }
    }
}

/// Splits `total` over `k` buckets as evenly as possible; the first
/// `total % k` buckets get one extra.
pub fn even_counts(total: usize, k: usize) -> Vec<usize> {
    if k == 0 {
        return Vec::new();
    }
    (0..k).map(|i| total / k + usize::from(i < total % k)).collect()
}

/// Enumerated and extended templates of one language, grouped by length.
#[derive(Debug, Clone)]
pub struct TemplateBank {
    pub by_length: BTreeMap<usize, Vec<Template>>,
    pub long_short_of_budget: bool,
}

impl TemplateBank {
    pub fn build(g: &Grammar, inv: &SlotInventory, sizes: &SplitSizes, seed: u64) -> Result<Self, CorpusError> {
        let base = enumerate_templates(g, inv, 3..=10, DEFAULT_CANDIDATE_CAP)?;
        let long = extend_templates(&base, g, inv, sizes.long_templates, sub_seed(seed, &["long-templates"]), sizes.long_templates * 200 + 10_000)?;
        let mut by_length: BTreeMap<usize, Vec<Template>> = BTreeMap::new();
        for t in base.into_iter().chain(long.templates) {
            by_length.entry(t.len()).or_default().push(t);
        }
        for ts in by_length.values_mut() {
            ts.sort();
        }
        Ok(TemplateBank { by_length, long_short_of_budget: long.short_of_budget })
    }

    pub fn templates(&self, len: usize) -> &[Template] {
        self.by_length.get(&len).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Draws sentences for templates, never repeating a sentence already drawn.
pub(crate) struct Instantiator<'a> {
    inv: &'a SlotInventory,
    seen: HashSet<Vec<String>>,
    config_id: String,
}

impl<'a> Instantiator<'a> {
    pub(crate) fn new(inv: &'a SlotInventory, config_id: &str) -> Self {
        Instantiator { inv, seen: HashSet::new(), config_id: config_id.to_string() }
    }

    fn capacity(&self, t: &Template) -> f64 {
        t.slots.iter().map(|&s| self.inv.get(s).tokens.len() as f64).product()
    }

    /// `count` new distinct instantiations of `t`.
    pub(crate) fn draw(
        &mut self,
        t: &Template,
        count: usize,
        split: SplitName,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<SentenceRecord>, CorpusError> {
        let template_id = self.inv.template_id(t);
        let mut out = Vec::with_capacity(count);
        let max_attempts = 50 * count + 1_000;
        let mut attempts = 0;
        while out.len() < count {
            attempts += 1;
            if attempts > max_attempts {
                return Err(CorpusError::Exhausted {
                    config: self.config_id.clone(),
                    template: template_id,
                    wanted: count,
                    capacity: self.capacity(t),
                });
            }
            let tokens: Vec<String> =
                t.slots.iter().map(|&s| self.inv.get(s).tokens.choose(rng).expect("slot has tokens").clone()).collect();
            if self.seen.insert(tokens.clone()) {
                out.push(SentenceRecord { tokens, config_id: self.config_id.clone(), template_id: template_id.clone(), split });
            }
        }
        Ok(out)
    }

    /// Fills `total` sentences spread evenly over `lengths`, and evenly over
    /// the templates within each length. Surplus template slots go to a
    /// random subset so no template is favoured systematically.
    pub(crate) fn fill_uniform(
        &mut self,
        bank: &TemplateBank,
        lengths: &[usize],
        total: usize,
        split: SplitName,
        seed: u64,
    ) -> Result<Vec<SentenceRecord>, CorpusError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(total);
        for (&len, n) in lengths.iter().zip(even_counts(total, lengths.len())) {
            let ts = bank.templates(len);
            if ts.is_empty() {
                return Err(CorpusError::NoTemplates { config: self.config_id.clone(), length: len });
            }
            let base = n / ts.len();
            let extra: HashSet<usize> = (0..ts.len()).choose_multiple(&mut rng, n % ts.len()).into_iter().collect();
            for (i, t) in ts.iter().enumerate() {
                let k = base + usize::from(extra.contains(&i));
                if k > 0 {
                    out.extend(self.draw(t, k, split, &mut rng)?);
                }
            }
        }
        out.shuffle(&mut rng);
        Ok(out)
    }
}

/// Train, short, medium and long splits of one language.
#[derive(Debug, Clone)]
pub struct BaseSplits {
    pub train: CorpusSplit,
    pub short: CorpusSplit,
    pub medium: CorpusSplit,
    pub long: CorpusSplit,
    /// Long-template sampling fell short of its budget.
    pub long_short_of_budget: bool,
}

impl BaseSplits {
    pub fn get(&self, name: SplitName) -> Option<&CorpusSplit> {
        match name {
            SplitName::Train => Some(&self.train),
            SplitName::Short => Some(&self.short),
            SplitName::Medium => Some(&self.medium),
            SplitName::Long => Some(&self.long),
            _ => None,
        }
    }
}

/// Builds the four base splits. Sentences are unique across all of them.
pub fn build_splits(lang: &Language, sizes: &SplitSizes, seed: u64) -> Result<BaseSplits, CorpusError> {
    let g = lang.grammar()?;
    let inv = SlotInventory::new(&g);
    let bank = TemplateBank::build(&g, &inv, sizes, seed)?;
    build_splits_from_bank(lang, &inv, &bank, sizes, seed)
}

pub fn build_splits_from_bank(
    lang: &Language,
    inv: &SlotInventory,
    bank: &TemplateBank,
    sizes: &SplitSizes,
    seed: u64,
) -> Result<BaseSplits, CorpusError> {
    let id = lang.id();
    let mut inst = Instantiator::new(inv, &id);
    let short_lengths: Vec<usize> = (3..=8).collect();
    let medium_lengths: Vec<usize> = vec![9, 10];
    let long_lengths: Vec<usize> =
        super::template::LONG_LENGTHS.filter(|l| !bank.templates(*l).is_empty()).collect();
    if long_lengths.is_empty() && sizes.long > 0 {
        return Err(CorpusError::NoTemplates { config: id, length: *super::template::LONG_LENGTHS.start() });
    }
    let mut make = |name: SplitName, lengths: &[usize], n: usize| -> Result<CorpusSplit, CorpusError> {
        let s = sub_seed(seed, &["split", name.name()]);
        let records = inst.fill_uniform(bank, lengths, n, name, s)?;
        Ok(CorpusSplit { name, config_id: id.clone(), seed: s, records })
    };
    let train = make(SplitName::Train, &short_lengths, sizes.train)?;
    let short = make(SplitName::Short, &short_lengths, sizes.short)?;
    let medium = make(SplitName::Medium, &medium_lengths, sizes.medium)?;
    let long = make(SplitName::Long, &long_lengths, sizes.long)?;
    Ok(BaseSplits { train, short, medium, long, long_short_of_budget: bank.long_short_of_budget })
}
