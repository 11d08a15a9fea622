use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grammar::{Grammar, Lexicon, PosClass};

use super::splits::{CorpusSplit, SentenceRecord};
use super::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JudgmentKind {
    /// Swap one subject marker for an object marker or vice versa.
    Case,
    /// Replace one transitive verb by an intransitive one.
    Verb,
}

impl JudgmentKind {
    pub const ALL: [JudgmentKind; 2] = [JudgmentKind::Case, JudgmentKind::Verb];

    pub fn name(self) -> &'static str {
        match self {
            JudgmentKind::Case => "case",
            JudgmentKind::Verb => "verb",
        }
    }
}

impl fmt::Display for JudgmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for JudgmentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        JudgmentKind::ALL.iter().copied().find(|k| k.name() == s).ok_or_else(|| format!("unknown judgment kind `{s}`"))
    }
}

/// A minimal pair: the two sides differ in the token at `position`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentPair {
    pub grammatical: SentenceRecord,
    pub ungrammatical: SentenceRecord,
    pub kind: JudgmentKind,
    pub position: usize,
}

#[derive(Debug, Clone)]
pub struct JudgmentSet {
    pub kind: JudgmentKind,
    pub pairs: Vec<JudgmentPair>,
    /// Fewer than the requested number of sentences had a usable edit site.
    pub short_of_target: bool,
}

fn has_pos(lex: &Lexicon, token: &str, pos: PosClass) -> bool {
    lex.lookup(token).any(|e| e.pos == pos)
}

/// Candidate edits of one sentence: `(position, replacement)`, in random order.
fn edits(lex: &Lexicon, tokens: &[String], kind: JudgmentKind, rng: &mut ChaCha8Rng) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    match kind {
        JudgmentKind::Case => {
            let ga = lex.tokens_of(PosClass::SubjectMarker);
            let o = lex.tokens_of(PosClass::ObjectMarker);
            for (i, t) in tokens.iter().enumerate() {
                if has_pos(lex, t, PosClass::SubjectMarker) {
                    out.extend(o.first().map(|r| (i, r.to_string())));
                } else if has_pos(lex, t, PosClass::ObjectMarker) {
                    out.extend(ga.first().map(|r| (i, r.to_string())));
                }
            }
        }
        JudgmentKind::Verb => {
            let iv = lex.tokens_of(PosClass::IntransitiveVerb);
            for (i, t) in tokens.iter().enumerate() {
                if has_pos(lex, t, PosClass::TransitiveVerb) {
                    if let Some(r) = iv.choose(rng) {
                        out.push((i, r.to_string()));
                    }
                }
            }
        }
    }
    out.shuffle(rng);
    out
}

/// Samples up to `n` sentences of `source` and corrupts one edit site in
/// each. Edits that leave the sentence grammatical are not used; sentences
/// with no usable site are skipped.
pub fn build_judgment_pairs(
    g: &Grammar,
    source: &CorpusSplit,
    kind: JudgmentKind,
    n: usize,
    seed: u64,
) -> Result<JudgmentSet, CorpusError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..source.records.len()).collect();
    order.shuffle(&mut rng);
    let mut pairs = Vec::with_capacity(n);
    for idx in order {
        if pairs.len() == n {
            break;
        }
        let rec = &source.records[idx];
        for (pos, replacement) in edits(g.lexicon(), &rec.tokens, kind, &mut rng) {
            let mut bad = rec.clone();
            bad.tokens[pos] = replacement;
            if !g.is_grammatical(&bad.tokens)? {
                pairs.push(JudgmentPair { grammatical: rec.clone(), ungrammatical: bad, kind, position: pos });
                break;
            }
        }
    }
    Ok(JudgmentSet { kind, short_of_target: pairs.len() < n, pairs })
}
