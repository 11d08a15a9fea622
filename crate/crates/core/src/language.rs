//! The 96 word-order configurations and the lexicons they induce.
//!
//! Parameter-to-slash mapping (bit index: what it fixes):
//!
//! | bit | parameter                | `0`                          | `1`                          |
//! |-----|--------------------------|------------------------------|------------------------------|
//! | 1   | subject–verb             | subject before verb (`\NP_SBJ`) | verb before subject (`/NP_SBJ`) |
//! | 2   | object–verb              | object before verb (`\NP_OBJ`, `\CP`) | verb before object (`/NP_OBJ`, `/CP`) |
//! | 3   | subject–object           | subject before object        | object before subject        |
//! | 4   | complementizer–clause    | `CP\S` (clause-final)        | `CP/S` (clause-initial)      |
//! | 5   | noun–adposition          | postposition `(NP/NP)\NP`    | preposition `(NP\NP)/NP`     |
//! | 6   | noun–adjective           | adjective first `NP/NP`      | noun first `NP\NP`           |
//! | 7   | relativizer position     | clause, relativizer, head    | head, relativizer, clause    |
//!
//! Bit 3 only decides which argument a verb consumes first when subject and
//! object sit on the same side of the verb; when they are on opposite sides
//! bits 1–2 already fix the order and bit 3 must agree with them. Case markers
//! are the same everywhere: `ga := NP_SBJ\NP`, `o := NP_OBJ\NP`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grammar::{Atom, Category, Grammar, GrammarError, LexEntry, Lexicon, ParseLimits, PosClass, Slash};

#[derive(Debug, thiserror::Error)]
pub enum LanguageError {
    #[error("`{0}` is not a 7-digit binary configuration id")]
    BadId(String),
    #[error("configuration {0} orders subject, object and verb cyclically")]
    Inconsistent(String),
    #[error("vocabulary has {actual} tokens, declared target is {target}")]
    VocabSize { actual: usize, target: usize },
    #[error("cannot draw {wanted} distinct pseudo-words")]
    PseudoWords { wanted: usize },
    #[error("token `{0}` is not in the vocabulary")]
    UnknownToken(String),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

/// One artificial language: seven binary word-order parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WordOrderConfig {
    bits: [bool; 7],
}

impl WordOrderConfig {
    pub fn new(bits: [bool; 7]) -> Result<Self, LanguageError> {
        let c = WordOrderConfig { bits };
        if !triple_is_consistent(bits[0], bits[1], bits[2]) {
            return Err(LanguageError::Inconsistent(c.id()));
        }
        Ok(c)
    }

    pub fn from_id(id: &str) -> Result<Self, LanguageError> {
        if id.len() != 7 || !id.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(LanguageError::BadId(id.to_string()));
        }
        let mut bits = [false; 7];
        for (b, ch) in bits.iter_mut().zip(id.bytes()) {
            *b = ch == b'1';
        }
        Self::new(bits)
    }

    pub fn id(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    /// Bit `i`, 1-indexed as in the parameter table.
    pub fn bit(&self, i: usize) -> bool {
        self.bits[i - 1]
    }

    pub fn bits(&self) -> [bool; 7] {
        self.bits
    }

    pub fn base_order(&self) -> BaseOrder {
        base_order(self)
    }

    /// The config with bit `i` flipped, if that is still a valid language.
    pub fn flipped(&self, i: usize) -> Option<WordOrderConfig> {
        let mut bits = self.bits;
        bits[i - 1] = !bits[i - 1];
        WordOrderConfig::new(bits).ok()
    }
}

impl fmt::Display for WordOrderConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl FromStr for WordOrderConfig {
    type Err = LanguageError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_id(s)
    }
}

impl Serialize for WordOrderConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.id())
    }
}

impl<'de> Deserialize<'de> for WordOrderConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Self::from_id(&s).map_err(serde::de::Error::custom)
    }
}

/// Bits 1–3 as pairwise precedences: S<V, O<V, S<O (each when the bit is 0).
/// Consistent iff they do not form a cycle.
fn triple_is_consistent(b1: bool, b2: bool, b3: bool) -> bool {
    let s_before_v = !b1;
    let o_before_v = !b2;
    let s_before_o = !b3;
    // cycles: S<V<O<S and S<O<V<S
    let cycle1 = s_before_v && !o_before_v && !s_before_o;
    let cycle2 = s_before_o && o_before_v && !s_before_v;
    !(cycle1 || cycle2)
}

/// All 96 valid configurations in lexicographic id order.
pub fn enumerate_configs() -> Vec<WordOrderConfig> {
    (0u32..128)
        .filter_map(|n| {
            let mut bits = [false; 7];
            for (i, b) in bits.iter_mut().enumerate() {
                *b = (n >> (6 - i)) & 1 == 1;
            }
            WordOrderConfig::new(bits).ok()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BaseOrder {
    SOV,
    OSV,
    SVO,
    OVS,
    VSO,
    VOS,
}

impl BaseOrder {
    /// Column order used in aggregate tables.
    pub const ALL: [BaseOrder; 6] =
        [BaseOrder::SOV, BaseOrder::OSV, BaseOrder::SVO, BaseOrder::OVS, BaseOrder::VSO, BaseOrder::VOS];

    pub fn name(self) -> &'static str {
        match self {
            BaseOrder::SOV => "SOV",
            BaseOrder::OSV => "OSV",
            BaseOrder::SVO => "SVO",
            BaseOrder::OVS => "OVS",
            BaseOrder::VSO => "VSO",
            BaseOrder::VOS => "VOS",
        }
    }
}

impl fmt::Display for BaseOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaseOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BaseOrder::ALL.iter().copied().find(|b| b.name() == s).ok_or_else(|| format!("unknown base order `{s}`"))
    }
}

/// The total order of S, O and V fixed by bits 1–3.
pub fn base_order(config: &WordOrderConfig) -> BaseOrder {
    let s_before_v = !config.bit(1);
    let o_before_v = !config.bit(2);
    let s_before_o = !config.bit(3);
    // rank = number of elements preceding
    let s = (!s_before_v) as u8 + (!s_before_o) as u8;
    let o = (!o_before_v) as u8 + s_before_o as u8;
    let v = s_before_v as u8 + o_before_v as u8;
    let mut order = [('S', s), ('O', o), ('V', v)];
    order.sort_by_key(|&(_, r)| r);
    let word: String = order.iter().map(|&(c, _)| c).collect();
    word.parse().expect("valid configurations have a total order")
}

pub const SUBJECT_MARKER: &str = "ga";
pub const OBJECT_MARKER: &str = "o";
pub const COMPLEMENTIZER: &str = "that";
pub const OBJECT_RELATIVIZER: &str = "whom";
pub const SUBJECT_RELATIVIZER: &str = "who";
pub const CONJUNCTION: &str = "and";
pub const BOS: &str = "<s>";
pub const PAD: &str = "<pad>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

/// Reserved tokens, in vocabulary order (specials first).
pub const RESERVED: [&str; 10] = [
    BOS,
    PAD,
    EOS,
    UNK,
    SUBJECT_MARKER,
    OBJECT_MARKER,
    COMPLEMENTIZER,
    OBJECT_RELATIVIZER,
    SUBJECT_RELATIVIZER,
    CONJUNCTION,
];

/// Sizes of the open word classes and the pseudo-word generator seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabSpec {
    pub nouns: usize,
    pub transitive_verbs: usize,
    pub intransitive_verbs: usize,
    pub clause_verbs: usize,
    pub adjectives: usize,
    pub adpositions: usize,
    pub seed: u64,
    pub target_size: usize,
}

impl Default for VocabSpec {
    fn default() -> Self {
        VocabSpec {
            nouns: 200,
            transitive_verbs: 80,
            intransitive_verbs: 80,
            clause_verbs: 40,
            adjectives: 60,
            adpositions: 30,
            seed: 0x5eed,
            target_size: 500,
        }
    }
}

impl VocabSpec {
    pub fn open_class_total(&self) -> usize {
        self.nouns + self.transitive_verbs + self.intransitive_verbs + self.clause_verbs + self.adjectives + self.adpositions
    }

    pub fn total(&self) -> usize {
        self.open_class_total() + RESERVED.len()
    }

    fn class_counts(&self) -> [(PosClass, usize); 6] {
        [
            (PosClass::Noun, self.nouns),
            (PosClass::TransitiveVerb, self.transitive_verbs),
            (PosClass::IntransitiveVerb, self.intransitive_verbs),
            (PosClass::ClauseVerb, self.clause_verbs),
            (PosClass::Adjective, self.adjectives),
            (PosClass::Adposition, self.adpositions),
        ]
    }
}

/// Token ↔ id map shared by the corpus files and the language models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn new(tokens: Vec<String>) -> Self {
        let ids = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocabulary { tokens, ids }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn eos(&self) -> u32 {
        self.ids[EOS]
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<u32>, LanguageError> {
        tokens
            .iter()
            .map(|t| self.id(t.as_ref()).ok_or_else(|| LanguageError::UnknownToken(t.as_ref().to_string())))
            .collect()
    }
}

const ONSETS: [&str; 16] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sh", "ch"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
const CODAS: [&str; 5] = ["", "", "n", "l", "r"];

/// `n` distinct lowercase pseudo-words of 3–8 letters, none reserved.
pub fn pseudo_words(n: usize, seed: u64) -> Result<Vec<String>, LanguageError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reserved: BTreeSet<&str> = RESERVED.iter().copied().collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        if attempts > n * 1000 + 10_000 {
            return Err(LanguageError::PseudoWords { wanted: n });
        }
        let syllables = rng.gen_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS.choose(&mut rng).unwrap());
            w.push_str(VOWELS.choose(&mut rng).unwrap());
            w.push_str(CODAS.choose(&mut rng).unwrap());
        }
        if !(3..=8).contains(&w.len()) || reserved.contains(w.as_str()) || !seen.insert(w.clone()) {
            continue;
        }
        out.push(w);
    }
    Ok(out)
}

/// Slash for a verb's subject and object arguments under `config`.
fn argument_slashes(config: &WordOrderConfig) -> (Slash, Slash) {
    let sbj = if config.bit(1) { Slash::Forward } else { Slash::Backward };
    let obj = if config.bit(2) { Slash::Forward } else { Slash::Backward };
    (sbj, obj)
}

/// Category of a two-place verb whose non-subject argument is `complement`.
fn two_place_verb(config: &WordOrderConfig, complement: Category) -> Category {
    let (sbj, obj) = argument_slashes(config);
    let s = Category::atom(Atom::S);
    let subject = Category::atom(Atom::NpSbj);
    // the argument nearer the verb is consumed first (outermost)
    let complement_first = if sbj != obj {
        true
    } else if sbj == Slash::Backward {
        !config.bit(3)
    } else {
        config.bit(3)
    };
    if complement_first {
        Category::functor(Category::functor(s, sbj, subject), obj, complement)
    } else {
        Category::functor(Category::functor(s, obj, complement), sbj, subject)
    }
}

/// Lexical categories for one configuration, by class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryScheme {
    pub noun: Category,
    pub transitive_verb: Category,
    pub intransitive_verb: Category,
    pub clause_verb: Category,
    pub adjective: Category,
    pub adposition: Category,
    pub subject_marker: Category,
    pub object_marker: Category,
    pub complementizer: Category,
    pub object_relativizer: Category,
    pub subject_relativizer: Category,
    pub conjunction: Category,
}

impl CategoryScheme {
    pub fn for_config(config: &WordOrderConfig) -> Self {
        use Atom::*;
        let a = Category::atom;
        let (sbj, obj) = argument_slashes(config);
        let np_mod = |s: Slash| Category::functor(a(Np), s, a(Np));
        let (head_side, clause_side) = if config.bit(7) {
            (Slash::Backward, Slash::Forward)
        } else {
            (Slash::Forward, Slash::Backward)
        };
        let relativizer = |gap_clause: Category| {
            Category::functor(Category::functor(a(NpSbj), head_side, a(NpSbj)), clause_side, gap_clause)
        };
        CategoryScheme {
            noun: a(Np),
            transitive_verb: two_place_verb(config, a(NpObj)),
            intransitive_verb: Category::functor(a(S), sbj, a(NpSbj)),
            clause_verb: two_place_verb(config, a(Cp)),
            adjective: if config.bit(6) { np_mod(Slash::Backward) } else { np_mod(Slash::Forward) },
            adposition: if config.bit(5) {
                Category::fwd(np_mod(Slash::Backward), a(Np))
            } else {
                Category::bwd(np_mod(Slash::Forward), a(Np))
            },
            subject_marker: Category::bwd(a(NpSbj), a(Np)),
            object_marker: Category::bwd(a(NpObj), a(Np)),
            complementizer: Category::functor(a(Cp), if config.bit(4) { Slash::Forward } else { Slash::Backward }, a(S)),
            object_relativizer: relativizer(Category::functor(a(S), obj, a(NpObj))),
            subject_relativizer: relativizer(Category::functor(a(S), sbj, a(NpSbj))),
            conjunction: a(Conj),
        }
    }
}

/// A fully specified artificial language.
#[derive(Debug, Clone)]
pub struct Language {
    pub config: WordOrderConfig,
    pub vocab_spec: VocabSpec,
    pub lexicon: Lexicon,
    pub vocabulary: Vocabulary,
}

impl Language {
    pub fn build(config: WordOrderConfig, vocab: &VocabSpec) -> Result<Self, LanguageError> {
        let lexicon = build_lexicon(&config, vocab)?;
        let mut tokens: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        tokens.extend(open_class_words(vocab)?.into_iter().flat_map(|(_, ws)| ws));
        let vocabulary = Vocabulary::new(tokens);
        if vocabulary.len() != vocab.target_size {
            return Err(LanguageError::VocabSize { actual: vocabulary.len(), target: vocab.target_size });
        }
        Ok(Language { config, vocab_spec: vocab.clone(), lexicon, vocabulary })
    }

    pub fn grammar(&self) -> Result<Grammar, LanguageError> {
        Ok(Grammar::new(self.lexicon.clone(), ParseLimits::default())?)
    }

    pub fn id(&self) -> String {
        self.config.id()
    }
}

fn open_class_words(vocab: &VocabSpec) -> Result<Vec<(PosClass, Vec<String>)>, LanguageError> {
    let mut words = pseudo_words(vocab.open_class_total(), vocab.seed)?.into_iter();
    Ok(vocab.class_counts().iter().map(|&(pos, n)| (pos, words.by_ref().take(n).collect())).collect())
}

/// Lexicon of `config`: pseudo-words per open class plus the reserved function words.
pub fn build_lexicon(config: &WordOrderConfig, vocab: &VocabSpec) -> Result<Lexicon, LanguageError> {
    if vocab.total() != vocab.target_size {
        return Err(LanguageError::VocabSize { actual: vocab.total(), target: vocab.target_size });
    }
    let scheme = CategoryScheme::for_config(config);
    let mut lex = Lexicon::default();
    for (pos, words) in open_class_words(vocab)? {
        let cat = match pos {
            PosClass::Noun => &scheme.noun,
            PosClass::TransitiveVerb => &scheme.transitive_verb,
            PosClass::IntransitiveVerb => &scheme.intransitive_verb,
            PosClass::ClauseVerb => &scheme.clause_verb,
            PosClass::Adjective => &scheme.adjective,
            PosClass::Adposition => &scheme.adposition,
            _ => unreachable!("open classes only"),
        };
        for w in words {
            lex.push(LexEntry::new(w, cat.clone(), pos));
        }
    }
    lex.push(LexEntry::new(SUBJECT_MARKER, scheme.subject_marker, PosClass::SubjectMarker));
    lex.push(LexEntry::new(OBJECT_MARKER, scheme.object_marker, PosClass::ObjectMarker));
    lex.push(LexEntry::new(COMPLEMENTIZER, scheme.complementizer, PosClass::Complementizer));
    lex.push(LexEntry::new(OBJECT_RELATIVIZER, scheme.object_relativizer, PosClass::Relativizer));
    lex.push(LexEntry::new(SUBJECT_RELATIVIZER, scheme.subject_relativizer, PosClass::Relativizer));
    lex.push(LexEntry::new(CONJUNCTION, scheme.conjunction, PosClass::Conjunction));
    Ok(lex)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(id: &str) -> WordOrderConfig {
        id.parse().unwrap()
    }

    #[test]
    fn ninety_six_configs_in_id_order() {
        let all = enumerate_configs();
        assert_eq!(all.len(), 96);
        assert_eq!(all[0].id(), "0000000");
        assert!(all.windows(2).all(|w| w[0].id() < w[1].id()));
    }

    #[test]
    fn id_round_trip_and_validation() {
        for c in enumerate_configs() {
            assert_eq!(WordOrderConfig::from_id(&c.id()).unwrap(), c);
        }
        assert!(matches!(WordOrderConfig::from_id("0110000"), Err(LanguageError::Inconsistent(_))));
        assert!(matches!(WordOrderConfig::from_id("01x0000"), Err(LanguageError::BadId(_))));
        assert!(WordOrderConfig::from_id("010").is_err());
    }

    #[test]
    fn anchor_base_orders() {
        assert_eq!(base_order(&cfg("0000000")), BaseOrder::SOV);
        assert_eq!(base_order(&cfg("0101101")), BaseOrder::SVO);
        assert_eq!(base_order(&cfg("1100000")), BaseOrder::VSO);
        assert_eq!(base_order(&cfg("0010000")), BaseOrder::OSV);
        assert_eq!(base_order(&cfg("1010000")), BaseOrder::OVS);
        assert_eq!(base_order(&cfg("1110000")), BaseOrder::VOS);
    }

    #[test]
    fn english_like_categories() {
        let s = CategoryScheme::for_config(&cfg("0101101"));
        assert_eq!(s.transitive_verb.to_string(), "(S\\NP_SBJ)/NP_OBJ");
        assert_eq!(s.object_relativizer.to_string(), "(NP_SBJ\\NP_SBJ)/(S/NP_OBJ)");
        assert_eq!(s.clause_verb.to_string(), "(S\\NP_SBJ)/CP");
        assert_eq!(s.complementizer.to_string(), "CP/S");
        assert_eq!(s.adjective.to_string(), "NP/NP");
    }

    #[test]
    fn japanese_like_categories() {
        let s = CategoryScheme::for_config(&cfg("0000000"));
        assert_eq!(s.transitive_verb.to_string(), "(S\\NP_SBJ)\\NP_OBJ");
        assert_eq!(s.clause_verb.to_string(), "(S\\NP_SBJ)\\CP");
        assert_eq!(s.complementizer.to_string(), "CP\\S");
        assert_eq!(s.object_relativizer.to_string(), "(NP_SBJ/NP_SBJ)\\(S\\NP_OBJ)");
    }

    #[test]
    fn verb_spines_follow_base_order() {
        let tv = |id: &str| CategoryScheme::for_config(&cfg(id)).transitive_verb.to_string();
        assert_eq!(tv("0010000"), "(S\\NP_OBJ)\\NP_SBJ"); // OSV
        assert_eq!(tv("1100000"), "(S/NP_OBJ)/NP_SBJ"); // VSO
        assert_eq!(tv("1110000"), "(S/NP_SBJ)/NP_OBJ"); // VOS
        assert_eq!(tv("1010000"), "(S/NP_SBJ)\\NP_OBJ"); // OVS
    }

    #[test]
    fn vocabulary_is_exactly_the_target() {
        let lang = Language::build(cfg("0101101"), &VocabSpec::default()).unwrap();
        assert_eq!(lang.vocabulary.len(), 500);
        assert_eq!(lang.vocabulary.eos(), 2);
        for w in pseudo_words(490, VocabSpec::default().seed).unwrap() {
            assert!((3..=8).contains(&w.len()) && w.chars().all(|c| c.is_ascii_lowercase()));
            assert!(!RESERVED.contains(&w.as_str()));
        }
        let bad = VocabSpec { nouns: 10, ..VocabSpec::default() };
        assert!(matches!(build_lexicon(&cfg("0000000"), &bad), Err(LanguageError::VocabSize { .. })));
    }

    #[test]
    fn sixteen_configs_per_base_order() {
        let all = enumerate_configs();
        for b in BaseOrder::ALL {
            assert_eq!(all.iter().filter(|c| c.base_order() == b).count(), 16, "{b}");
        }
    }

    #[test]
    fn rejected_ids_are_exactly_cyclic_triples() {
        // brute force: a triple is valid iff some permutation of S,O,V satisfies all three precedences
        let orders = ["SOV", "OSV", "SVO", "OVS", "VSO", "VOS"];
        let before = |o: &str, a: char, b: char| o.find(a) < o.find(b);
        let accepted: BTreeSet<String> = enumerate_configs().iter().map(|c| c.id()).collect();
        for n in 0u32..128 {
            let id = format!("{n:07b}");
            let b: Vec<bool> = id.bytes().map(|c| c == b'1').collect();
            let total = orders.iter().any(|o| {
                before(o, 'S', 'V') != b[0] && before(o, 'O', 'V') != b[1] && before(o, 'S', 'O') != b[2]
            });
            assert_eq!(accepted.contains(&id), total, "{id}");
        }
    }

    #[test]
    fn single_bit_flip_is_local() {
        let governed = |s: &CategoryScheme, bit: usize| -> Vec<Category> {
            match bit {
                4 => vec![s.complementizer.clone()],
                5 => vec![s.adposition.clone()],
                6 => vec![s.adjective.clone()],
                7 => vec![s.object_relativizer.clone(), s.subject_relativizer.clone()],
                _ => unreachable!(),
            }
        };
        let all = |s: &CategoryScheme| {
            vec![
                s.noun.clone(),
                s.transitive_verb.clone(),
                s.intransitive_verb.clone(),
                s.clause_verb.clone(),
                s.adjective.clone(),
                s.adposition.clone(),
                s.subject_marker.clone(),
                s.object_marker.clone(),
                s.complementizer.clone(),
                s.object_relativizer.clone(),
                s.subject_relativizer.clone(),
                s.conjunction.clone(),
            ]
        };
        for c in enumerate_configs() {
            for bit in 4..=7 {
                let d = c.flipped(bit).unwrap();
                let (a, b) = (CategoryScheme::for_config(&c), CategoryScheme::for_config(&d));
                let changed: Vec<Category> =
                    all(&a).into_iter().zip(all(&b)).filter(|(x, y)| x != y).map(|(x, _)| x).collect();
                assert_eq!(changed, governed(&a, bit), "{c} bit {bit}");
            }
        }
    }

    #[test]
    fn example_orders_are_grammatical_only_in_their_own_language() {
        let vocab = VocabSpec::default();
        let words = |lex: &Lexicon, pos| lex.tokens_of(pos)[0].to_string();
        let lex0 = build_lexicon(&cfg("0000000"), &vocab).unwrap();
        let lex1 = build_lexicon(&cfg("0101101"), &vocab).unwrap();
        let (ken, john, lisa) = {
            let n = lex0.tokens_of(PosClass::Noun);
            (n[0].to_string(), n[1].to_string(), n[2].to_string())
        };
        let touch = words(&lex0, PosClass::TransitiveVerb);
        let said = words(&lex0, PosClass::ClauseVerb);
        let head_final: Vec<&str> = vec![&ken, "ga", &john, "ga", &lisa, "o", &touch, "that", &said];
        let head_initial: Vec<&str> = vec![&ken, "ga", &said, "that", &john, "ga", &touch, &lisa, "o"];
        let g0 = Grammar::with_defaults(lex0).unwrap();
        let g1 = Grammar::with_defaults(lex1).unwrap();
        assert!(g0.is_grammatical(&head_final).unwrap());
        assert!(!g1.is_grammatical(&head_final).unwrap());
        assert!(g1.is_grammatical(&head_initial).unwrap());
        assert!(!g0.is_grammatical(&head_initial).unwrap());
    }

    #[test]
    fn lexicon_is_deterministic() {
        let a = build_lexicon(&cfg("1100101"), &VocabSpec::default()).unwrap();
        let b = build_lexicon(&cfg("1100101"), &VocabSpec::default()).unwrap();
        assert_eq!(a, b);
    }
}
