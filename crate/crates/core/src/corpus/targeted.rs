use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::grammar::PosClass;
use crate::language::{BaseOrder, Language, COMPLEMENTIZER, OBJECT_RELATIVIZER};
use crate::seed::sub_seed;

use super::splits::{CorpusSplit, Instantiator, SplitName};
use super::template::{SlotInventory, Template, TemplateOrigin};
use super::CorpusError;

/// Slot indices the targeted constructions are built from.
struct Parts {
    noun: u8,
    ga: u8,
    o: u8,
    tv: u8,
    cv: u8,
    comp: u8,
    rel: u8,
}

impl Parts {
    fn find(inv: &SlotInventory) -> Result<Self, CorpusError> {
        let by_pos = |p: PosClass, name: &'static str| inv.find(p).ok_or(CorpusError::MissingSlot(name));
        let by_token = |t: &str, name: &'static str| {
            inv.slots()
                .iter()
                .position(|s| s.tokens.iter().any(|x| x == t))
                .map(|i| i as u8)
                .ok_or(CorpusError::MissingSlot(name))
        };
        Ok(Parts {
            noun: by_pos(PosClass::Noun, "noun")?,
            ga: by_pos(PosClass::SubjectMarker, "subject marker")?,
            o: by_pos(PosClass::ObjectMarker, "object marker")?,
            tv: by_pos(PosClass::TransitiveVerb, "transitive verb")?,
            cv: by_pos(PosClass::ClauseVerb, "clause verb")?,
            comp: by_token(COMPLEMENTIZER, "complementizer")?,
            rel: by_token(OBJECT_RELATIVIZER, "object relativizer")?,
        })
    }
}

/// Word-order-aware linearisation of the construction skeletons.
struct Linearizer {
    base: BaseOrder,
    verb_first: bool,
    comp_first: bool,
    head_first: bool,
}

impl Linearizer {
    fn new(lang: &Language) -> Self {
        let c = lang.config;
        Linearizer { base: c.base_order(), verb_first: c.bit(1), comp_first: c.bit(4), head_first: c.bit(7) }
    }

    fn clause(&self, subj: Vec<u8>, obj: Vec<u8>, verb: Vec<u8>) -> Vec<u8> {
        let mut out = Vec::new();
        for ch in self.base.name().chars() {
            out.extend_from_slice(match ch {
                'S' => &subj,
                'O' => &obj,
                _ => &verb,
            });
        }
        out
    }

    /// Clause missing its object: only subject and verb remain.
    fn gap_clause(&self, subj: Vec<u8>, verb: Vec<u8>) -> Vec<u8> {
        if self.verb_first {
            [verb, subj].concat()
        } else {
            [subj, verb].concat()
        }
    }

    fn relative(&self, head: Vec<u8>, rel: u8, clause: Vec<u8>) -> Vec<u8> {
        if self.head_first {
            [head, vec![rel], clause].concat()
        } else {
            [clause, vec![rel], head].concat()
        }
    }

    fn complement(&self, comp: u8, clause: Vec<u8>) -> Vec<u8> {
        if self.comp_first {
            [vec![comp], clause].concat()
        } else {
            [clause, vec![comp]].concat()
        }
    }
}

/// Two nested object relatives on the subject:
/// `N ga REL [N ga REL [N ga TV] TV] TV N o` in the head-initial SVO language.
pub fn recursive_template(lang: &Language, inv: &SlotInventory) -> Result<Template, CorpusError> {
    let p = Parts::find(inv)?;
    let l = Linearizer::new(lang);
    let subj = || vec![p.noun, p.ga];
    let inner = l.gap_clause(subj(), vec![p.tv]);
    let np2 = l.relative(subj(), p.rel, inner);
    let outer = l.gap_clause(np2, vec![p.tv]);
    let np1 = l.relative(subj(), p.rel, outer);
    Ok(Template::new(l.clause(np1, vec![p.noun, p.o], vec![p.tv]), TemplateOrigin::Enumerated))
}

/// An object relative whose gap sits inside a complement clause:
/// `N ga REL [N ga CV that [N ga TV]] TV N o` in the head-initial SVO language.
pub fn embedded_template(lang: &Language, inv: &SlotInventory) -> Result<Template, CorpusError> {
    let p = Parts::find(inv)?;
    let l = Linearizer::new(lang);
    let subj = || vec![p.noun, p.ga];
    let gapped = l.gap_clause(subj(), vec![p.tv]);
    let cp = l.complement(p.comp, gapped);
    let rc = l.clause(subj(), cp, vec![p.cv]);
    let np1 = l.relative(subj(), p.rel, rc);
    Ok(Template::new(l.clause(np1, vec![p.noun, p.o], vec![p.tv]), TemplateOrigin::Enumerated))
}

#[derive(Debug, Clone)]
pub struct TargetedSets {
    pub recursive: CorpusSplit,
    pub embedded: CorpusSplit,
}

/// Instantiates one targeted construction `n` times with distinct sentences.
pub fn build_targeted_split(lang: &Language, name: SplitName, n: usize, seed: u64) -> Result<CorpusSplit, CorpusError> {
    let g = lang.grammar()?;
    let inv = SlotInventory::new(&g);
    let t = match name {
        SplitName::Recursive => recursive_template(lang, &inv)?,
        SplitName::Embedded => embedded_template(lang, &inv)?,
        other => panic!("{other} is not a targeted split"),
    };
    if !t.is_valid(&g, &inv)? {
        return Err(CorpusError::Unsatisfiable { config: lang.id(), construction: name.name() });
    }
    let s = sub_seed(seed, &["targeted", name.name()]);
    let mut rng = ChaCha8Rng::seed_from_u64(s);
    let records = Instantiator::new(&inv, &lang.id()).draw(&t, n, name, &mut rng)?;
    Ok(CorpusSplit { name, config_id: lang.id(), seed: s, records })
}

/// Both targeted sets. Fails if either construction is not derivable in `lang`.
pub fn build_targeted(lang: &Language, n: usize, seed: u64) -> Result<TargetedSets, CorpusError> {
    Ok(TargetedSets {
        recursive: build_targeted_split(lang, SplitName::Recursive, n, seed)?,
        embedded: build_targeted_split(lang, SplitName::Embedded, n, seed)?,
    })
}
