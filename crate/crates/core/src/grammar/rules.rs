use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::category::{Atom, Category, Slash};

/// The closed rule inventory of the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleKind {
    ForwardApplication,
    BackwardApplication,
    ForwardComposition,
    BackwardComposition,
    Coordination,
    WeakGeneralizedPermutation,
}

impl RuleKind {
    pub const ALL: [RuleKind; 6] = [
        RuleKind::ForwardApplication,
        RuleKind::BackwardApplication,
        RuleKind::ForwardComposition,
        RuleKind::BackwardComposition,
        RuleKind::Coordination,
        RuleKind::WeakGeneralizedPermutation,
    ];

    /// Rules that combine two adjacent constituents.
    pub const BINARY: [RuleKind; 5] = [
        RuleKind::ForwardApplication,
        RuleKind::BackwardApplication,
        RuleKind::ForwardComposition,
        RuleKind::BackwardComposition,
        RuleKind::Coordination,
    ];

    pub fn is_binary(self) -> bool {
        self != RuleKind::WeakGeneralizedPermutation
    }

    pub fn short_name(self) -> &'static str {
        match self {
            RuleKind::ForwardApplication => "fa",
            RuleKind::BackwardApplication => "ba",
            RuleKind::ForwardComposition => "fc",
            RuleKind::BackwardComposition => "bc",
            RuleKind::Coordination => "coord",
            RuleKind::WeakGeneralizedPermutation => "perm",
        }
    }

    /// Derivation cost used to pick a canonical derivation: composition and
    /// permutation steps are counted, application and coordination are free.
    pub(crate) fn cost(self) -> u32 {
        match self {
            RuleKind::ForwardComposition
            | RuleKind::BackwardComposition
            | RuleKind::WeakGeneralizedPermutation => 1,
            _ => 0,
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

/// Categories a conjunction may coordinate: clauses, noun phrases and
/// noun modifiers.
pub fn is_coordinable(cat: &Category) -> bool {
    match cat {
        Category::Atom(a) => matches!(a, Atom::S | Atom::Np),
        Category::Functor { result, arg, .. } => result.is(Atom::Np) && arg.is(Atom::Np),
    }
}

/// Applies a binary rule schema. Non-matching inputs yield `None`.
pub fn apply_binary(rule: RuleKind, left: &Category, right: &Category) -> Option<Category> {
    match rule {
        // X/Y  Y  => X
        RuleKind::ForwardApplication => match left.split()? {
            (x, Slash::Forward, y) if y == right => Some(x.clone()),
            _ => None,
        },
        // Y  X\Y  => X
        RuleKind::BackwardApplication => match right.split()? {
            (x, Slash::Backward, y) if y == left => Some(x.clone()),
            _ => None,
        },
        // X/Y  Y/Z  => X/Z
        RuleKind::ForwardComposition => {
            let (x, s1, y) = left.split()?;
            let (y2, s2, z) = right.split()?;
            (s1 == Slash::Forward && s2 == Slash::Forward && y == y2)
                .then(|| Category::fwd(x.clone(), z.clone()))
        }
        // Y\Z  X\Y  => X\Z
        RuleKind::BackwardComposition => {
            let (y, s1, z) = left.split()?;
            let (x, s2, y2) = right.split()?;
            (s1 == Slash::Backward && s2 == Slash::Backward && y == y2)
                .then(|| Category::bwd(x.clone(), z.clone()))
        }
        // CONJ  X  => X\X, which then attaches to a left conjunct by backward application
        RuleKind::Coordination => (left.is(Atom::Conj) && is_coordinable(right))
            .then(|| Category::bwd(right.clone(), right.clone())),
        RuleKind::WeakGeneralizedPermutation => None,
    }
}

/// Weak generalized permutation: every non-identity cyclic rotation of the
/// argument spine, each argument keeping its own slash.
///
/// With `deep` set, rotations of every inner sub-spine (outer arguments held
/// fixed) are added as well.
pub fn apply_permutation(cat: &Category, deep: bool) -> BTreeSet<Category> {
    let (result, args) = cat.spine();
    let mut out = BTreeSet::new();
    let n = args.len();
    if n < 2 {
        return out;
    }
    let mut rotate_prefix = |m: usize| {
        for shift in 1..m {
            // bring the outermost `shift` arguments of the prefix to the front
            let mut rotated: Vec<(Slash, &Category)> = Vec::with_capacity(n);
            rotated.extend_from_slice(&args[m - shift..m]);
            rotated.extend_from_slice(&args[..m - shift]);
            rotated.extend_from_slice(&args[m..]);
            let c = Category::from_spine(result, &rotated);
            if &c != cat {
                out.insert(c);
            }
        }
    };
    rotate_prefix(n);
    if deep {
        for m in 2..n {
            rotate_prefix(m);
        }
    }
    out
}
