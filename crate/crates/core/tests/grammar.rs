mod common;

use proptest::prelude::*;
use wordorder_core::grammar::*;

fn cat(s: &str) -> Category {
    s.parse().unwrap()
}

fn toy_lexicon() -> Lexicon {
    "man\tNP\tnoun
big\tNP/NP\tadjective
ga\tNP_SBJ\\NP\tsubject_marker
o\tNP_OBJ\\NP\tobject_marker
met\t(S\\NP_SBJ)/NP_OBJ\ttransitive_verb
walked\tS\\NP_SBJ\tintransitive_verb
whom\t(NP_SBJ\\NP_SBJ)/(S/NP_OBJ)\trelativizer
and\tCONJ\tconjunction
"
    .parse()
    .unwrap()
}

fn all_sequences(words: &[&'static str], len: usize) -> Vec<Vec<&'static str>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|p| words.iter().map(move |w| [p.clone(), vec![*w]].concat()))
            .collect();
    }
    out
}

#[test]
fn chart_agrees_with_bracketing_oracle_up_to_length_four() {
    let lex = toy_lexicon();
    let g = Grammar::with_defaults(lex.clone()).unwrap();
    let words: Vec<&'static str> = vec!["man", "big", "ga", "o", "met", "walked", "whom", "and"];
    let mut positives = 0;
    for len in 1..=4 {
        for seq in all_sequences(&words, len) {
            let expected = common::brute_force_grammatical(&seq, &lex);
            assert_eq!(g.is_grammatical(&seq).unwrap(), expected, "{seq:?}");
            positives += usize::from(expected);
        }
    }
    assert!(positives > 0);
}

#[test]
fn length_three_toy_sequences_match_oracle_over_six_words() {
    let lex: Lexicon = "man\tNP\tnoun
ga\tNP_SBJ\\NP\tsubject_marker
o\tNP_OBJ\\NP\tobject_marker
met\t(S\\NP_SBJ)/NP_OBJ\ttransitive_verb
walked\tS\\NP_SBJ\tintransitive_verb
and\tCONJ\tconjunction
"
    .parse()
    .unwrap();
    let words = ["man", "ga", "o", "met", "walked", "and"];
    let found: Vec<Vec<&str>> =
        all_sequences(&words, 3).into_iter().filter(|s| is_grammatical(s, &lex).unwrap()).collect();
    let oracle: Vec<Vec<&str>> =
        all_sequences(&words, 3).into_iter().filter(|s| common::brute_force_grammatical(s, &lex)).collect();
    assert_eq!(found, oracle);
    assert_eq!(found, vec![vec!["man", "ga", "walked"]]);
}

#[test]
fn unknown_tokens_and_limits_are_errors() {
    let g = Grammar::with_defaults(toy_lexicon()).unwrap();
    assert!(matches!(g.parse(&["man", "zork"]), Err(GrammarError::UnknownToken(t)) if t == "zork"));
    let long = vec!["man"; 33];
    assert!(matches!(g.parse(&long), Err(GrammarError::LimitExceeded { limit: "max_tokens", .. })));
    assert!(matches!(g.parse::<&str>(&[]), Err(GrammarError::EmptyInput)));
}

#[test]
fn single_noun_is_not_a_sentence() {
    assert!(!is_grammatical(&["man"], &toy_lexicon()).unwrap());
}

fn arb_atom() -> impl Strategy<Value = Category> {
    prop_oneof![Just(Atom::S), Just(Atom::Np), Just(Atom::NpSbj), Just(Atom::NpObj), Just(Atom::Cp)]
        .prop_map(Category::Atom)
}

fn arb_category() -> impl Strategy<Value = Category> {
    arb_atom().prop_recursive(4, 16, 2, |inner| {
        (inner.clone(), any::<bool>(), inner).prop_map(|(r, fwd, a)| {
            Category::functor(r, if fwd { Slash::Forward } else { Slash::Backward }, a)
        })
    })
}

fn arb_sentence() -> impl Strategy<Value = Vec<&'static str>> {
    let words = vec!["man", "big", "ga", "o", "met", "walked", "whom", "and"];
    proptest::collection::vec(proptest::sample::select(words), 1..=9)
}

proptest! {
    #[test]
    fn category_printing_round_trips(c in arb_category()) {
        prop_assert_eq!(c.to_string().parse::<Category>().unwrap(), c);
    }

    #[test]
    fn permutation_orbit_is_bounded_by_arity(c in arb_category()) {
        let mut orbit = std::collections::BTreeSet::from([c.clone()]);
        let mut frontier = vec![c.clone()];
        while let Some(x) = frontier.pop() {
            for y in apply_permutation(&x, false) {
                if orbit.insert(y.clone()) {
                    frontier.push(y);
                }
            }
        }
        prop_assert!(orbit.len() <= c.arity().max(1));
        prop_assert_eq!(orbit, common::rotation_closure(&c));
    }

    #[test]
    fn returned_derivations_are_sound(seq in arb_sentence()) {
        let g = Grammar::with_defaults(toy_lexicon()).unwrap();
        if let Some(d) = g.parse(&seq).unwrap() {
            prop_assert!(d.is_sentential(seq.len()));
            prop_assert!(d.verify(false));
            let leaves: Vec<String> = d.leaves().iter().map(|l| l.token.clone().unwrap()).collect();
            prop_assert_eq!(leaves, seq.iter().map(|s| s.to_string()).collect::<Vec<_>>());
        } else {
            prop_assert!(!g.is_grammatical(&seq).unwrap());
        }
    }

    #[test]
    fn parsing_is_deterministic(seq in arb_sentence()) {
        let a = parse(&seq, &toy_lexicon(), &ParseLimits::default()).unwrap();
        let b = parse(&seq, &toy_lexicon(), &ParseLimits::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn lexicon_text_round_trips(n in 1usize..20) {
        let lex = toy_lexicon();
        let subset = Lexicon::new(lex.entries().iter().take(n.min(lex.len())).cloned());
        prop_assert_eq!(subset.to_text().parse::<Lexicon>().unwrap(), subset);
    }
}

#[test]
fn three_argument_rotations_match_oracle() {
    let c = cat("((S\\NP_SBJ)/NP_OBJ)/CP");
    let mut expected = common::rotation_closure(&c);
    expected.remove(&c);
    assert_eq!(apply_permutation(&c, false), expected);
    assert_eq!(expected.len(), 2);
}
