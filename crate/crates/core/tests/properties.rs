//! Property and differential tests: algebraic laws of unification, the
//! partition concatenation invariant, independence from rule declaration
//! order, agreement between interpreter and brute-force reference, and
//! generation/analysis round trips.

use std::collections::BTreeSet;

use proptest::prelude::*;

use mtmorph::engine::{license_step, synthesize};
use mtmorph::expr::Bindings;
use mtmorph::feature::{FeatValue, FeatureStructure};
use mtmorph::oracle::{enumerate_surfaces_bounded, OracleError};
use mtmorph::ruledsl::Grammar;
use mtmorph::toygen::toy_case;
use mtmorph::{analyze, arabic, morphotactics, TapeTuple};

fn feat_value() -> impl Strategy<Value = FeatValue> {
    prop_oneof![
        3 => prop::sample::select(vec!["a", "b", "c"]).prop_map(FeatValue::atom),
        1 => prop::sample::select(vec!["X", "Y"]).prop_map(FeatValue::var),
    ]
}

fn feature_structure() -> impl Strategy<Value = FeatureStructure> {
    prop::collection::btree_map(prop::sample::select(vec!["num", "cls", "g"]), feat_value(), 0..3)
        .prop_map(|m| {
            FeatureStructure::from_pairs(m.into_iter().map(|(k, v)| (k.to_string(), v)))
        })
}

proptest! {
    #[test]
    fn unify_commutes(f in feature_structure(), g in feature_structure()) {
        prop_assert_eq!(f.unify(&g), g.unify(&f));
    }

    #[test]
    fn unify_with_self_is_identity(f in feature_structure()) {
        prop_assert_eq!(f.unify(&f), Some(f.clone()));
    }

    #[test]
    fn unify_result_absorbs_both_sides(f in feature_structure(), g in feature_structure()) {
        if let Some(u) = f.unify(&g) {
            prop_assert_eq!(u.unify(&f), Some(u.clone()));
            prop_assert_eq!(u.unify(&g), Some(u.clone()));
        }
    }

    #[test]
    fn compatibility_is_symmetric_and_matches_unify(
        f in feature_structure(),
        g in feature_structure(),
    ) {
        prop_assert_eq!(f.compatible(&g), g.compatible(&f));
        prop_assert_eq!(f.compatible(&g), f.unify(&g).is_some());
    }

    #[test]
    fn empty_structure_is_a_unit(f in feature_structure()) {
        let e = FeatureStructure::new();
        prop_assert_eq!(f.unify(&e), Some(f.clone()));
        prop_assert_eq!(e.unify(&f), Some(f.clone()));
    }
}

fn builtin_stem_inputs() -> Vec<(Grammar, TapeTuple, Vec<FeatureStructure>)> {
    let b = arabic::builtin();
    let mut out = Vec::new();
    for stem in &b.lexicon.stems.clone() {
        let (lexical, features) = b.lexicon.stem_lexical(stem, b.multi_tape.ntapes);
        out.push((b.multi_tape.clone(), lexical, features));
    }
    out
}

fn toy_inputs(seeds: std::ops::Range<u64>) -> Vec<(Grammar, TapeTuple, Vec<FeatureStructure>)> {
    seeds
        .map(|seed| {
            let case = toy_case(seed);
            let empty = vec![FeatureStructure::new(); case.grammar.ntapes];
            (case.grammar, case.lexical, empty)
        })
        .collect()
}

#[test]
fn partitions_concatenate_to_their_endpoints() {
    for (grammar, lexical, features) in
        builtin_stem_inputs().into_iter().chain(toy_inputs(0..30))
    {
        for result in synthesize(&lexical, &features, &grammar).unwrap() {
            for p in &result.partitions {
                assert!(
                    p.concatenates_to(&lexical, &result.surface),
                    "lexical {lexical} surface {}",
                    result.surface_string()
                );
            }
        }
    }
}

#[test]
fn stored_step_bindings_relicense_each_step() {
    for (grammar, lexical, features) in
        builtin_stem_inputs().into_iter().chain(toy_inputs(0..30))
    {
        for result in synthesize(&lexical, &features, &grammar).unwrap() {
            for p in &result.partitions {
                let lex_bounds = p.lex_boundaries();
                let surf_bounds = p.surf_boundaries();
                for (i, step) in p.steps.iter().enumerate() {
                    let rule = grammar.rule(&step.rule_id).unwrap();
                    let licensed = license_step(
                        rule,
                        &lexical,
                        &lex_bounds[i],
                        &result.surface,
                        surf_bounds[i],
                        &Bindings::new(),
                    );
                    let consumed: Vec<usize> = lex_bounds[i + 1]
                        .iter()
                        .zip(&lex_bounds[i])
                        .map(|(b, a)| b - a)
                        .collect();
                    assert!(
                        licensed.iter().any(|(c, s, b)| {
                            *c == consumed
                                && *s == step.surf_slice.len()
                                && step.bindings.is_subset_of(b)
                        }),
                        "step {i} of {} not relicensed",
                        result.surface_string()
                    );
                }
            }
        }
    }
}

#[test]
fn rule_declaration_order_does_not_matter() {
    for (grammar, lexical, features) in
        builtin_stem_inputs().into_iter().chain(toy_inputs(0..30))
    {
        let mut reversed = grammar.clone();
        reversed.rules.reverse();
        let a = synthesize(&lexical, &features, &grammar).unwrap();
        let b = synthesize(&lexical, &features, &reversed).unwrap();
        let key = |rs: &[mtmorph::SynthesisResult]| -> BTreeSet<(String, FeatureStructure)> {
            rs.iter()
                .map(|r| (r.surface_string(), r.features.canonical()))
                .collect()
        };
        assert_eq!(key(&a), key(&b), "lexical {lexical}");
    }
}

/// Interpreter versus brute-force reference on random small grammars. Cases
/// whose candidate space busts the budget are skipped but counted: most
/// seeds must be comparable.
#[test]
fn interpreter_agrees_with_reference_on_toy_grammars() {
    const MAX_LEN: usize = 12;
    let mut compared = 0;
    for seed in 0..40u64 {
        let case = toy_case(seed);
        let reference =
            match enumerate_surfaces_bounded(&case.lexical, &case.grammar, MAX_LEN, 2_000_000) {
                Ok(set) => set,
                Err(OracleError::LimitExceeded(_)) => continue,
                Err(e) => panic!("seed {seed}: {e}"),
            };
        let empty = vec![FeatureStructure::new(); case.grammar.ntapes];
        let engine: BTreeSet<(String, FeatureStructure)> =
            synthesize(&case.lexical, &empty, &case.grammar)
                .unwrap()
                .into_iter()
                .filter(|r| r.surface.len() <= MAX_LEN)
                .map(|r| (r.surface_string(), r.features.canonical()))
                .collect();
        assert_eq!(
            reference, engine,
            "seed {seed}\ngrammar:\n{}\nlexical: {}",
            case.grammar_text, case.lexical
        );
        compared += 1;
    }
    assert!(compared >= 30, "only {compared} of 40 cases fit the budget");
}

#[test]
fn analysis_recovers_every_generated_stem() {
    let b = arabic::builtin();
    let mt = morphotactics::MorphotacticGrammar::from_lexicon(&b.lexicon, b.multi_tape.ntapes);
    for stem in &b.lexicon.stems {
        let (lexical, features) = b.lexicon.stem_lexical(stem, b.multi_tape.ntapes);
        let results = synthesize(&lexical, &features, &b.multi_tape).unwrap();
        assert!(!results.is_empty());
        for result in results {
            let raw = analyze(&result.surface_string(), &b.multi_tape, &b.lexicon).unwrap();
            let kept = morphotactics::filter(&raw, &mt);
            assert!(
                kept.iter().any(|a| {
                    a.stem_id.as_deref() == Some(stem.id.as_str())
                        && a.features.compatible(&result.features)
                }),
                "{} not recovered from {}",
                stem.id,
                result.surface_string()
            );
        }
    }
}
