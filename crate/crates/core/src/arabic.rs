//! The vendored Arabic grammars and lexicon.

use crate::feature::{FeatValue, FeatureStructure};
use crate::ruledsl::{parse_grammar, parse_lexicon, Grammar, Lexicon};

pub const MULTI_TAPE_GRAMMAR: &str = include_str!("../data/arabic.mtg");
pub const SINGLE_TAPE_GRAMMAR: &str = include_str!("../data/arabic_stem.mtg");
pub const LEXICON: &str = include_str!("../data/arabic.mtl");

#[derive(Debug, Clone, PartialEq)]
pub struct BuiltinGrammarSet {
    /// Three tapes (pattern, root, vocalism): base stems, broken plural,
    /// diminutive.
    pub multi_tape: Grammar,
    /// One tape: singular stem in, broken plural out.
    pub single_tape: Grammar,
    pub lexicon: Lexicon,
}

/// Loads the vendored data. The files ship inside the binary and are covered
/// by the test suite, so loading cannot fail.
pub fn builtin() -> BuiltinGrammarSet {
    let multi_tape = parse_grammar(MULTI_TAPE_GRAMMAR).expect("vendored grammar parses");
    let single_tape = parse_grammar(SINGLE_TAPE_GRAMMAR).expect("vendored grammar parses");
    let lexicon = parse_lexicon(LEXICON, &multi_tape).expect("vendored lexicon parses");
    BuiltinGrammarSet {
        multi_tape,
        single_tape,
        lexicon,
    }
}

/// Feature conventions of the vendored multi-tape grammar, keyed by the mode
/// names the command line uses.
pub fn mode_features(mode: &str) -> Option<FeatureStructure> {
    let pairs: &[(&str, &str)] = match mode {
        "sing" => &[("number", "sing"), ("form", "base")],
        "pl" => &[("number", "pl")],
        "dim" => &[("number", "sing"), ("form", "dim")],
        _ => return None,
    };
    Some(FeatureStructure::from_pairs(
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), FeatValue::atom(v))),
    ))
}

pub const MODES: &[&str] = &["sing", "pl", "dim"];
