//! Filters raw analyses down to those whose morpheme combination is a
//! declared stem, carrying the stem's features into the result.
//!
//! The raw analyzer reads a surface form against every combination of
//! morphemes, one per tape, so a form like "janaadib" picks up one reading
//! per vocalism that happens to fit. Only combinations declared as stems are
//! words of the lexicon; this module discards the rest and unifies the stem's
//! own features (gloss included) into each surviving analysis.

use thiserror::Error;

use crate::engine::Analysis;
use crate::feature::FeatureStructure;
use crate::ruledsl::Lexicon;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MorphotacticError {
    #[error("constraint references unknown morpheme '{0}'")]
    UnknownMorpheme(String),
    #[error("constraint references attribute '{attr}' absent from morpheme '{morpheme}'")]
    UnknownAttribute { morpheme: String, attr: String },
}

/// Requires two attributes of two morphemes to take unifiable values
/// whenever both morphemes occur in one stem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureEquation {
    pub left_morpheme: String,
    pub left_attr: String,
    pub right_morpheme: String,
    pub right_attr: String,
}

/// The stems table plus optional co-occurrence constraints between the
/// morphemes of a stem.
#[derive(Debug, Clone, PartialEq)]
pub struct MorphotacticGrammar {
    lexicon: Lexicon,
    ntapes: usize,
    constraints: Vec<FeatureEquation>,
}

impl MorphotacticGrammar {
    /// Every constraint must name declared morphemes and attributes they
    /// actually carry.
    pub fn new(
        lexicon: &Lexicon,
        ntapes: usize,
        constraints: Vec<FeatureEquation>,
    ) -> Result<MorphotacticGrammar, MorphotacticError> {
        for eq in &constraints {
            for (mid, attr) in [
                (&eq.left_morpheme, &eq.left_attr),
                (&eq.right_morpheme, &eq.right_attr),
            ] {
                let Some(m) = lexicon.morpheme(mid) else {
                    return Err(MorphotacticError::UnknownMorpheme(mid.clone()));
                };
                if m.features.get(attr).is_none() {
                    return Err(MorphotacticError::UnknownAttribute {
                        morpheme: mid.clone(),
                        attr: attr.clone(),
                    });
                }
            }
        }
        Ok(MorphotacticGrammar {
            lexicon: lexicon.clone(),
            ntapes,
            constraints,
        })
    }

    pub fn from_lexicon(lexicon: &Lexicon, ntapes: usize) -> MorphotacticGrammar {
        MorphotacticGrammar::new(lexicon, ntapes, Vec::new())
            .expect("no constraints, nothing to validate")
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    fn constraints_hold(&self, stem_morpheme_ids: &[String]) -> bool {
        self.constraints.iter().all(|eq| {
            let both_present = stem_morpheme_ids.contains(&eq.left_morpheme)
                && stem_morpheme_ids.contains(&eq.right_morpheme);
            if !both_present {
                return true;
            }
            let value = |mid: &str, attr: &str| {
                self.lexicon
                    .morpheme(mid)
                    .and_then(|m| m.features.get(attr))
                    .cloned()
                    .expect("validated in new()")
            };
            let lhs = FeatureStructure::from_pairs([(
                "x".to_string(),
                value(&eq.left_morpheme, &eq.left_attr),
            )]);
            let rhs = FeatureStructure::from_pairs([(
                "x".to_string(),
                value(&eq.right_morpheme, &eq.right_attr),
            )]);
            lhs.compatible(&rhs)
        })
    }
}

/// Keeps exactly the analyses whose morpheme combination is a declared stem
/// with satisfiable constraints and whose features unify with the stem's.
/// Surviving analyses carry the stem id and the unified features. Narrowing
/// and idempotent; surviving analyses map to exactly one stem each.
pub fn filter(raw: &[Analysis], mt: &MorphotacticGrammar) -> Vec<Analysis> {
    let mut out = Vec::new();
    for analysis in raw {
        if let Some(claimed) = &analysis.stem_id {
            // Already attributed (an idempotent re-run); re-validate in place.
            if let Some(stem) = mt.lexicon.stem(claimed) {
                if analysis.features.unify(&stem.features).as_ref() == Some(&analysis.features) {
                    out.push(analysis.clone());
                }
            }
            continue;
        }
        for stem in mt.lexicon.stems_for_morphemes(&analysis.morpheme_ids, mt.ntapes) {
            if !mt.constraints_hold(&stem.morpheme_ids) {
                continue;
            }
            let Some(features) = analysis.features.unify(&stem.features) else {
                continue;
            };
            let mut kept = analysis.clone();
            kept.stem_id = Some(stem.id.clone());
            kept.features = features;
            out.push(kept);
        }
    }
    out
}
