//! Brute-force reference implementation of the licensing semantics.
//!
//! Everything here is done the slow, obvious way: expressions are matched by
//! expanding them into concrete alternatives and comparing, partitions are
//! enumerated over all consumption vectors for every rule with no pruning by
//! context, and each complete partition is verified from scratch. The only
//! code shared with the interpreter is the domain types. Agreement between
//! [`enumerate_surfaces`] and the interpreter's synthesis is the main
//! correctness check for the latter; nothing here is built for speed.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::expr::{Bindings, Expr, Item, LexContext, SurfContext, VarClass};
use crate::feature::FeatureStructure;
use crate::rule::{Operator, Rule};
use crate::ruledsl::Grammar;
use crate::segment::{seq_to_string, Segment, SegmentKind, UnknownSymbol};
use crate::tape::TapeTuple;

/// Guard against runaway surface spaces.
pub const MAX_SURFACE_LEN_CAP: usize = 16;

/// Default ceiling on elementary matching operations per call.
pub const DEFAULT_CANDIDATE_BOUND: u64 = 50_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("maximum surface length {0} exceeds the cap of {MAX_SURFACE_LEN_CAP}")]
    MaxLenTooLarge(usize),
    #[error("candidate space exceeds the bound of {0} elementary checks")]
    LimitExceeded(u64),
    #[error("expected {expected} tapes, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error(transparent)]
    UnknownSymbol(#[from] UnknownSymbol),
}

struct Budget {
    used: u64,
    bound: u64,
}

impl Budget {
    fn tick(&mut self) -> Result<(), OracleError> {
        self.used += 1;
        if self.used > self.bound {
            return Err(OracleError::LimitExceeded(self.bound));
        }
        Ok(())
    }
}

/// Every surface form of `lexical` under `grammar` with length at most
/// `max_surface_len`, paired with its canonicalized analysis features.
pub fn enumerate_surfaces(
    lexical: &TapeTuple,
    grammar: &Grammar,
    max_surface_len: usize,
) -> Result<BTreeSet<(String, FeatureStructure)>, OracleError> {
    enumerate_surfaces_bounded(lexical, grammar, max_surface_len, DEFAULT_CANDIDATE_BOUND)
}

pub fn enumerate_surfaces_bounded(
    lexical: &TapeTuple,
    grammar: &Grammar,
    max_surface_len: usize,
    candidate_bound: u64,
) -> Result<BTreeSet<(String, FeatureStructure)>, OracleError> {
    if max_surface_len > MAX_SURFACE_LEN_CAP {
        return Err(OracleError::MaxLenTooLarge(max_surface_len));
    }
    if lexical.ntapes() != grammar.ntapes {
        return Err(OracleError::ArityMismatch {
            expected: grammar.ntapes,
            got: lexical.ntapes(),
        });
    }
    let mut tapes = Vec::new();
    for tape in &lexical.tapes {
        let mut t = Vec::new();
        for seg in tape {
            t.push(grammar.alphabet.segment(seg.symbol)?);
        }
        tapes.push(t);
    }

    let mut budget = Budget {
        used: 0,
        bound: candidate_bound,
    };
    let mut out = BTreeSet::new();
    let mut steps = Vec::new();
    search(
        grammar,
        &tapes,
        &vec![0; tapes.len()],
        max_surface_len,
        &mut steps,
        &mut out,
        &mut budget,
    )?;
    Ok(out)
}

#[derive(Clone)]
struct RawStep {
    rule_index: usize,
    from: Vec<usize>,
    to: Vec<usize>,
    emission: Vec<Segment>,
}

/// Enumerates partitions: at each position, every rule against every
/// consumption vector, then every emission the rule's surface form can take.
/// Contexts, features and obligatoriness are left to `verify`.
fn search(
    grammar: &Grammar,
    tapes: &[Vec<Segment>],
    pos: &[usize],
    max_surface_len: usize,
    steps: &mut Vec<RawStep>,
    out: &mut BTreeSet<(String, FeatureStructure)>,
    budget: &mut Budget,
) -> Result<(), OracleError> {
    if pos.iter().enumerate().all(|(i, p)| *p == tapes[i].len()) {
        let surface: Vec<Segment> = steps.iter().flat_map(|s| s.emission.clone()).collect();
        if surface.len() <= max_surface_len {
            if let Some(features) = verify(grammar, tapes, steps, &surface, budget)? {
                out.insert((seq_to_string(&surface), features.canonical()));
            }
        }
        return Ok(());
    }
    for (rule_index, rule) in grammar.rules.iter().enumerate() {
        for consumption in consumption_vectors(tapes, pos) {
            budget.tick()?;
            if consumption.iter().sum::<usize>() == 0 {
                continue;
            }
            let to: Vec<usize> = pos.iter().zip(&consumption).map(|(p, c)| p + c).collect();
            let slices: Vec<&[Segment]> = tapes
                .iter()
                .zip(pos.iter().zip(&to))
                .map(|(t, (a, b))| &t[*a..*b])
                .collect();
            for theta in match_tuple(&rule.lex, &slices, &Bindings::new(), grammar, budget)? {
                for (emission, _) in expand(&rule.surf, &theta, grammar, budget)? {
                    steps.push(RawStep {
                        rule_index,
                        from: pos.to_vec(),
                        to: to.clone(),
                        emission,
                    });
                    search(grammar, tapes, &to, max_surface_len, steps, out, budget)?;
                    steps.pop();
                }
            }
        }
    }
    Ok(())
}

/// All per-tape consumption vectors bounded by the remaining tape lengths.
fn consumption_vectors(tapes: &[Vec<Segment>], pos: &[usize]) -> Vec<Vec<usize>> {
    let mut acc = vec![Vec::new()];
    for (tape, p) in tapes.iter().zip(pos) {
        let mut next = Vec::new();
        for v in &acc {
            for c in 0..=(tape.len() - p) {
                let mut v2 = v.clone();
                v2.push(c);
                next.push(v2);
            }
        }
        acc = next;
    }
    acc
}

/// A complete partition passes when every step has one set of bindings under
/// which all six rule expressions hold at the step's position, the rule
/// features of all steps unify, and no obligatory rule is violated.
fn verify(
    grammar: &Grammar,
    tapes: &[Vec<Segment>],
    steps: &[RawStep],
    surface: &[Segment],
    budget: &mut Budget,
) -> Result<Option<FeatureStructure>, OracleError> {
    let mut surf_from = 0;
    let mut surf_bounds = Vec::new();
    for step in steps {
        surf_bounds.push((surf_from, surf_from + step.emission.len()));
        surf_from += step.emission.len();
    }

    let mut features = FeatureStructure::new();
    for (step, (s_from, s_to)) in steps.iter().zip(&surf_bounds) {
        let rule = &grammar.rules[step.rule_index];
        if !step_holds(rule, tapes, step, surface, *s_from, *s_to, grammar, budget)? {
            return Ok(None);
        }
        match features.unify(&rule.features) {
            Some(f) => features = f,
            None => return Ok(None),
        }
    }

    for (i, step) in steps.iter().enumerate() {
        let (s_from, s_to) = surf_bounds[i];
        for rule in &grammar.rules {
            if rule.operator != Operator::Obligatory || rule.lex.len() != tapes.len() {
                continue;
            }
            if !rule.features.compatible(&features) {
                continue;
            }
            if obligation_violated(rule, tapes, step, surface, s_from, s_to, grammar, budget)? {
                return Ok(None);
            }
        }
    }
    Ok(Some(features))
}

fn slices_of<'t>(tapes: &'t [Vec<Segment>], step: &RawStep) -> Vec<&'t [Segment]> {
    tapes
        .iter()
        .zip(step.from.iter().zip(&step.to))
        .map(|(t, (a, b))| &t[*a..*b])
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn step_holds(
    rule: &Rule,
    tapes: &[Vec<Segment>],
    step: &RawStep,
    surface: &[Segment],
    s_from: usize,
    s_to: usize,
    grammar: &Grammar,
    budget: &mut Budget,
) -> Result<bool, OracleError> {
    let slices = slices_of(tapes, step);
    for t1 in match_tuple(&rule.lex, &slices, &Bindings::new(), grammar, budget)? {
        for t2 in lex_suffixes(&rule.llc, tapes, &step.from, &t1, grammar, budget)? {
            for t3 in lex_prefixes(&rule.rlc, tapes, &step.to, &t2, grammar, budget)? {
                for t4 in match_one(&rule.surf, &surface[s_from..s_to], &t3, grammar, budget)? {
                    for t5 in surf_suffixes(&rule.lsc, surface, s_from, &t4, grammar, budget)? {
                        if !surf_prefixes(&rule.rsc, surface, s_to, &t5, grammar, budget)?
                            .is_empty()
                        {
                            return Ok(true);
                        }
                    }
                }
            }
        }
    }
    Ok(false)
}

/// The rule's lexical side matches the step with its lexical contexts intact,
/// yet no binding extension lets its surface form cover the step's emission.
#[allow(clippy::too_many_arguments)]
fn obligation_violated(
    rule: &Rule,
    tapes: &[Vec<Segment>],
    step: &RawStep,
    surface: &[Segment],
    s_from: usize,
    s_to: usize,
    grammar: &Grammar,
    budget: &mut Budget,
) -> Result<bool, OracleError> {
    let slices = slices_of(tapes, step);
    for t1 in match_tuple(&rule.lex, &slices, &Bindings::new(), grammar, budget)? {
        let mut triggered = false;
        let mut satisfied = false;
        'outer: for t2 in lex_suffixes(&rule.llc, tapes, &step.from, &t1, grammar, budget)? {
            for t3 in lex_prefixes(&rule.rlc, tapes, &step.to, &t2, grammar, budget)? {
                triggered = true;
                if !match_one(&rule.surf, &surface[s_from..s_to], &t3, grammar, budget)?
                    .is_empty()
                {
                    satisfied = true;
                    break 'outer;
                }
            }
        }
        if triggered && !satisfied {
            return Ok(true);
        }
    }
    Ok(false)
}

// --- naive matching by expansion -------------------------------------------

/// All (concrete sequence, bindings) expansions of an expression: optional
/// groups both ways, bound variables replaced, unbound ones ranging over the
/// whole alphabet class.
fn expand(
    expr: &Expr,
    bindings: &Bindings,
    grammar: &Grammar,
    budget: &mut Budget,
) -> Result<Vec<(Vec<Segment>, Bindings)>, OracleError> {
    fn rec(
        items: &[Item],
        prefix: Vec<Segment>,
        bindings: Bindings,
        grammar: &Grammar,
        out: &mut Vec<(Vec<Segment>, Bindings)>,
        budget: &mut Budget,
    ) -> Result<(), OracleError> {
        budget.tick()?;
        let Some((item, rest)) = items.split_first() else {
            out.push((prefix, bindings));
            return Ok(());
        };
        match item {
            Item::Literal(seg) => {
                let mut p = prefix;
                p.push(*seg);
                rec(rest, p, bindings, grammar, out, budget)
            }
            Item::Var(class, index) => {
                let choices = match bindings.get(*class, *index) {
                    Some(seg) => vec![seg],
                    None => {
                        let kind = match class {
                            VarClass::Consonant => SegmentKind::Consonant,
                            VarClass::Vowel => SegmentKind::Vowel,
                        };
                        grammar.alphabet.segments_of_kind(kind)
                    }
                };
                for seg in choices {
                    let b = bindings
                        .bind(*class, *index, seg)
                        .expect("segment agrees with any prior binding here");
                    let mut p = prefix.clone();
                    p.push(seg);
                    rec(rest, p, b, grammar, out, budget)?;
                }
                Ok(())
            }
            Item::Optional(inner) => {
                rec(rest, prefix.clone(), bindings.clone(), grammar, out, budget)?;
                let mut widened: Vec<Item> = inner.clone();
                widened.extend_from_slice(rest);
                rec(&widened, prefix, bindings, grammar, out, budget)
            }
        }
    }

    let mut out = Vec::new();
    rec(
        &expr.items,
        Vec::new(),
        bindings.clone(),
        grammar,
        &mut out,
        budget,
    )?;
    Ok(out)
}

/// Bindings under which some expansion of `expr` equals `slice` exactly.
fn match_one(
    expr: &Expr,
    slice: &[Segment],
    bindings: &Bindings,
    grammar: &Grammar,
    budget: &mut Budget,
) -> Result<Vec<Bindings>, OracleError> {
    let mut out = Vec::new();
    for (expansion, b) in expand(expr, bindings, grammar, budget)? {
        if expansion == slice && !out.contains(&b) {
            out.push(b);
        }
    }
    Ok(out)
}

fn match_tuple(
    exprs: &[Expr],
    slices: &[&[Segment]],
    bindings: &Bindings,
    grammar: &Grammar,
    budget: &mut Budget,
) -> Result<Vec<Bindings>, OracleError> {
    let mut acc = vec![bindings.clone()];
    for (expr, slice) in exprs.iter().zip(slices) {
        let mut next = Vec::new();
        for b in &acc {
            for b2 in match_one(expr, slice, b, grammar, budget)? {
                if !next.contains(&b2) {
                    next.push(b2);
                }
            }
        }
        if next.is_empty() {
            return Ok(Vec::new());
        }
        acc = next;
    }
    Ok(acc)
}

fn suffix_matches(
    expr: &Expr,
    seq: &[Segment],
    end: usize,
    bindings: &Bindings,
    grammar: &Grammar,
    budget: &mut Budget,
) -> Result<Vec<Bindings>, OracleError> {
    let mut out = Vec::new();
    for start in 0..=end {
        for b in match_one(expr, &seq[start..end], bindings, grammar, budget)? {
            if !out.contains(&b) {
                out.push(b);
            }
        }
    }
    Ok(out)
}

fn prefix_matches(
    expr: &Expr,
    seq: &[Segment],
    start: usize,
    bindings: &Bindings,
    grammar: &Grammar,
    budget: &mut Budget,
) -> Result<Vec<Bindings>, OracleError> {
    let mut out = Vec::new();
    for end in start..=seq.len() {
        for b in match_one(expr, &seq[start..end], bindings, grammar, budget)? {
            if !out.contains(&b) {
                out.push(b);
            }
        }
    }
    Ok(out)
}

fn lex_suffixes(
    ctx: &LexContext,
    tapes: &[Vec<Segment>],
    pos: &[usize],
    bindings: &Bindings,
    grammar: &Grammar,
    budget: &mut Budget,
) -> Result<Vec<Bindings>, OracleError> {
    match ctx {
        LexContext::Any => Ok(vec![bindings.clone()]),
        LexContext::Tuple(exprs) => {
            let mut acc = vec![bindings.clone()];
            for (i, expr) in exprs.iter().enumerate() {
                let mut next = Vec::new();
                for b in &acc {
                    for b2 in suffix_matches(expr, &tapes[i], pos[i], b, grammar, budget)? {
                        if !next.contains(&b2) {
                            next.push(b2);
                        }
                    }
                }
                if next.is_empty() {
                    return Ok(Vec::new());
                }
                acc = next;
            }
            Ok(acc)
        }
    }
}

fn lex_prefixes(
    ctx: &LexContext,
    tapes: &[Vec<Segment>],
    pos: &[usize],
    bindings: &Bindings,
    grammar: &Grammar,
    budget: &mut Budget,
) -> Result<Vec<Bindings>, OracleError> {
    match ctx {
        LexContext::Any => Ok(vec![bindings.clone()]),
        LexContext::Tuple(exprs) => {
            let mut acc = vec![bindings.clone()];
            for (i, expr) in exprs.iter().enumerate() {
                let mut next = Vec::new();
                for b in &acc {
                    for b2 in prefix_matches(expr, &tapes[i], pos[i], b, grammar, budget)? {
                        if !next.contains(&b2) {
                            next.push(b2);
                        }
                    }
                }
                if next.is_empty() {
                    return Ok(Vec::new());
                }
                acc = next;
            }
            Ok(acc)
        }
    }
}

fn surf_suffixes(
    ctx: &SurfContext,
    surface: &[Segment],
    pos: usize,
    bindings: &Bindings,
    grammar: &Grammar,
    budget: &mut Budget,
) -> Result<Vec<Bindings>, OracleError> {
    match ctx {
        SurfContext::Any => Ok(vec![bindings.clone()]),
        SurfContext::Expr(expr) => suffix_matches(expr, surface, pos, bindings, grammar, budget),
    }
}

fn surf_prefixes(
    ctx: &SurfContext,
    surface: &[Segment],
    pos: usize,
    bindings: &Bindings,
    grammar: &Grammar,
    budget: &mut Budget,
) -> Result<Vec<Bindings>, OracleError> {
    match ctx {
        SurfContext::Any => Ok(vec![bindings.clone()]),
        SurfContext::Expr(expr) => prefix_matches(expr, surface, pos, bindings, grammar, budget),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arabic;
    use crate::ruledsl::parse_grammar;

    fn names(set: &BTreeSet<(String, FeatureStructure)>) -> Vec<&str> {
        set.iter().map(|(s, _)| s.as_str()).collect()
    }

    #[test]
    fn builtin_jundub_yields_three_surfaces() {
        let b = arabic::builtin();
        let a = &b.multi_tape.alphabet;
        let t = TapeTuple::new(vec![
            a.seq("cvccvc").unwrap(),
            a.seq("jndb").unwrap(),
            a.seq("uu").unwrap(),
        ]);
        let set = enumerate_surfaces(&t, &b.multi_tape, 9).unwrap();
        assert_eq!(names(&set), vec!["janaadib", "junaydib", "jundub"]);
        let feats: Vec<String> = set.iter().map(|(_, f)| f.to_string()).collect();
        assert!(feats.contains(&"number=pl".to_string()));
        assert!(feats.contains(&"form=base number=sing".to_string()));
        assert!(feats.contains(&"form=dim number=sing".to_string()));
    }

    #[test]
    fn empty_lexical_yields_empty_surface() {
        let b = arabic::builtin();
        let t = TapeTuple::new(vec![vec![], vec![], vec![]]);
        let set = enumerate_surfaces(&t, &b.multi_tape, 0).unwrap();
        assert_eq!(set.len(), 1);
        let (s, f) = set.iter().next().unwrap();
        assert!(s.is_empty());
        assert!(f.is_empty());
    }

    #[test]
    fn identity_grammar_copies_input() {
        let g = parse_grammar(
            "tapes: 1\nconsonants:\nvowels: a\nrule R0 opt\n lex: * | a | *\n surf: * | a | *",
        )
        .unwrap();
        let t = TapeTuple::new(vec![g.alphabet.seq("aa").unwrap()]);
        let set = enumerate_surfaces(&t, &g, 2).unwrap();
        assert_eq!(names(&set), vec!["aa"]);
        assert!(set.iter().next().unwrap().1.is_empty());
    }

    #[test]
    fn surface_cap_is_enforced() {
        let b = arabic::builtin();
        let t = TapeTuple::new(vec![vec![], vec![], vec![]]);
        assert_eq!(
            enumerate_surfaces(&t, &b.multi_tape, 17),
            Err(OracleError::MaxLenTooLarge(17))
        );
    }

    #[test]
    fn candidate_bound_is_enforced() {
        let b = arabic::builtin();
        let a = &b.multi_tape.alphabet;
        let t = TapeTuple::new(vec![
            a.seq("cvccvc").unwrap(),
            a.seq("jndb").unwrap(),
            a.seq("uu").unwrap(),
        ]);
        assert_eq!(
            enumerate_surfaces_bounded(&t, &b.multi_tape, 9, 100),
            Err(OracleError::LimitExceeded(100))
        );
    }

    #[test]
    fn arity_is_checked() {
        let b = arabic::builtin();
        let t = TapeTuple::new(vec![vec![]]);
        assert_eq!(
            enumerate_surfaces(&t, &b.multi_tape, 4),
            Err(OracleError::ArityMismatch {
                expected: 3,
                got: 1
            })
        );
    }
}
