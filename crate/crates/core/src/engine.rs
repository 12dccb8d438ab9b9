//! The rule interpreter: synthesis, analysis, and obligatoriness checking.
//!
//! A lexical tape tuple maps to a surface string when the pair can be cut
//! into steps, each licensed by some rule: the rule's lexical forms match the
//! step's tape slices exactly, its surface form matches the emitted slice,
//! its contexts hold at the step's position, and one set of variable bindings
//! covers all six expressions. Every step must consume at least one lexical
//! segment, which bounds the search. On top of the step relation, the
//! features of all applied rules and of every morpheme that contributed a
//! segment must unify into one analysis-wide structure, and no obligatory
//! rule may be violated anywhere in the partition.
//!
//! Left contexts are matched against material already consumed, right lexical
//! contexts against the remaining input, and right surface contexts against
//! the part of the surface that follows the step (checked once the whole
//! surface is known; the vendored rules all use `*` there).

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::expr::{Bindings, Expr, Item, LexContext, SurfContext};
use crate::feature::FeatureStructure;
use crate::partition::{Partition, Step};
use crate::rule::{Operator, Rule};
use crate::ruledsl::{morphemes_by_tape, Grammar, Lexicon};
use crate::segment::{seq_to_string, Segment, UnknownSymbol};
use crate::tape::TapeTuple;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("expected {expected} tapes, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error(transparent)]
    UnknownSymbol(#[from] UnknownSymbol),
}

/// One way a lexical tuple realizes as a surface form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthesisResult {
    pub surface: Vec<Segment>,
    pub features: FeatureStructure,
    /// Every distinct partition deriving this (surface, features) pair.
    pub partitions: Vec<Partition>,
}

impl SynthesisResult {
    pub fn surface_string(&self) -> String {
        seq_to_string(&self.surface)
    }

    pub fn partition(&self) -> &Partition {
        &self.partitions[0]
    }
}

/// One reading of a surface form against the lexicon's morphemes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Analysis {
    /// Morpheme ids in tape order.
    pub morpheme_ids: Vec<String>,
    /// Set by the morphotactic filter; raw analyses have none.
    pub stem_id: Option<String>,
    pub features: FeatureStructure,
    pub partitions: Vec<Partition>,
}

/// An obligatory rule whose lexical side fired on a step whose surface slice
/// does not satisfy the rule's surface form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub step_index: usize,
    pub rule_id: String,
}

// --- expression matching ---------------------------------------------------

/// All ways `expr` matches `seq` starting at `at`, as (consumed, extended
/// bindings) pairs. Optional groups branch; variables must agree with
/// existing bindings.
pub fn match_expr(
    expr: &Expr,
    seq: &[Segment],
    at: usize,
    bindings: &Bindings,
) -> Vec<(usize, Bindings)> {
    let mut out = BTreeSet::new();
    go(vec![&expr.items[..]], seq, at, bindings.clone(), &mut out);
    out.into_iter().map(|(end, b)| (end - at, b)).collect()
}

/// `frames` is a stack of item slices; the next item is the head of the top
/// slice.
fn go(
    mut frames: Vec<&[Item]>,
    seq: &[Segment],
    pos: usize,
    bindings: Bindings,
    out: &mut BTreeSet<(usize, Bindings)>,
) {
    while matches!(frames.last(), Some(s) if s.is_empty()) {
        frames.pop();
    }
    let Some(top) = frames.pop() else {
        out.insert((pos, bindings));
        return;
    };
    let (item, rest) = (&top[0], &top[1..]);
    frames.push(rest);
    match item {
        Item::Literal(seg) => {
            if seq.get(pos) == Some(seg) {
                go(frames, seq, pos + 1, bindings, out);
            }
        }
        Item::Var(class, index) => {
            if let Some(&actual) = seq.get(pos) {
                if class.matches(actual.kind) {
                    if let Some(b) = bindings.bind(*class, *index, actual) {
                        go(frames, seq, pos + 1, b, out);
                    }
                }
            }
        }
        Item::Optional(inner) => {
            go(frames.clone(), seq, pos, bindings.clone(), out);
            frames.push(&inner[..]);
            go(frames, seq, pos, bindings, out);
        }
    }
}

/// Bindings under which `expr` matches all of `slice`.
fn match_exact(expr: &Expr, slice: &[Segment], bindings: &Bindings) -> Vec<Bindings> {
    let set: BTreeSet<Bindings> = match_expr(expr, slice, 0, bindings)
        .into_iter()
        .filter(|(consumed, _)| *consumed == slice.len())
        .map(|(_, b)| b)
        .collect();
    set.into_iter().collect()
}

fn match_exact_tuple(exprs: &[Expr], slices: &[Vec<Segment>], bindings: &Bindings) -> Vec<Bindings> {
    let mut acc = vec![bindings.clone()];
    for (expr, slice) in exprs.iter().zip(slices) {
        let mut next = BTreeSet::new();
        for b in &acc {
            next.extend(match_exact(expr, slice, b));
        }
        if next.is_empty() {
            return Vec::new();
        }
        acc = next.into_iter().collect();
    }
    acc
}

/// All ways the tuple of expressions consumes prefixes of the tapes from
/// `pos`, sharing bindings across tapes.
fn match_tuple_prefix(
    exprs: &[Expr],
    tapes: &[Vec<Segment>],
    pos: &[usize],
    bindings: &Bindings,
) -> Vec<(Vec<usize>, Bindings)> {
    let mut acc: BTreeSet<(Vec<usize>, Bindings)> = BTreeSet::new();
    acc.insert((Vec::new(), bindings.clone()));
    for (i, expr) in exprs.iter().enumerate() {
        let mut next = BTreeSet::new();
        for (consumed, b) in &acc {
            for (k, b2) in match_expr(expr, &tapes[i], pos[i], b) {
                let mut c2 = consumed.clone();
                c2.push(k);
                next.insert((c2, b2));
            }
        }
        if next.is_empty() {
            return Vec::new();
        }
        acc = next;
    }
    acc.into_iter().collect()
}

/// Bindings under which `expr` matches some stretch ending exactly at `end`.
fn match_suffix(expr: &Expr, seq: &[Segment], end: usize, bindings: &Bindings) -> Vec<Bindings> {
    let mut out = BTreeSet::new();
    for start in 0..=end {
        for (consumed, b) in match_expr(expr, seq, start, bindings) {
            if start + consumed == end {
                out.insert(b);
            }
        }
    }
    out.into_iter().collect()
}

/// Bindings under which `expr` matches some prefix of `seq[at..]`.
fn match_prefix(expr: &Expr, seq: &[Segment], at: usize, bindings: &Bindings) -> Vec<Bindings> {
    let set: BTreeSet<Bindings> = match_expr(expr, seq, at, bindings)
        .into_iter()
        .map(|(_, b)| b)
        .collect();
    set.into_iter().collect()
}

fn lex_context_before(
    ctx: &LexContext,
    tapes: &[Vec<Segment>],
    pos: &[usize],
    bindings: &Bindings,
) -> Vec<Bindings> {
    match ctx {
        LexContext::Any => vec![bindings.clone()],
        LexContext::Tuple(exprs) => {
            let mut acc = vec![bindings.clone()];
            for (i, expr) in exprs.iter().enumerate() {
                let mut next = BTreeSet::new();
                for b in &acc {
                    next.extend(match_suffix(expr, &tapes[i], pos[i], b));
                }
                if next.is_empty() {
                    return Vec::new();
                }
                acc = next.into_iter().collect();
            }
            acc
        }
    }
}

fn lex_context_after(
    ctx: &LexContext,
    tapes: &[Vec<Segment>],
    pos: &[usize],
    bindings: &Bindings,
) -> Vec<Bindings> {
    match ctx {
        LexContext::Any => vec![bindings.clone()],
        LexContext::Tuple(exprs) => {
            let mut acc = vec![bindings.clone()];
            for (i, expr) in exprs.iter().enumerate() {
                let mut next = BTreeSet::new();
                for b in &acc {
                    next.extend(match_prefix(expr, &tapes[i], pos[i], b));
                }
                if next.is_empty() {
                    return Vec::new();
                }
                acc = next.into_iter().collect();
            }
            acc
        }
    }
}

fn surf_context_before(
    ctx: &SurfContext,
    surface: &[Segment],
    pos: usize,
    bindings: &Bindings,
) -> Vec<Bindings> {
    match ctx {
        SurfContext::Any => vec![bindings.clone()],
        SurfContext::Expr(expr) => match_suffix(expr, surface, pos, bindings),
    }
}

fn surf_context_after(
    ctx: &SurfContext,
    surface: &[Segment],
    pos: usize,
    bindings: &Bindings,
) -> Vec<Bindings> {
    match ctx {
        SurfContext::Any => vec![bindings.clone()],
        SurfContext::Expr(expr) => match_prefix(expr, surface, pos, bindings),
    }
}

/// Expands a surface expression under bindings into concrete slices. An
/// unbound variable ranges over every alphabet segment of its class; the
/// chosen segment is recorded in the returned bindings.
fn expand_surf(
    expr: &Expr,
    bindings: &Bindings,
    grammar: &Grammar,
) -> Vec<(Vec<Segment>, Bindings)> {
    fn rec(
        mut frames: Vec<&[Item]>,
        emitted: Vec<Segment>,
        bindings: Bindings,
        grammar: &Grammar,
        out: &mut BTreeSet<(Vec<Segment>, Bindings)>,
    ) {
        while matches!(frames.last(), Some(s) if s.is_empty()) {
            frames.pop();
        }
        let Some(top) = frames.pop() else {
            out.insert((emitted, bindings));
            return;
        };
        let (item, rest) = (&top[0], &top[1..]);
        frames.push(rest);
        match item {
            Item::Literal(seg) => {
                let mut e = emitted;
                e.push(*seg);
                rec(frames, e, bindings, grammar, out);
            }
            Item::Var(class, index) => match bindings.get(*class, *index) {
                Some(seg) => {
                    let mut e = emitted;
                    e.push(seg);
                    rec(frames, e, bindings, grammar, out);
                }
                None => {
                    for seg in candidate_segments(grammar, *class) {
                        let b = bindings
                            .bind(*class, *index, seg)
                            .expect("binding a fresh variable cannot conflict");
                        let mut e = emitted.clone();
                        e.push(seg);
                        rec(frames.clone(), e, b, grammar, out);
                    }
                }
            },
            Item::Optional(inner) => {
                rec(frames.clone(), emitted.clone(), bindings.clone(), grammar, out);
                frames.push(&inner[..]);
                rec(frames, emitted, bindings, grammar, out);
            }
        }
    }

    let mut out = BTreeSet::new();
    rec(
        vec![&expr.items[..]],
        Vec::new(),
        bindings.clone(),
        grammar,
        &mut out,
    );
    out.into_iter().collect()
}

fn candidate_segments(grammar: &Grammar, class: crate::expr::VarClass) -> Vec<Segment> {
    let kind = match class {
        crate::expr::VarClass::Consonant => crate::segment::SegmentKind::Consonant,
        crate::expr::VarClass::Vowel => crate::segment::SegmentKind::Vowel,
    };
    grammar.alphabet.segments_of_kind(kind)
}

// --- step licensing --------------------------------------------------------

/// All ways `rule` licenses one step at the given lexical and surface
/// positions of a known surface: (lexical consumption per tape, surface
/// consumption, final bindings). Bindings are shared across the rule's six
/// expressions; a step must consume at least one lexical segment.
pub fn license_step(
    rule: &Rule,
    lexical: &TapeTuple,
    lex_pos: &[usize],
    surface: &[Segment],
    surf_pos: usize,
    bindings: &Bindings,
) -> Vec<(Vec<usize>, usize, Bindings)> {
    let mut out = BTreeSet::new();
    for (consumed, b1) in match_tuple_prefix(&rule.lex, &lexical.tapes, lex_pos, bindings) {
        if consumed.iter().sum::<usize>() == 0 {
            continue;
        }
        let after: Vec<usize> = lex_pos.iter().zip(&consumed).map(|(p, c)| p + c).collect();
        for b2 in lex_context_before(&rule.llc, &lexical.tapes, lex_pos, &b1) {
            for b3 in lex_context_after(&rule.rlc, &lexical.tapes, &after, &b2) {
                for (surf_consumed, b4) in match_expr(&rule.surf, surface, surf_pos, &b3) {
                    for b5 in surf_context_before(&rule.lsc, surface, surf_pos, &b4) {
                        for b6 in
                            surf_context_after(&rule.rsc, surface, surf_pos + surf_consumed, &b5)
                        {
                            out.insert((consumed.clone(), surf_consumed, b6));
                        }
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}

// --- obligatoriness --------------------------------------------------------

/// Reports every step where an obligatory rule's lexical side matches the
/// step's slices exactly, its lexical contexts hold there, its features are
/// compatible with the analysis-wide features, and yet the surface slice
/// cannot satisfy the rule's surface form under any extension of the
/// bindings. Competing obligatory rules each report their own violation.
pub fn check_obligatory(
    partition: &Partition,
    grammar: &Grammar,
    analysis_features: &FeatureStructure,
) -> Vec<Violation> {
    let lexical = partition.lexical();
    let lex_bounds = partition.lex_boundaries();
    let mut violations = Vec::new();
    for (i, step) in partition.steps.iter().enumerate() {
        for rule in &grammar.rules {
            if rule.operator != Operator::Obligatory {
                continue;
            }
            if rule.lex.len() != step.lex_slices.len() {
                continue;
            }
            if !rule.features.compatible(analysis_features) {
                continue;
            }
            let mut violated = false;
            for theta in match_exact_tuple(&rule.lex, &step.lex_slices, &Bindings::new()) {
                let mut triggered = false;
                let mut satisfied = false;
                'contexts: for t2 in
                    lex_context_before(&rule.llc, &lexical.tapes, &lex_bounds[i], &theta)
                {
                    for t3 in
                        lex_context_after(&rule.rlc, &lexical.tapes, &lex_bounds[i + 1], &t2)
                    {
                        triggered = true;
                        if !match_exact(&rule.surf, &step.surf_slice, &t3).is_empty() {
                            satisfied = true;
                            break 'contexts;
                        }
                    }
                }
                if triggered && !satisfied {
                    violated = true;
                    break;
                }
            }
            if violated {
                violations.push(Violation {
                    step_index: i,
                    rule_id: rule.id.clone(),
                });
            }
        }
    }
    violations
}

// --- synthesis -------------------------------------------------------------

fn check_arity(grammar: &Grammar, ntapes: usize) -> Result<(), EngineError> {
    if ntapes != grammar.ntapes {
        return Err(EngineError::ArityMismatch {
            expected: grammar.ntapes,
            got: ntapes,
        });
    }
    Ok(())
}

/// Reclassifies the tuple's segments through the grammar's own alphabet, so
/// that inputs built elsewhere cannot smuggle in foreign classifications.
fn normalize(lexical: &TapeTuple, grammar: &Grammar) -> Result<TapeTuple, EngineError> {
    let mut tapes = Vec::with_capacity(lexical.tapes.len());
    for tape in &lexical.tapes {
        let mut t = Vec::with_capacity(tape.len());
        for seg in tape {
            t.push(grammar.alphabet.segment(seg.symbol)?);
        }
        tapes.push(t);
    }
    Ok(TapeTuple::new(tapes))
}

fn slices_between(tapes: &[Vec<Segment>], from: &[usize], to: &[usize]) -> Vec<Vec<Segment>> {
    tapes
        .iter()
        .zip(from.iter().zip(to))
        .map(|(tape, (a, b))| tape[*a..*b].to_vec())
        .collect()
}

/// The analysis-wide feature structure of a partition: all step-rule features
/// unified with the features of every morpheme that contributed at least one
/// segment.
fn partition_features(
    steps: &[Step],
    grammar: &Grammar,
    lexical: &TapeTuple,
    morpheme_features: &[FeatureStructure],
) -> Option<FeatureStructure> {
    let mut acc = FeatureStructure::new();
    for step in steps {
        let rule = grammar
            .rule(&step.rule_id)
            .expect("steps reference rules of this grammar");
        acc = acc.unify(&rule.features)?;
    }
    for (tape, fs) in lexical.tapes.iter().zip(morpheme_features) {
        if !tape.is_empty() {
            acc = acc.unify(fs)?;
        }
    }
    Some(acc)
}

fn partition_key(steps: &[Step]) -> Vec<(String, Vec<Vec<Segment>>, Vec<Segment>)> {
    steps
        .iter()
        .map(|s| (s.rule_id.clone(), s.lex_slices.clone(), s.surf_slice.clone()))
        .collect()
}

struct ResultPool {
    // Keyed by surface and canonicalized features; partitions deduplicated by
    // their slices and rules.
    map: BTreeMap<(Vec<Segment>, FeatureStructure), (FeatureStructure, Vec<Partition>)>,
}

impl ResultPool {
    fn new() -> ResultPool {
        ResultPool {
            map: BTreeMap::new(),
        }
    }

    fn add(&mut self, surface: Vec<Segment>, features: FeatureStructure, partition: Partition) {
        let key = (surface, features.canonical());
        let entry = self.map.entry(key).or_insert_with(|| (features, Vec::new()));
        let pk = partition_key(&partition.steps);
        if !entry.1.iter().any(|p| partition_key(&p.steps) == pk) {
            entry.1.push(partition);
        }
    }

    fn into_results(self) -> Vec<SynthesisResult> {
        self.map
            .into_iter()
            .map(|((surface, _), (features, partitions))| SynthesisResult {
                surface,
                features,
                partitions,
            })
            .collect()
    }
}

/// Every surface realization of the lexical tuple under the grammar, with
/// unified features and all licensing partitions. `morpheme_features` gives
/// the feature structure of the morpheme occupying each tape.
pub fn synthesize(
    lexical: &TapeTuple,
    morpheme_features: &[FeatureStructure],
    grammar: &Grammar,
) -> Result<Vec<SynthesisResult>, EngineError> {
    check_arity(grammar, lexical.ntapes())?;
    check_arity(grammar, morpheme_features.len())?;
    let lexical = normalize(lexical, grammar)?;

    let mut pool = ResultPool::new();
    let mut steps: Vec<Step> = Vec::new();
    gen_search(
        grammar,
        &lexical,
        morpheme_features,
        &vec![0; lexical.ntapes()],
        &mut Vec::new(),
        &mut steps,
        &mut pool,
    );
    Ok(pool.into_results())
}

fn gen_search(
    grammar: &Grammar,
    lexical: &TapeTuple,
    morpheme_features: &[FeatureStructure],
    pos: &[usize],
    emitted: &mut Vec<Segment>,
    steps: &mut Vec<Step>,
    pool: &mut ResultPool,
) {
    if lexical.exhausted(pos) {
        finalize_candidate(grammar, lexical, morpheme_features, emitted, steps, pool);
        return;
    }
    for rule in &grammar.rules {
        for (consumed, b1) in match_tuple_prefix(&rule.lex, &lexical.tapes, pos, &Bindings::new()) {
            if consumed.iter().sum::<usize>() == 0 {
                continue;
            }
            let after: Vec<usize> = pos.iter().zip(&consumed).map(|(p, c)| p + c).collect();
            for b2 in lex_context_before(&rule.llc, &lexical.tapes, pos, &b1) {
                for b3 in lex_context_after(&rule.rlc, &lexical.tapes, &after, &b2) {
                    for b4 in surf_context_before(&rule.lsc, emitted, emitted.len(), &b3) {
                        for (slice, b5) in expand_surf(&rule.surf, &b4, grammar) {
                            steps.push(Step {
                                rule_id: rule.id.clone(),
                                lex_slices: slices_between(&lexical.tapes, pos, &after),
                                surf_slice: slice.clone(),
                                bindings: b5,
                            });
                            let emitted_len = emitted.len();
                            emitted.extend_from_slice(&slice);
                            gen_search(
                                grammar,
                                lexical,
                                morpheme_features,
                                &after,
                                emitted,
                                steps,
                                pool,
                            );
                            emitted.truncate(emitted_len);
                            steps.pop();
                        }
                    }
                }
            }
        }
    }
}

/// Right surface contexts were deferred during generation; settle them now,
/// then features, then obligatoriness.
fn finalize_candidate(
    grammar: &Grammar,
    lexical: &TapeTuple,
    morpheme_features: &[FeatureStructure],
    surface: &[Segment],
    steps: &[Step],
    pool: &mut ResultPool,
) {
    let mut surf_end = surface.len();
    for step in steps.iter().rev() {
        let rule = grammar
            .rule(&step.rule_id)
            .expect("steps reference rules of this grammar");
        if surf_context_after(&rule.rsc, surface, surf_end, &step.bindings).is_empty() {
            return;
        }
        surf_end -= step.surf_slice.len();
    }
    let Some(features) = partition_features(steps, grammar, lexical, morpheme_features) else {
        return;
    };
    let partition = Partition::new(steps.to_vec());
    if !check_obligatory(&partition, grammar, &features).is_empty() {
        return;
    }
    pool.add(surface.to_vec(), features, partition);
}

// --- analysis --------------------------------------------------------------

/// All partitions mapping `lexical` onto exactly `surface`, found by stepwise
/// licensing against the known surface. Feature and obligatoriness filtering
/// are not applied here.
fn partitions_onto(lexical: &TapeTuple, surface: &[Segment], grammar: &Grammar) -> Vec<Partition> {
    let mut found: Vec<Partition> = Vec::new();
    let mut steps: Vec<Step> = Vec::new();
    chk_search(
        grammar,
        lexical,
        surface,
        &vec![0; lexical.ntapes()],
        0,
        &mut steps,
        &mut found,
    );
    found
}

fn chk_search(
    grammar: &Grammar,
    lexical: &TapeTuple,
    surface: &[Segment],
    pos: &[usize],
    surf_pos: usize,
    steps: &mut Vec<Step>,
    found: &mut Vec<Partition>,
) {
    if lexical.exhausted(pos) {
        if surf_pos == surface.len() {
            let p = Partition::new(steps.clone());
            let pk = partition_key(&p.steps);
            if !found.iter().any(|q| partition_key(&q.steps) == pk) {
                found.push(p);
            }
        }
        return;
    }
    for rule in &grammar.rules {
        for (consumed, surf_consumed, b) in
            license_step(rule, lexical, pos, surface, surf_pos, &Bindings::new())
        {
            let after: Vec<usize> = pos.iter().zip(&consumed).map(|(p, c)| p + c).collect();
            steps.push(Step {
                rule_id: rule.id.clone(),
                lex_slices: slices_between(&lexical.tapes, pos, &after),
                surf_slice: surface[surf_pos..surf_pos + surf_consumed].to_vec(),
                bindings: b,
            });
            chk_search(
                grammar,
                lexical,
                surface,
                &after,
                surf_pos + surf_consumed,
                steps,
                found,
            );
            steps.pop();
        }
    }
}

/// Reads a surface form against every combination of lexicon morphemes, one
/// per tape. The result is exactly the set of readings whose synthesis yields
/// this surface; the morphotactic filter is applied separately.
pub fn analyze(
    surface_text: &str,
    grammar: &Grammar,
    lexicon: &Lexicon,
) -> Result<Vec<Analysis>, EngineError> {
    let surface = grammar.alphabet.seq(surface_text)?;
    let by_tape = morphemes_by_tape(lexicon, grammar);
    let mut combos: Vec<Vec<usize>> = vec![Vec::new()];
    for tape_morphemes in &by_tape {
        let mut next = Vec::new();
        for combo in &combos {
            for i in 0..tape_morphemes.len() {
                let mut c = combo.clone();
                c.push(i);
                next.push(c);
            }
        }
        combos = next;
    }

    let mut out: Vec<Analysis> = Vec::new();
    for combo in combos {
        let morphemes: Vec<_> = combo
            .iter()
            .enumerate()
            .map(|(tape, idx)| by_tape[tape][*idx])
            .collect();
        let lexical = TapeTuple::new(morphemes.iter().map(|m| m.form.clone()).collect());
        let morpheme_features: Vec<_> = morphemes.iter().map(|m| m.features.clone()).collect();
        let mut by_features: BTreeMap<FeatureStructure, (FeatureStructure, Vec<Partition>)> =
            BTreeMap::new();
        for partition in partitions_onto(&lexical, &surface, grammar) {
            let Some(features) =
                partition_features(&partition.steps, grammar, &lexical, &morpheme_features)
            else {
                continue;
            };
            if !check_obligatory(&partition, grammar, &features).is_empty() {
                continue;
            }
            by_features
                .entry(features.canonical())
                .or_insert_with(|| (features, Vec::new()))
                .1
                .push(partition);
        }
        for (_, (features, partitions)) in by_features {
            out.push(Analysis {
                morpheme_ids: morphemes.iter().map(|m| m.id.clone()).collect(),
                stem_id: None,
                features,
                partitions,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arabic;
    use crate::expr::VarClass;
    use crate::ruledsl::parse_grammar;
    use crate::segment::Alphabet;

    fn expr_of(text: &str, ntapes: usize) -> (Grammar, Expr) {
        // Parses a single throwaway rule to reuse the expression parser.
        let g = parse_grammar(&format!(
            "tapes: {ntapes}\nrule X opt\n lex: * | {text} | *\n surf: * | a | *"
        ))
        .unwrap();
        let e = g.rules[0].lex[0].clone();
        (g, e)
    }

    #[test]
    fn match_expr_binds_variables_once() {
        let a = Alphabet::standard();
        let (_, e) = expr_of("C1 a C2 a a", 1);
        let seq = a.seq("janaa").unwrap();
        let m = match_expr(&e, &seq, 0, &Bindings::new());
        assert_eq!(m.len(), 1);
        let (consumed, b) = &m[0];
        assert_eq!(*consumed, 5);
        assert_eq!(b.get(VarClass::Consonant, 1).unwrap().symbol, 'j');
        assert_eq!(b.get(VarClass::Consonant, 2).unwrap().symbol, 'n');
    }

    #[test]
    fn match_expr_optional_on_empty_input() {
        let (_, e) = expr_of("[ v ]", 1);
        let m = match_expr(&e, &[], 0, &Bindings::new());
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].0, 0);
        assert!(m[0].1.is_empty());
    }

    #[test]
    fn match_expr_optional_variable_both_ways() {
        let a = Alphabet::standard();
        let (_, e) = expr_of("V2 [ V2 ]", 1);
        let seq = a.seq("aa").unwrap();
        let m = match_expr(&e, &seq, 0, &Bindings::new());
        let lens: Vec<usize> = m.iter().map(|(k, _)| *k).collect();
        assert_eq!(lens, vec![1, 2]);
        for (_, b) in &m {
            assert_eq!(b.get(VarClass::Vowel, 2).unwrap().symbol, 'a');
        }
    }

    #[test]
    fn match_expr_respects_existing_bindings() {
        let a = Alphabet::standard();
        let (_, e) = expr_of("C1", 1);
        let seq = a.seq("j").unwrap();
        let d = a.segment('d').unwrap();
        let preset = Bindings::new().bind(VarClass::Consonant, 1, d).unwrap();
        assert!(match_expr(&e, &seq, 0, &preset).is_empty());
        let j = a.segment('j').unwrap();
        let preset = Bindings::new().bind(VarClass::Consonant, 1, j).unwrap();
        assert_eq!(match_expr(&e, &seq, 0, &preset).len(), 1);
    }

    fn jundub_lexical() -> (Grammar, TapeTuple) {
        let b = arabic::builtin();
        let a = &b.multi_tape.alphabet;
        let t = TapeTuple::new(vec![
            a.seq("cvccvc").unwrap(),
            a.seq("jndb").unwrap(),
            a.seq("uu").unwrap(),
        ]);
        (b.multi_tape, t)
    }

    fn sultaan_lexical() -> (Grammar, TapeTuple) {
        let b = arabic::builtin();
        let a = &b.multi_tape.alphabet;
        let t = TapeTuple::new(vec![
            a.seq("cvccvvc").unwrap(),
            a.seq("slTn").unwrap(),
            a.seq("uaa").unwrap(),
        ]);
        (b.multi_tape, t)
    }

    #[test]
    fn license_step_kernel_rule_at_start() {
        let (g, t) = jundub_lexical();
        let surface = g.alphabet.seq("janaadib").unwrap();
        let r6 = g.rule("R6").unwrap();
        let m = license_step(r6, &t, &[0, 0, 0], &surface, 0, &Bindings::new());
        assert_eq!(m.len(), 1);
        let (lex_consumed, surf_consumed, _) = &m[0];
        assert_eq!(lex_consumed, &vec![3, 2, 1]);
        assert_eq!(*surf_consumed, 5);
    }

    #[test]
    fn license_step_residue_rule_after_kernel() {
        let (g, t) = jundub_lexical();
        let surface = g.alphabet.seq("janaadib").unwrap();
        let r7 = g.rule("R7").unwrap();
        let m = license_step(r7, &t, &[3, 2, 1], &surface, 5, &Bindings::new());
        assert_eq!(m.len(), 1);
        let (lex_consumed, surf_consumed, _) = &m[0];
        assert_eq!(lex_consumed, &vec![3, 2, 1]);
        assert_eq!(*surf_consumed, 3);
        // R7 requires a rewritten kernel on its left: it cannot begin a word.
        assert!(license_step(r7, &t, &[0, 0, 0], &surface, 0, &Bindings::new()).is_empty());
    }

    #[test]
    fn license_step_long_residue_rule() {
        let (g, t) = sultaan_lexical();
        let surface = g.alphabet.seq("salaaTiin").unwrap();
        let r8 = g.rule("R8").unwrap();
        let m = license_step(r8, &t, &[3, 2, 1], &surface, 5, &Bindings::new());
        assert_eq!(m.len(), 1);
        let (lex_consumed, surf_consumed, _) = &m[0];
        assert_eq!(lex_consumed, &vec![4, 2, 2]);
        assert_eq!(*surf_consumed, 4);
    }

    fn surfaces(results: &[SynthesisResult]) -> Vec<String> {
        results.iter().map(|r| r.surface_string()).collect()
    }

    #[test]
    fn synthesize_jundub_stem_yields_three_forms() {
        let (g, t) = jundub_lexical();
        let b = arabic::builtin();
        let (_, feats) = b
            .lexicon
            .stem_lexical(b.lexicon.stem("jundub").unwrap(), g.ntapes);
        let results = synthesize(&t, &feats, &g).unwrap();
        assert_eq!(surfaces(&results), vec!["janaadib", "junaydib", "jundub"]);
        for r in &results {
            assert_eq!(r.partitions.len(), 1);
        }
        let pl = results.iter().find(|r| r.surface_string() == "janaadib").unwrap();
        assert_eq!(pl.features.to_string(), "gloss=locust number=pl");
        let rules: Vec<&str> = pl.partition().steps.iter().map(|s| s.rule_id.as_str()).collect();
        assert_eq!(rules, vec!["R6", "R7"]);
        let sing = results.iter().find(|r| r.surface_string() == "jundub").unwrap();
        assert_eq!(sing.features.to_string(), "form=base gloss=locust number=sing");
        let dim = results.iter().find(|r| r.surface_string() == "junaydib").unwrap();
        assert_eq!(dim.features.to_string(), "form=dim gloss=locust number=sing");
    }

    #[test]
    fn synthesize_sultaan_stem_yields_three_forms() {
        let (g, t) = sultaan_lexical();
        let b = arabic::builtin();
        let (_, feats) = b
            .lexicon
            .stem_lexical(b.lexicon.stem("sulTaan").unwrap(), g.ntapes);
        let results = synthesize(&t, &feats, &g).unwrap();
        assert_eq!(surfaces(&results), vec!["salaaTiin", "sulTaan", "sulayTaan"]);
        let pl = results.iter().find(|r| r.surface_string() == "salaaTiin").unwrap();
        let rules: Vec<&str> = pl.partition().steps.iter().map(|s| s.rule_id.as_str()).collect();
        assert_eq!(rules, vec!["R6", "R8"]);
        let slices: Vec<String> = pl
            .partition()
            .steps
            .iter()
            .map(|s| seq_to_string(&s.surf_slice))
            .collect();
        assert_eq!(slices, vec!["salaa", "Tiin"]);
    }

    #[test]
    fn synthesize_empty_tuple_yields_empty_surface() {
        let g = arabic::builtin().multi_tape;
        let t = TapeTuple::new(vec![vec![], vec![], vec![]]);
        let feats = vec![FeatureStructure::new(); 3];
        let results = synthesize(&t, &feats, &g).unwrap();
        assert_eq!(results.len(), 1);
        assert_eq!(results[0].surface_string(), "");
        assert!(results[0].features.is_empty());
        assert!(results[0].partition().steps.is_empty());
    }

    #[test]
    fn synthesize_checks_arity() {
        let g = arabic::builtin().multi_tape;
        let t = TapeTuple::new(vec![vec![]]);
        let feats = vec![FeatureStructure::new()];
        assert_eq!(
            synthesize(&t, &feats, &g),
            Err(EngineError::ArityMismatch {
                expected: 3,
                got: 1
            })
        );
    }

    #[test]
    fn check_obligatory_accepts_plural_partition() {
        let (g, t) = jundub_lexical();
        let b = arabic::builtin();
        let (_, feats) = b
            .lexicon
            .stem_lexical(b.lexicon.stem("jundub").unwrap(), g.ntapes);
        let results = synthesize(&t, &feats, &g).unwrap();
        for r in &results {
            for p in &r.partitions {
                assert!(check_obligatory(p, &g, &r.features).is_empty());
            }
        }
    }

    #[test]
    fn unchanged_kernel_under_plural_features_violates_kernel_rule() {
        // A grammar with the kernel rule plus an identity passthrough, and a
        // root marked plural: copying the kernel unchanged must be rejected.
        let text = "tapes: 3\nnames: pattern root vocalism\n\
            rule RID opt\n\
            lex: * | (c v c, C1 C2, V1) | *\n\
            surf: * | C1 V1 C2 | *\n\
            rule R6 oblig\n\
            features: number=pl\n\
            lex: * | (c v c, C1 C2, V1) | (c v [ v ] c, C3 C4, V2 [ V2 ])\n\
            surf: * | C1 a C2 a a | *\n";
        let g = parse_grammar(text).unwrap();
        let a = &g.alphabet;
        let t = TapeTuple::new(vec![
            a.seq("cvccvc").unwrap(),
            a.seq("jndb").unwrap(),
            a.seq("uu").unwrap(),
        ]);
        let pl = FeatureStructure::from_pairs([(
            "number".to_string(),
            crate::feature::FeatValue::atom("pl"),
        )]);
        let feats = vec![FeatureStructure::new(), pl, FeatureStructure::new()];
        let results = synthesize(&t, &feats, &g).unwrap();
        let names = surfaces(&results);
        assert!(!names.contains(&"jundub".to_string()), "got {names:?}");
        assert!(names.contains(&"janaadub".to_string()), "got {names:?}");

        // Weakening the kernel rule to optional lifts the obligation.
        let weakened = text.replace("rule R6 oblig", "rule R6 opt");
        let g2 = parse_grammar(&weakened).unwrap();
        let results = synthesize(&t, &feats, &g2).unwrap();
        assert!(surfaces(&results).contains(&"jundub".to_string()));
    }

    #[test]
    fn analyze_janaadib_overgenerates_per_vocalism() {
        let b = arabic::builtin();
        let analyses = analyze("janaadib", &b.multi_tape, &b.lexicon).unwrap();
        let triples: Vec<String> = analyses.iter().map(|a| a.morpheme_ids.join("+")).collect();
        assert_eq!(triples, vec!["cvccvc+jndb+uu", "cvccvc+jndb+uaa"]);
        for a in &analyses {
            assert_eq!(a.features.get("number").unwrap().to_string(), "pl");
            assert!(a.stem_id.is_none());
        }
    }

    #[test]
    fn analyze_unknown_surface_symbol_errors() {
        let b = arabic::builtin();
        assert!(matches!(
            analyze("xyz", &b.multi_tape, &b.lexicon),
            Err(EngineError::UnknownSymbol(_))
        ));
    }

    #[test]
    fn analyze_nonderivable_surface_is_empty() {
        let b = arabic::builtin();
        assert!(analyze("jadnub", &b.multi_tape, &b.lexicon).unwrap().is_empty());
    }

    #[test]
    fn single_tape_grammar_maps_stems_to_plurals() {
        let b = arabic::builtin();
        let g = &b.single_tape;
        for (stem, plural) in [("jundub", "janaadib"), ("sulTaan", "salaaTiin")] {
            let t = TapeTuple::new(vec![g.alphabet.seq(stem).unwrap()]);
            let results = synthesize(&t, &[FeatureStructure::new()], g).unwrap();
            assert_eq!(surfaces(&results), vec![plural.to_string()], "stem {stem}");
        }
    }

    #[test]
    fn engine_types_are_shareable_across_threads() {
        fn assert_sync<T: Sync + Send>() {}
        assert_sync::<Grammar>();
        assert_sync::<Lexicon>();
        assert_sync::<SynthesisResult>();
        assert_sync::<Analysis>();
    }
}
