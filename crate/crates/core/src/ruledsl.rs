//! The rule and lexicon file formats.
//!
//! Grammar files (`.mtg`) open with `tapes: n`, optionally name the tapes and
//! declare the alphabet, then list rule blocks:
//!
//! ```text
//! tapes: 3
//! names: pattern root vocalism
//! consonants: j n d b s l T w y '
//! vowels: a i u
//!
//! rule R6 oblig
//! features: number=pl
//! lex: * | (c v c, C1 C2, V1) | (c v [ v ] c, C3 C4, V2 [ V2 ])
//! surf: * | C1 a C2 a a | *
//! ```
//!
//! Segments are written one per token, `0` is the empty form, `[ ... ]` is an
//! optional group, `*` is the any-context, and tuple components are comma
//! separated. With one tape the parentheses may be dropped. Lexicon files
//! (`.mtl`) hold `morpheme <tape> <id> <form> [k=v ...]` and
//! `stem <id> <morphemeId ...> [k=v ...]` lines. `#` starts a comment.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::expr::{Bindings, Expr, Item, LexContext, SurfContext, VarClass};
use crate::feature::{FeatValue, FeatureStructure};
use crate::rule::{Operator, Rule};
use crate::segment::{Alphabet, Segment};
use crate::tape::TapeTuple;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, col {col}: {message}")]
pub struct DslError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

fn err<T>(line: usize, col: usize, message: impl Into<String>) -> Result<T, DslError> {
    Err(DslError {
        line,
        col,
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grammar {
    pub ntapes: usize,
    pub tape_names: Vec<String>,
    pub alphabet: Alphabet,
    pub rules: Vec<Rule>,
}

impl Grammar {
    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn tape_index(&self, name: &str) -> Option<usize> {
        self.tape_names.iter().position(|n| n == name)
    }

    /// Canonical text form; parsing it back yields a structurally equal
    /// grammar.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("tapes: {}\n", self.ntapes));
        out.push_str(&format!("names: {}\n", self.tape_names.join(" ")));
        let cons: Vec<String> = self.alphabet.consonants().iter().map(|c| c.to_string()).collect();
        let vows: Vec<String> = self.alphabet.vowels().iter().map(|c| c.to_string()).collect();
        out.push_str(&format!("consonants: {}\n", cons.join(" ")));
        out.push_str(&format!("vowels: {}\n", vows.join(" ")));
        for rule in &self.rules {
            out.push('\n');
            out.push_str(&rule.to_string());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Morpheme {
    pub tape: usize,
    pub id: String,
    pub form: Vec<Segment>,
    pub features: FeatureStructure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stem {
    pub id: String,
    /// One morpheme per tape, in declaration order (not necessarily tape
    /// order); resolution to tapes goes through the morphemes themselves.
    pub morpheme_ids: Vec<String>,
    pub features: FeatureStructure,
    pub gloss: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    pub morphemes: Vec<Morpheme>,
    pub stems: Vec<Stem>,
}

impl Lexicon {
    pub fn morpheme(&self, id: &str) -> Option<&Morpheme> {
        self.morphemes.iter().find(|m| m.id == id)
    }

    pub fn stem(&self, id: &str) -> Option<&Stem> {
        self.stems.iter().find(|s| s.id == id)
    }

    pub fn morphemes_on_tape(&self, tape: usize) -> Vec<&Morpheme> {
        self.morphemes.iter().filter(|m| m.tape == tape).collect()
    }

    /// The morphemes of a stem arranged in tape order.
    pub fn stem_morphemes(&self, stem: &Stem, ntapes: usize) -> Vec<&Morpheme> {
        let mut by_tape: Vec<Option<&Morpheme>> = vec![None; ntapes];
        for id in &stem.morpheme_ids {
            let m = self.morpheme(id).expect("validated at parse time");
            by_tape[m.tape] = Some(m);
        }
        by_tape
            .into_iter()
            .map(|m| m.expect("validated at parse time"))
            .collect()
    }

    /// Lexical tuple and per-tape morpheme features for a stem.
    pub fn stem_lexical(&self, stem: &Stem, ntapes: usize) -> (TapeTuple, Vec<FeatureStructure>) {
        let morphemes = self.stem_morphemes(stem, ntapes);
        let tapes = morphemes.iter().map(|m| m.form.clone()).collect();
        let features = morphemes.iter().map(|m| m.features.clone()).collect();
        (TapeTuple::new(tapes), features)
    }

    /// Finds the stems whose morphemes are exactly `ids` (tape order).
    pub fn stems_for_morphemes(&self, ids: &[String], ntapes: usize) -> Vec<&Stem> {
        self.stems
            .iter()
            .filter(|stem| {
                let morphemes = self.stem_morphemes(stem, ntapes);
                morphemes.iter().map(|m| m.id.as_str()).eq(ids.iter().map(|s| s.as_str()))
            })
            .collect()
    }

    /// Canonical text form, using the grammar's tape names.
    pub fn to_text(&self, grammar: &Grammar) -> String {
        let mut out = String::new();
        for m in &self.morphemes {
            out.push_str(&format!(
                "morpheme {} {} {}",
                grammar.tape_names[m.tape],
                m.id,
                render_form(&m.form)
            ));
            for (k, v) in m.features.iter() {
                out.push_str(&format!(" {k}={v}"));
            }
            out.push('\n');
        }
        for s in &self.stems {
            out.push_str(&format!("stem {} {}", s.id, s.morpheme_ids.join(" ")));
            for (k, v) in s.features.iter() {
                out.push_str(&format!(" {k}={v}"));
            }
            out.push('\n');
        }
        out
    }
}

fn render_form(form: &[Segment]) -> String {
    if form.is_empty() {
        "0".to_string()
    } else {
        form.iter().map(|s| s.symbol).collect()
    }
}

// --- tokenizer -------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Pipe,
    Star,
}

const PUNCT: &[char] = &['(', ')', '[', ']', ',', '|', '*'];
const RESERVED: &[char] = &['(', ')', '[', ']', ',', '|', '*', '#', '=', '$', '0'];

/// Tokenizes one line fragment; `base_col` is the 1-based column of its first
/// character in the original line.
fn tokenize(fragment: &str, base_col: usize) -> Vec<(Tok, usize)> {
    let mut toks = Vec::new();
    let mut word = String::new();
    let mut word_col = 0;
    for (col, ch) in (base_col..).zip(fragment.chars()) {
        if ch.is_whitespace() || PUNCT.contains(&ch) {
            if !word.is_empty() {
                toks.push((Tok::Word(std::mem::take(&mut word)), word_col));
            }
            if let Some(tok) = match ch {
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                '[' => Some(Tok::LBrack),
                ']' => Some(Tok::RBrack),
                ',' => Some(Tok::Comma),
                '|' => Some(Tok::Pipe),
                '*' => Some(Tok::Star),
                _ => None,
            } {
                toks.push((tok, col));
            }
        } else {
            if word.is_empty() {
                word_col = col;
            }
            word.push(ch);
        }
    }
    if !word.is_empty() {
        toks.push((Tok::Word(word), word_col));
    }
    toks
}

fn words_with_cols(line: &str) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    let mut word = String::new();
    let mut word_col = 0;
    for (i, ch) in line.chars().enumerate() {
        if ch.is_whitespace() {
            if !word.is_empty() {
                out.push((std::mem::take(&mut word), word_col));
            }
        } else {
            if word.is_empty() {
                word_col = i + 1;
            }
            word.push(ch);
        }
    }
    if !word.is_empty() {
        out.push((word, word_col));
    }
    out
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

// --- expression parsing ----------------------------------------------------

struct ExprParser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    line: usize,
    alphabet: &'a Alphabet,
}

impl<'a> ExprParser<'a> {
    fn peek(&self) -> Option<&(Tok, usize)> {
        self.toks.get(self.pos)
    }

    fn at_terminator(&self) -> bool {
        matches!(
            self.peek(),
            None | Some((Tok::Comma, _)) | Some((Tok::RParen, _)) | Some((Tok::Pipe, _))
        )
    }

    fn parse_word_item(&mut self, word: &str, col: usize) -> Result<Item, DslError> {
        let mut chars = word.chars();
        let first = chars.next().expect("words are nonempty");
        let rest: String = chars.collect();
        if (first == 'C' || first == 'V') && !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) {
            let index: u32 = rest
                .parse()
                .map_err(|_| DslError {
                    line: self.line,
                    col,
                    message: format!("variable index out of range in '{word}'"),
                })?;
            if index == 0 {
                return err(self.line, col, format!("variable index must be at least 1 in '{word}'"));
            }
            let class = if first == 'C' { VarClass::Consonant } else { VarClass::Vowel };
            return Ok(Item::Var(class, index));
        }
        if rest.is_empty() {
            let seg = self.alphabet.segment(first).map_err(|e| DslError {
                line: self.line,
                col,
                message: e.to_string(),
            })?;
            return Ok(Item::Literal(seg));
        }
        err(
            self.line,
            col,
            format!("'{word}' is not a segment or variable; segments are written one per token"),
        )
    }

    fn parse_items(&mut self, inside_optional: bool) -> Result<Vec<Item>, DslError> {
        let mut items = Vec::new();
        loop {
            match self.peek().cloned() {
                Some((Tok::Word(w), col)) => {
                    self.pos += 1;
                    if w == "0" {
                        if items.is_empty() && !inside_optional && self.at_terminator() {
                            return Ok(items);
                        }
                        return err(self.line, col, "'0' stands alone as an empty form");
                    }
                    items.push(self.parse_word_item(&w, col)?);
                }
                Some((Tok::LBrack, col)) => {
                    self.pos += 1;
                    if inside_optional {
                        return err(self.line, col, "optional groups do not nest");
                    }
                    let inner = self.parse_items(true)?;
                    match self.peek() {
                        Some((Tok::RBrack, _)) => self.pos += 1,
                        _ => return err(self.line, col, "unclosed optional group"),
                    }
                    if inner.is_empty() {
                        return err(self.line, col, "empty optional group");
                    }
                    items.push(Item::Optional(inner));
                }
                Some((Tok::RBrack, col)) => {
                    if inside_optional {
                        return Ok(items);
                    }
                    return err(self.line, col, "']' without matching '['");
                }
                Some((Tok::Star, col)) => {
                    return err(self.line, col, "'*' stands only for a whole context");
                }
                Some((Tok::LParen, col)) => {
                    return err(self.line, col, "unexpected '('");
                }
                Some((Tok::Comma, col)) | Some((Tok::RParen, col)) => {
                    if inside_optional {
                        return err(self.line, col, "unclosed optional group");
                    }
                    return Ok(items);
                }
                Some((Tok::Pipe, _)) | None => {
                    if inside_optional {
                        let col = self.peek().map_or(1, |(_, c)| *c);
                        return err(self.line, col, "unclosed optional group");
                    }
                    return Ok(items);
                }
            }
        }
    }

    fn parse_expr(&mut self) -> Result<Expr, DslError> {
        Ok(Expr::new(self.parse_items(false)?))
    }
}

/// Splits a token stream at `|` into exactly three parts.
fn split_three(
    toks: &[(Tok, usize)],
    line: usize,
    what: &str,
) -> Result<[Vec<(Tok, usize)>; 3], DslError> {
    let mut parts: Vec<Vec<(Tok, usize)>> = vec![Vec::new()];
    for t in toks {
        if t.0 == Tok::Pipe {
            parts.push(Vec::new());
        } else {
            parts.last_mut().unwrap().push(t.clone());
        }
    }
    if parts.len() != 3 {
        return err(
            line,
            toks.first().map_or(1, |(_, c)| *c),
            format!("{what} takes three '|'-separated parts, got {}", parts.len()),
        );
    }
    let mut it = parts.into_iter();
    Ok([it.next().unwrap(), it.next().unwrap(), it.next().unwrap()])
}

struct PartParser<'a> {
    line: usize,
    ntapes: usize,
    alphabet: &'a Alphabet,
}

impl<'a> PartParser<'a> {
    fn exprs_of_part(&self, toks: &[(Tok, usize)], what: &str) -> Result<Vec<Expr>, DslError> {
        let first_col = toks.first().map_or(1, |(_, c)| *c);
        if toks.first().map(|(t, _)| t) == Some(&Tok::LParen) {
            let last = toks.last().map(|(t, _)| t);
            if last != Some(&Tok::RParen) {
                return err(self.line, first_col, "unclosed '('");
            }
            let inner = &toks[1..toks.len() - 1];
            let mut p = ExprParser {
                toks: inner,
                pos: 0,
                line: self.line,
                alphabet: self.alphabet,
            };
            let mut exprs = vec![p.parse_expr()?];
            while let Some((Tok::Comma, _)) = p.peek() {
                p.pos += 1;
                exprs.push(p.parse_expr()?);
            }
            if p.pos != inner.len() {
                let col = p.peek().map_or(first_col, |(_, c)| *c);
                return err(self.line, col, "trailing tokens in tuple");
            }
            if exprs.len() != self.ntapes {
                return err(
                    self.line,
                    first_col,
                    format!(
                        "arity mismatch in {what}: tuple of width {}, grammar has {} tapes",
                        exprs.len(),
                        self.ntapes
                    ),
                );
            }
            return Ok(exprs);
        }
        // Bare expression: only unambiguous with a single tape.
        if self.ntapes != 1 {
            return err(
                self.line,
                first_col,
                format!("{what} needs a parenthesized tuple of width {}", self.ntapes),
            );
        }
        let mut p = ExprParser {
            toks,
            pos: 0,
            line: self.line,
            alphabet: self.alphabet,
        };
        let e = p.parse_expr()?;
        if p.pos != toks.len() {
            let col = p.peek().map_or(first_col, |(_, c)| *c);
            return err(self.line, col, "trailing tokens after expression");
        }
        Ok(vec![e])
    }

    fn lex_context(&self, toks: &[(Tok, usize)], what: &str) -> Result<LexContext, DslError> {
        if let [(Tok::Star, _)] = toks {
            return Ok(LexContext::Any);
        }
        if toks.is_empty() {
            return err(self.line, 1, format!("missing {what}"));
        }
        Ok(LexContext::Tuple(self.exprs_of_part(toks, what)?))
    }

    fn surf_context(&self, toks: &[(Tok, usize)], what: &str) -> Result<SurfContext, DslError> {
        if let [(Tok::Star, _)] = toks {
            return Ok(SurfContext::Any);
        }
        if toks.is_empty() {
            return err(self.line, 1, format!("missing {what}"));
        }
        let first_col = toks.first().map_or(1, |(_, c)| *c);
        let mut p = ExprParser {
            toks,
            pos: 0,
            line: self.line,
            alphabet: self.alphabet,
        };
        let e = p.parse_expr()?;
        if p.pos != toks.len() {
            let col = p.peek().map_or(first_col, |(_, c)| *c);
            return err(self.line, col, format!("trailing tokens in {what}"));
        }
        Ok(SurfContext::Expr(e))
    }
}

// --- feature pair parsing --------------------------------------------------

fn parse_feature_value(text: &str) -> FeatValue {
    match text.strip_prefix('$') {
        Some(name) => FeatValue::Variable(name.to_string()),
        None => FeatValue::Atom(text.to_string()),
    }
}

fn parse_pair(word: &str, line: usize, col: usize) -> Result<(String, FeatValue), DslError> {
    let Some((k, v)) = word.split_once('=') else {
        return err(line, col, format!("expected k=v pair, got '{word}'"));
    };
    if k.is_empty() || v.is_empty() || v == "$" {
        return err(line, col, format!("malformed k=v pair '{word}'"));
    }
    Ok((k.to_string(), parse_feature_value(v)))
}

fn parse_feature_line(
    fragment: &str,
    base_col: usize,
    line: usize,
) -> Result<FeatureStructure, DslError> {
    let mut fs = FeatureStructure::new();
    let mut col = base_col;
    for piece in fragment.split(',') {
        let trimmed = piece.trim();
        if trimmed.is_empty() {
            return err(line, col, "empty feature pair");
        }
        let lead = piece.len() - piece.trim_start().len();
        let piece_col = col + lead;
        let (k, v) = parse_pair(trimmed, line, piece_col)?;
        if fs.get(&k).is_some() {
            return err(line, piece_col, format!("attribute '{k}' given twice"));
        }
        fs.set(&k, v);
        col += piece.chars().count() + 1;
    }
    Ok(fs)
}

// --- grammar parsing -------------------------------------------------------

struct RuleHeader {
    id: String,
    operator: Operator,
    line: usize,
}

struct RuleBlock {
    header: RuleHeader,
    features: Option<FeatureStructure>,
    lex: Option<(usize, String, usize)>,
    surf: Option<(usize, String, usize)>,
}

pub fn parse_grammar(text: &str) -> Result<Grammar, DslError> {
    let mut ntapes: Option<usize> = None;
    let mut names: Option<Vec<String>> = None;
    let mut consonants: Option<Vec<char>> = None;
    let mut vowels: Option<Vec<char>> = None;
    let mut blocks: Vec<RuleBlock> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = strip_comment(raw);
        if line.trim().is_empty() {
            continue;
        }
        let words = words_with_cols(line);
        let (first, first_col) = words[0].clone();

        if first == "rule" {
            if ntapes.is_none() {
                return err(lineno, first_col, "grammar must open with 'tapes: n'");
            }
            if words.len() != 3 {
                return err(lineno, first_col, "expected 'rule <id> <opt|oblig>'");
            }
            let operator = match words[2].0.as_str() {
                "opt" => Operator::Optional,
                "oblig" => Operator::Obligatory,
                other => {
                    return err(
                        lineno,
                        words[2].1,
                        format!("operator must be 'opt' or 'oblig', got '{other}'"),
                    )
                }
            };
            blocks.push(RuleBlock {
                header: RuleHeader {
                    id: words[1].0.clone(),
                    operator,
                    line: lineno,
                },
                features: None,
                lex: None,
                surf: None,
            });
            continue;
        }

        let Some(directive) = first.strip_suffix(':') else {
            return err(lineno, first_col, format!("unexpected '{first}' in grammar file"));
        };
        let after = line.split_once(':').map_or("", |x| x.1);
        let base_col = line.chars().take_while(|c| *c != ':').count() + 2;
        let rest = after.trim();

        match directive {
            "tapes" => {
                if ntapes.is_some() {
                    return err(lineno, first_col, "'tapes' given twice");
                }
                if !blocks.is_empty() {
                    return err(lineno, first_col, "'tapes' must precede the rules");
                }
                let n: usize = rest.trim().parse().map_err(|_| DslError {
                    line: lineno,
                    col: base_col,
                    message: format!("tape count must be a positive integer, got '{}'", rest.trim()),
                })?;
                if n == 0 {
                    return err(lineno, base_col, "tape count must be at least 1");
                }
                ntapes = Some(n);
            }
            "names" => {
                if names.is_some() {
                    return err(lineno, first_col, "'names' given twice");
                }
                if !blocks.is_empty() {
                    return err(lineno, first_col, "'names' must precede the rules");
                }
                names = Some(rest.split_whitespace().map(|s| s.to_string()).collect());
            }
            "consonants" | "vowels" => {
                let slot = if directive == "consonants" { &mut consonants } else { &mut vowels };
                if slot.is_some() {
                    return err(lineno, first_col, format!("'{directive}' given twice"));
                }
                if !blocks.is_empty() {
                    return err(lineno, first_col, format!("'{directive}' must precede the rules"));
                }
                let mut symbols = Vec::new();
                for (word, col) in words_with_cols(after) {
                    let mut chars = word.chars();
                    let ch = chars.next().unwrap();
                    if chars.next().is_some() {
                        return err(lineno, base_col + col - 1, "alphabet symbols are single characters");
                    }
                    if RESERVED.contains(&ch) {
                        return err(
                            lineno,
                            base_col + col - 1,
                            format!("symbol '{ch}' is reserved punctuation"),
                        );
                    }
                    symbols.push(ch);
                }
                *slot = Some(symbols);
            }
            "features" | "lex" | "surf" => {
                let Some(block) = blocks.last_mut() else {
                    return err(lineno, first_col, format!("'{directive}' outside a rule block"));
                };
                match directive {
                    "features" => {
                        if block.features.is_some() {
                            return err(lineno, first_col, "'features' given twice in one rule");
                        }
                        block.features = Some(parse_feature_line(after, base_col, lineno)?);
                    }
                    "lex" => {
                        if block.lex.is_some() {
                            return err(lineno, first_col, "'lex' given twice in one rule");
                        }
                        block.lex = Some((lineno, after.to_string(), base_col));
                    }
                    _ => {
                        if block.surf.is_some() {
                            return err(lineno, first_col, "'surf' given twice in one rule");
                        }
                        block.surf = Some((lineno, after.to_string(), base_col));
                    }
                }
            }
            other => {
                return err(lineno, first_col, format!("unknown directive '{other}:'"));
            }
        }
    }

    let Some(ntapes) = ntapes else {
        return err(1, 1, "grammar must open with 'tapes: n'");
    };
    let tape_names = match names {
        Some(ns) => {
            if ns.len() != ntapes {
                return err(1, 1, format!("expected {ntapes} tape names, got {}", ns.len()));
            }
            let unique: BTreeSet<&String> = ns.iter().collect();
            if unique.len() != ns.len() {
                return err(1, 1, "tape names must be distinct");
            }
            ns
        }
        None => (1..=ntapes).map(|i| format!("t{i}")).collect(),
    };
    let alphabet = match (&consonants, &vowels) {
        (None, None) => Alphabet::standard(),
        _ => Alphabet::new(
            consonants.as_deref().unwrap_or(&[]),
            vowels.as_deref().unwrap_or(&[]),
        )
        .map_err(|e| DslError {
            line: 1,
            col: 1,
            message: e.to_string(),
        })?,
    };

    let mut rules = Vec::new();
    let mut seen_ids = BTreeSet::new();
    for block in blocks {
        let RuleHeader { id, operator, line } = block.header;
        if !seen_ids.insert(id.clone()) {
            return err(line, 1, format!("duplicate rule id '{id}'"));
        }
        let Some((lex_line, lex_text, lex_col)) = block.lex else {
            return err(line, 1, format!("rule {id} has no 'lex' line"));
        };
        let Some((surf_line, surf_text, surf_col)) = block.surf else {
            return err(line, 1, format!("rule {id} has no 'surf' line"));
        };

        let toks = tokenize(&lex_text, lex_col);
        let [llc_t, lex_t, rlc_t] = split_three(&toks, lex_line, "lex")?;
        let pp = PartParser {
            line: lex_line,
            ntapes,
            alphabet: &alphabet,
        };
        let llc = pp.lex_context(&llc_t, "left lexical context")?;
        if let [(Tok::Star, col)] = lex_t.as_slice() {
            return err(lex_line, *col, "lex must be a form, not '*'");
        }
        if lex_t.is_empty() {
            return err(lex_line, lex_col, "missing lex form");
        }
        let lex = pp.exprs_of_part(&lex_t, "lex")?;
        let rlc = pp.lex_context(&rlc_t, "right lexical context")?;

        let toks = tokenize(&surf_text, surf_col);
        let [lsc_t, surf_t, rsc_t] = split_three(&toks, surf_line, "surf")?;
        let sp = PartParser {
            line: surf_line,
            ntapes,
            alphabet: &alphabet,
        };
        let lsc = sp.surf_context(&lsc_t, "left surface context")?;
        let surf = match sp.surf_context(&surf_t, "surf form")? {
            SurfContext::Any => {
                let col = surf_t.first().map_or(surf_col, |(_, c)| *c);
                return err(surf_line, col, "surf must be a form, not '*'");
            }
            SurfContext::Expr(e) => e,
        };
        let rsc = sp.surf_context(&rsc_t, "right surface context")?;

        let rule = Rule {
            id: id.clone(),
            operator,
            llc,
            lex,
            rlc,
            lsc,
            surf,
            rsc,
            features: block.features.unwrap_or_default(),
        };
        if !rule.consumes_lexical_material() {
            return err(lex_line, lex_col, format!("rule {id} consumes no lexical material"));
        }
        rules.push(rule);
    }

    Ok(Grammar {
        ntapes,
        tape_names,
        alphabet,
        rules,
    })
}

// --- lexicon parsing -------------------------------------------------------

pub fn parse_lexicon(text: &str, grammar: &Grammar) -> Result<Lexicon, DslError> {
    let mut morphemes: Vec<Morpheme> = Vec::new();
    let mut stems: Vec<Stem> = Vec::new();
    let mut morpheme_ids = BTreeSet::new();
    let mut stem_ids = BTreeSet::new();

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = strip_comment(raw);
        if line.trim().is_empty() {
            continue;
        }
        let words = words_with_cols(line);
        let (first, first_col) = words[0].clone();
        match first.as_str() {
            "morpheme" => {
                if words.len() < 4 {
                    return err(lineno, first_col, "expected 'morpheme <tape> <id> <form> [k=v ...]'");
                }
                let (tape_name, tape_col) = &words[1];
                let Some(tape) = grammar.tape_index(tape_name) else {
                    return err(lineno, *tape_col, format!("unknown tape '{tape_name}'"));
                };
                let (id, id_col) = &words[2];
                if !morpheme_ids.insert(id.clone()) {
                    return err(lineno, *id_col, format!("duplicate id '{id}'"));
                }
                let (form_text, form_col) = &words[3];
                let form = if form_text == "0" {
                    Vec::new()
                } else {
                    grammar.alphabet.seq(form_text).map_err(|e| DslError {
                        line: lineno,
                        col: *form_col,
                        message: e.to_string(),
                    })?
                };
                let mut features = FeatureStructure::new();
                for (word, col) in &words[4..] {
                    let (k, v) = parse_pair(word, lineno, *col)?;
                    if features.get(&k).is_some() {
                        return err(lineno, *col, format!("attribute '{k}' given twice"));
                    }
                    features.set(&k, v);
                }
                morphemes.push(Morpheme {
                    tape,
                    id: id.clone(),
                    form,
                    features,
                });
            }
            "stem" => {
                if words.len() < 2 {
                    return err(lineno, first_col, "expected 'stem <id> <morphemeId ...> [k=v ...]'");
                }
                let (id, id_col) = &words[1];
                if !stem_ids.insert(id.clone()) {
                    return err(lineno, *id_col, format!("duplicate id '{id}'"));
                }
                let mut refs: Vec<(String, usize)> = Vec::new();
                let mut features = FeatureStructure::new();
                let mut gloss = None;
                let mut in_pairs = false;
                for (word, col) in &words[2..] {
                    if word.contains('=') {
                        in_pairs = true;
                        let (k, v) = parse_pair(word, lineno, *col)?;
                        if features.get(&k).is_some() {
                            return err(lineno, *col, format!("attribute '{k}' given twice"));
                        }
                        if k == "gloss" {
                            if let FeatValue::Atom(g) = &v {
                                gloss = Some(g.clone());
                            }
                        }
                        features.set(&k, v);
                    } else {
                        if in_pairs {
                            return err(lineno, *col, "morpheme ids must precede k=v pairs");
                        }
                        refs.push((word.clone(), *col));
                    }
                }
                if refs.len() != grammar.ntapes {
                    return err(
                        lineno,
                        first_col,
                        format!(
                            "stem {id} references {} morphemes, grammar has {} tapes",
                            refs.len(),
                            grammar.ntapes
                        ),
                    );
                }
                let mut tapes_seen = BTreeSet::new();
                for (mid, col) in &refs {
                    let Some(m) = morphemes.iter().find(|m| &m.id == mid) else {
                        return err(lineno, *col, format!("stem {id} references unknown morpheme '{mid}'"));
                    };
                    if !tapes_seen.insert(m.tape) {
                        return err(
                            lineno,
                            *col,
                            format!("stem {id} has two morphemes on tape '{}'", grammar.tape_names[m.tape]),
                        );
                    }
                }
                stems.push(Stem {
                    id: id.clone(),
                    morpheme_ids: refs.into_iter().map(|(m, _)| m).collect(),
                    features,
                    gloss,
                });
            }
            other => {
                return err(lineno, first_col, format!("unexpected '{other}' in lexicon file"));
            }
        }
    }

    Ok(Lexicon { morphemes, stems })
}

// --- convenience for engine callers ---------------------------------------

/// Morphemes grouped per tape, for enumeration during analysis.
pub fn morphemes_by_tape<'a>(lexicon: &'a Lexicon, grammar: &Grammar) -> Vec<Vec<&'a Morpheme>> {
    (0..grammar.ntapes)
        .map(|t| lexicon.morphemes_on_tape(t))
        .collect()
}

/// Bindings do not appear in files, but a shared rendering helps diagnostics.
pub fn render_bindings(b: &Bindings) -> String {
    b.to_string()
}
