//! Rules: the unit of licensing in the two-level grammar.

use std::fmt;

use crate::expr::{Expr, LexContext, SurfContext};
use crate::feature::FeatureStructure;

/// `Optional` rules only license; `Obligatory` rules additionally demand that
/// wherever their lexical side fires in context, the surface side holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    Optional,
    Obligatory,
}

impl Operator {
    pub fn keyword(self) -> &'static str {
        match self {
            Operator::Optional => "opt",
            Operator::Obligatory => "oblig",
        }
    }
}

/// One rule. `llc`/`lex`/`rlc` describe the lexical tapes (one expression per
/// tape in `lex` and in a concrete context tuple); `lsc`/`surf`/`rsc` describe
/// the surface string. Bindings are shared across all six expressions of one
/// application.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub id: String,
    pub operator: Operator,
    pub llc: LexContext,
    pub lex: Vec<Expr>,
    pub rlc: LexContext,
    pub lsc: SurfContext,
    pub surf: Expr,
    pub rsc: SurfContext,
    pub features: FeatureStructure,
}

impl Rule {
    /// A rule must be able to consume lexical material: at least one of its
    /// `lex` components has at least one item.
    pub fn consumes_lexical_material(&self) -> bool {
        self.lex.iter().any(|e| !e.is_empty())
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rule {} {}", self.id, self.operator.keyword())?;
        if !self.features.is_empty() {
            let pairs: Vec<String> = self
                .features
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            writeln!(f, "features: {}", pairs.join(", "))?;
        }
        let lex_parts: Vec<String> = self.lex.iter().map(|e| e.to_string()).collect();
        writeln!(
            f,
            "lex: {} | ({}) | {}",
            lex_context(&self.llc),
            lex_parts.join(", "),
            lex_context(&self.rlc)
        )?;
        writeln!(
            f,
            "surf: {} | {} | {}",
            surf_context(&self.lsc),
            self.surf,
            surf_context(&self.rsc)
        )
    }
}

fn lex_context(ctx: &LexContext) -> String {
    match ctx {
        LexContext::Any => "*".to_string(),
        LexContext::Tuple(exprs) => {
            let parts: Vec<String> = exprs.iter().map(|e| e.to_string()).collect();
            format!("({})", parts.join(", "))
        }
    }
}

fn surf_context(ctx: &SurfContext) -> String {
    match ctx {
        SurfContext::Any => "*".to_string(),
        SurfContext::Expr(e) => e.to_string(),
    }
}
