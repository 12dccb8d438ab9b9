//! Form expressions: the pattern language rules use to describe tape slices.

use std::collections::BTreeMap;
use std::fmt;

use crate::segment::{Segment, SegmentKind};

/// Variable class: `C`-variables range over consonants, `V`-variables over
/// vowels. Pattern slots are matched only by literals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarClass {
    Consonant,
    Vowel,
}

impl VarClass {
    pub fn matches(self, kind: SegmentKind) -> bool {
        match self {
            VarClass::Consonant => kind == SegmentKind::Consonant,
            VarClass::Vowel => kind == SegmentKind::Vowel,
        }
    }

    pub fn letter(self) -> char {
        match self {
            VarClass::Consonant => 'C',
            VarClass::Vowel => 'V',
        }
    }
}

/// One item of an expression. Optional groups nest only one level deep; the
/// grammar parser enforces that.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Item {
    Literal(Segment),
    Var(VarClass, u32),
    Optional(Vec<Item>),
}

/// A sequence of items. The empty expression denotes the empty slice and is
/// written `0` in grammar files.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr {
    pub items: Vec<Item>,
}

impl Expr {
    pub fn new(items: Vec<Item>) -> Expr {
        Expr { items }
    }

    pub fn empty() -> Expr {
        Expr::default()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Upper bound on how many segments this expression can consume.
    pub fn max_len(&self) -> usize {
        fn of(items: &[Item]) -> usize {
            items
                .iter()
                .map(|item| match item {
                    Item::Literal(_) | Item::Var(..) => 1,
                    Item::Optional(inner) => of(inner),
                })
                .sum()
        }
        of(&self.items)
    }
}

fn fmt_items(items: &[Item], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let mut first = true;
    for item in items {
        if !first {
            write!(f, " ")?;
        }
        first = false;
        match item {
            Item::Literal(seg) => write!(f, "{seg}")?,
            Item::Var(class, index) => write!(f, "{}{index}", class.letter())?,
            Item::Optional(inner) => {
                write!(f, "[ ")?;
                fmt_items(inner, f)?;
                write!(f, " ]")?;
            }
        }
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.items.is_empty() {
            write!(f, "0")
        } else {
            fmt_items(&self.items, f)
        }
    }
}

/// Lexical-side context: `*` (always satisfied) or one expression per tape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LexContext {
    Any,
    Tuple(Vec<Expr>),
}

/// Surface-side context: `*` or a single expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SurfContext {
    Any,
    Expr(Expr),
}

/// Variable bindings accumulated while matching one rule application. The
/// same `(class, index)` must map to the identical segment everywhere it
/// appears across all six expressions of the application.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bindings {
    map: BTreeMap<(VarClass, u32), Segment>,
}

impl Bindings {
    pub fn new() -> Bindings {
        Bindings::default()
    }

    pub fn get(&self, class: VarClass, index: u32) -> Option<Segment> {
        self.map.get(&(class, index)).copied()
    }

    /// Returns the extended bindings, or `None` when the variable is already
    /// bound to a different segment.
    pub fn bind(&self, class: VarClass, index: u32, seg: Segment) -> Option<Bindings> {
        match self.map.get(&(class, index)) {
            Some(existing) if *existing != seg => None,
            Some(_) => Some(self.clone()),
            None => {
                let mut next = self.clone();
                next.map.insert((class, index), seg);
                Some(next)
            }
        }
    }

    /// True when every binding of `self` also holds in `other`.
    pub fn is_subset_of(&self, other: &Bindings) -> bool {
        self.map
            .iter()
            .all(|(k, v)| other.map.get(k) == Some(v))
    }

    pub fn iter(&self) -> impl Iterator<Item = ((VarClass, u32), Segment)> + '_ {
        self.map.iter().map(|(k, v)| (*k, *v))
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl fmt::Display for Bindings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for ((class, index), seg) in &self.map {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "{}{index}={seg}", class.letter())?;
        }
        Ok(())
    }
}
