//! Flat feature structures and unification.
//!
//! A structure maps attribute names to atoms or named variables. Variables
//! with the same name co-refer within one unification problem, so
//! `{j=$X, k=$X}` unified with `{j=a}` yields `{j=a, k=a}`. Unification
//! failure is a value (`None`), not an error.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatValue {
    Atom(String),
    Variable(String),
}

impl FeatValue {
    pub fn atom(s: &str) -> FeatValue {
        FeatValue::Atom(s.to_string())
    }

    pub fn var(s: &str) -> FeatValue {
        FeatValue::Variable(s.to_string())
    }
}

impl fmt::Display for FeatValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatValue::Atom(a) => write!(f, "{a}"),
            FeatValue::Variable(v) => write!(f, "${v}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureStructure {
    pairs: BTreeMap<String, FeatValue>,
}

impl FeatureStructure {
    pub fn new() -> FeatureStructure {
        FeatureStructure::default()
    }

    pub fn from_pairs<I>(pairs: I) -> FeatureStructure
    where
        I: IntoIterator<Item = (String, FeatValue)>,
    {
        FeatureStructure {
            pairs: pairs.into_iter().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, attr: &str) -> Option<&FeatValue> {
        self.pairs.get(attr)
    }

    pub fn set(&mut self, attr: &str, value: FeatValue) {
        self.pairs.insert(attr.to_string(), value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &FeatValue)> {
        self.pairs.iter()
    }

    /// Most general unifier of `self` and `other`, or `None` when some
    /// attribute resolves to two distinct atoms. Of two unbound variables the
    /// lexicographically smaller name becomes the representative, which makes
    /// the operation commutative on the nose rather than up to renaming.
    pub fn unify(&self, other: &FeatureStructure) -> Option<FeatureStructure> {
        let mut subst: BTreeMap<String, FeatValue> = BTreeMap::new();
        for (attr, a) in &self.pairs {
            if let Some(b) = other.pairs.get(attr) {
                union(a, b, &mut subst)?;
            }
        }
        let mut out = BTreeMap::new();
        for (attr, v) in self.pairs.iter().chain(other.pairs.iter()) {
            out.insert(attr.clone(), resolve(v, &subst));
        }
        Some(FeatureStructure { pairs: out })
    }

    /// Folds `unify` over any number of structures; empty input yields the
    /// empty structure.
    pub fn unify_all<'a, I>(structures: I) -> Option<FeatureStructure>
    where
        I: IntoIterator<Item = &'a FeatureStructure>,
    {
        let mut acc = FeatureStructure::new();
        for fs in structures {
            acc = acc.unify(fs)?;
        }
        Some(acc)
    }

    /// True when the two structures can unify; the merged result is discarded.
    pub fn compatible(&self, other: &FeatureStructure) -> bool {
        self.unify(other).is_some()
    }

    /// Renames variables to `v1, v2, ...` in order of first appearance over
    /// the (sorted) attributes, for comparisons up to variable renaming.
    pub fn canonical(&self) -> FeatureStructure {
        let mut names: BTreeMap<String, String> = BTreeMap::new();
        let mut pairs = BTreeMap::new();
        for (attr, value) in &self.pairs {
            let v = match value {
                FeatValue::Atom(_) => value.clone(),
                FeatValue::Variable(name) => {
                    let next = format!("v{}", names.len() + 1);
                    FeatValue::Variable(names.entry(name.clone()).or_insert(next).clone())
                }
            };
            pairs.insert(attr.clone(), v);
        }
        FeatureStructure { pairs }
    }
}

fn resolve(value: &FeatValue, subst: &BTreeMap<String, FeatValue>) -> FeatValue {
    let mut current = value.clone();
    loop {
        match current {
            FeatValue::Atom(_) => return current,
            FeatValue::Variable(ref name) => match subst.get(name) {
                Some(next) => current = next.clone(),
                None => return current,
            },
        }
    }
}

fn union(a: &FeatValue, b: &FeatValue, subst: &mut BTreeMap<String, FeatValue>) -> Option<()> {
    let ra = resolve(a, subst);
    let rb = resolve(b, subst);
    match (ra, rb) {
        (FeatValue::Atom(x), FeatValue::Atom(y)) => (x == y).then_some(()),
        (FeatValue::Atom(x), FeatValue::Variable(v))
        | (FeatValue::Variable(v), FeatValue::Atom(x)) => {
            subst.insert(v, FeatValue::Atom(x));
            Some(())
        }
        (FeatValue::Variable(x), FeatValue::Variable(y)) => {
            if x != y {
                let (rep, bound) = if x < y { (x, y) } else { (y, x) };
                subst.insert(bound, FeatValue::Variable(rep));
            }
            Some(())
        }
    }
}

impl fmt::Display for FeatureStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (attr, value) in &self.pairs {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{attr}={value}")?;
            first = false;
        }
        Ok(())
    }
}
