//! Segments and the per-grammar symbol classification table.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// What a single symbol stands for. Pattern slots are the template symbols
/// `c` and `v`; they are reserved and cannot be reclassified by a grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SegmentKind {
    Consonant,
    Vowel,
    PatternConsonantSlot,
    PatternVowelSlot,
}

impl SegmentKind {
    pub fn is_pattern_slot(self) -> bool {
        matches!(
            self,
            SegmentKind::PatternConsonantSlot | SegmentKind::PatternVowelSlot
        )
    }
}

/// One classified symbol. Equality includes the kind, but since segments are
/// only built through an [`Alphabet`], kind is always determined by symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Segment {
    pub symbol: char,
    pub kind: SegmentKind,
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol)
    }
}

/// Renders a segment sequence with no separators; the empty sequence renders
/// as the empty string.
pub fn seq_to_string(seq: &[Segment]) -> String {
    seq.iter().map(|s| s.symbol).collect()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown symbol '{0}'")]
pub struct UnknownSymbol(pub char);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlphabetError {
    #[error("symbol '{0}' declared more than once")]
    Duplicate(char),
    #[error("symbol '{0}' is reserved for pattern slots")]
    ReservedPatternSlot(char),
}

/// Total classification table for a grammar's symbols. `c` and `v` are always
/// present as pattern slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    table: BTreeMap<char, SegmentKind>,
}

impl Alphabet {
    pub fn new(consonants: &[char], vowels: &[char]) -> Result<Alphabet, AlphabetError> {
        let mut table = BTreeMap::new();
        table.insert('c', SegmentKind::PatternConsonantSlot);
        table.insert('v', SegmentKind::PatternVowelSlot);
        for (symbols, kind) in [
            (consonants, SegmentKind::Consonant),
            (vowels, SegmentKind::Vowel),
        ] {
            for &ch in symbols {
                if ch == 'c' || ch == 'v' {
                    return Err(AlphabetError::ReservedPatternSlot(ch));
                }
                if table.insert(ch, kind).is_some() {
                    return Err(AlphabetError::Duplicate(ch));
                }
            }
        }
        Ok(Alphabet { table })
    }

    /// The transliteration used by the vendored Arabic data, and the default
    /// for grammar files that declare no alphabet of their own.
    pub fn standard() -> Alphabet {
        Alphabet::new(
            &['j', 'n', 'd', 'b', 's', 'l', 'T', 'w', 'y', '\''],
            &['a', 'i', 'u'],
        )
        .expect("standard alphabet is well formed")
    }

    pub fn classify(&self, symbol: char) -> Result<SegmentKind, UnknownSymbol> {
        self.table
            .get(&symbol)
            .copied()
            .ok_or(UnknownSymbol(symbol))
    }

    pub fn segment(&self, symbol: char) -> Result<Segment, UnknownSymbol> {
        Ok(Segment {
            symbol,
            kind: self.classify(symbol)?,
        })
    }

    /// Classifies every character of `text` in order.
    pub fn seq(&self, text: &str) -> Result<Vec<Segment>, UnknownSymbol> {
        text.chars().map(|ch| self.segment(ch)).collect()
    }

    pub fn segments_of_kind(&self, kind: SegmentKind) -> Vec<Segment> {
        self.table
            .iter()
            .filter(|(_, k)| **k == kind)
            .map(|(ch, k)| Segment {
                symbol: *ch,
                kind: *k,
            })
            .collect()
    }

    pub fn symbols(&self) -> impl Iterator<Item = (char, SegmentKind)> + '_ {
        self.table.iter().map(|(ch, k)| (*ch, *k))
    }

    pub fn consonants(&self) -> Vec<char> {
        self.table
            .iter()
            .filter(|(_, k)| **k == SegmentKind::Consonant)
            .map(|(ch, _)| *ch)
            .collect()
    }

    pub fn vowels(&self) -> Vec<char> {
        self.table
            .iter()
            .filter(|(_, k)| **k == SegmentKind::Vowel)
            .map(|(ch, _)| *ch)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classifies_standard_symbols() {
        let a = Alphabet::standard();
        assert_eq!(a.classify('j'), Ok(SegmentKind::Consonant));
        assert_eq!(a.classify('a'), Ok(SegmentKind::Vowel));
        assert_eq!(a.classify('c'), Ok(SegmentKind::PatternConsonantSlot));
        assert_eq!(a.classify('v'), Ok(SegmentKind::PatternVowelSlot));
        assert_eq!(a.classify('q'), Err(UnknownSymbol('q')));
    }

    #[test]
    fn rejects_reserved_and_duplicate_symbols() {
        assert_eq!(
            Alphabet::new(&['c'], &[]),
            Err(AlphabetError::ReservedPatternSlot('c'))
        );
        assert_eq!(
            Alphabet::new(&['b', 'b'], &[]),
            Err(AlphabetError::Duplicate('b'))
        );
        assert_eq!(
            Alphabet::new(&['b'], &['b']),
            Err(AlphabetError::Duplicate('b'))
        );
    }

    #[test]
    fn seq_classifies_each_character() {
        let a = Alphabet::standard();
        let seq = a.seq("jndb").unwrap();
        assert_eq!(seq_to_string(&seq), "jndb");
        assert!(seq.iter().all(|s| s.kind == SegmentKind::Consonant));
        assert_eq!(a.seq("jqn"), Err(UnknownSymbol('q')));
    }
}
