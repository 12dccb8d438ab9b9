//! Tape tuples: the lexical side of a mapping, one segment sequence per tape.

use std::fmt;

use crate::segment::{seq_to_string, Segment};

/// `n` parallel tapes. For the vendored Arabic data `n` is 3 and the order is
/// pattern, root, vocalism; the stem-level grammar uses a single tape.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TapeTuple {
    pub tapes: Vec<Vec<Segment>>,
}

impl TapeTuple {
    pub fn new(tapes: Vec<Vec<Segment>>) -> TapeTuple {
        TapeTuple { tapes }
    }

    pub fn ntapes(&self) -> usize {
        self.tapes.len()
    }

    pub fn total_len(&self) -> usize {
        self.tapes.iter().map(|t| t.len()).sum()
    }

    /// All positions at the end of their tape.
    pub fn exhausted(&self, positions: &[usize]) -> bool {
        positions
            .iter()
            .zip(&self.tapes)
            .all(|(pos, tape)| *pos == tape.len())
    }
}

impl fmt::Display for TapeTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.tapes.iter().map(|t| seq_to_string(t)).collect();
        write!(f, "({})", parts.join(", "))
    }
}
