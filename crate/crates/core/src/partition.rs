//! Partitions: how a lexical-to-surface mapping decomposes into licensed steps.

use crate::expr::Bindings;
use crate::segment::Segment;
use crate::tape::TapeTuple;

/// One step of a partition: the lexical slice consumed on each tape, the
/// surface slice emitted, the licensing rule, and the bindings under which it
/// licensed the step.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Step {
    pub rule_id: String,
    pub lex_slices: Vec<Vec<Segment>>,
    pub surf_slice: Vec<Segment>,
    pub bindings: Bindings,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition {
    pub steps: Vec<Step>,
}

impl Partition {
    pub fn new(steps: Vec<Step>) -> Partition {
        Partition { steps }
    }

    /// Per-tape concatenation of the lexical slices.
    pub fn lexical(&self) -> TapeTuple {
        let ntapes = self.steps.first().map_or(0, |s| s.lex_slices.len());
        let mut tapes = vec![Vec::new(); ntapes];
        for step in &self.steps {
            for (tape, slice) in tapes.iter_mut().zip(&step.lex_slices) {
                tape.extend_from_slice(slice);
            }
        }
        TapeTuple::new(tapes)
    }

    /// Concatenation of the surface slices.
    pub fn surface(&self) -> Vec<Segment> {
        let mut out = Vec::new();
        for step in &self.steps {
            out.extend_from_slice(&step.surf_slice);
        }
        out
    }

    /// Lexical positions at the start of each step, plus the final positions;
    /// `boundaries()[i]` is where step `i` begins on every tape.
    pub fn lex_boundaries(&self) -> Vec<Vec<usize>> {
        let ntapes = self.steps.first().map_or(0, |s| s.lex_slices.len());
        let mut positions = vec![0; ntapes];
        let mut out = vec![positions.clone()];
        for step in &self.steps {
            for (pos, slice) in positions.iter_mut().zip(&step.lex_slices) {
                *pos += slice.len();
            }
            out.push(positions.clone());
        }
        out
    }

    /// Surface positions at the start of each step, plus the final position.
    pub fn surf_boundaries(&self) -> Vec<usize> {
        let mut pos = 0;
        let mut out = vec![0];
        for step in &self.steps {
            pos += step.surf_slice.len();
            out.push(pos);
        }
        out
    }

    /// Checks that this partition's slices concatenate to exactly the given
    /// lexical tuple and surface string.
    pub fn concatenates_to(&self, lexical: &TapeTuple, surface: &[Segment]) -> bool {
        (self.steps.is_empty() && lexical.total_len() == 0 && surface.is_empty())
            || (self.lexical() == *lexical && self.surface() == surface)
    }
}
