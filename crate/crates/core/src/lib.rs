//! Multi-tape two-level morphology engine.
//!
//! Words are modeled as a mapping between one surface string and a tuple of
//! parallel lexical tapes, one per morpheme. For Arabic-style templatic
//! morphology the tapes carry a CV pattern, a consonantal root, and a vowel
//! melody, and a single rule set derives singulars, broken plurals, and
//! diminutives from the same three morphemes without ever materializing an
//! intermediate stem.
//!
//! The pieces:
//!
//! - [`ruledsl`]: text format for grammars (rules over segment expressions
//!   with contexts, operators, and features) and lexicons (morphemes, stems).
//! - [`engine`]: the interpreter. [`synthesize`] maps a lexical tuple to all
//!   its surface forms; [`analyze`] maps a surface form back to morpheme
//!   combinations. Both directions share one licensing relation.
//! - [`morphotactics`]: keeps only analyses whose morphemes form a declared
//!   stem.
//! - [`arabic`]: vendored grammar and lexicon for the broken plural and
//!   diminutive data, plus a single-tape variant of the plural rules.
//! - [`oracle`]: brute-force reference implementation used to cross-check
//!   the interpreter.
//! - [`toygen`]: seeded random grammars for differential testing.
//!
//! ```
//! use mtmorph::{arabic, morphotactics, synthesize, analyze};
//!
//! let b = arabic::builtin();
//! let stem = b.lexicon.stem("jundub").unwrap();
//! let (lexical, features) = b.lexicon.stem_lexical(stem, b.multi_tape.ntapes);
//! let results = synthesize(&lexical, &features, &b.multi_tape).unwrap();
//! let surfaces: Vec<String> = results.iter().map(|r| r.surface_string()).collect();
//! assert_eq!(surfaces, ["janaadib", "junaydib", "jundub"]);
//!
//! let raw = analyze("janaadib", &b.multi_tape, &b.lexicon).unwrap();
//! let mt = morphotactics::MorphotacticGrammar::from_lexicon(&b.lexicon, 3);
//! let kept = morphotactics::filter(&raw, &mt);
//! assert_eq!(kept[0].stem_id.as_deref(), Some("jundub"));
//! ```

pub mod arabic;
pub mod engine;
pub mod expr;
pub mod feature;
pub mod morphotactics;
pub mod oracle;
pub mod partition;
pub mod rule;
pub mod ruledsl;
pub mod segment;
pub mod tape;
pub mod toygen;

pub use engine::{analyze, check_obligatory, synthesize, Analysis, EngineError, SynthesisResult};
pub use feature::{FeatValue, FeatureStructure};
pub use morphotactics::{filter, MorphotacticGrammar};
pub use partition::{Partition, Step};
pub use rule::{Operator, Rule};
pub use ruledsl::{parse_grammar, parse_lexicon, Grammar, Lexicon, Morpheme, Stem};
pub use segment::{Alphabet, Segment, SegmentKind};
pub use tape::TapeTuple;
