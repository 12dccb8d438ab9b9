//! Seeded generator of small random grammars and inputs for differential
//! testing of the interpreter against the brute-force reference.
//!
//! Cases are built as rule text and parsed through the public parser, so
//! every generated grammar is also a parser round-trip. Sizes stay tiny on
//! purpose: the reference implementation is exponential.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ruledsl::{parse_grammar, Grammar};
use crate::tape::TapeTuple;

const CONSONANT_POOL: [char; 4] = ['b', 'd', 'g', 'k'];
const VOWEL_POOL: [char; 2] = ['a', 'e'];

#[derive(Debug, Clone)]
pub struct ToyCase {
    pub grammar_text: String,
    pub grammar: Grammar,
    pub lexical: TapeTuple,
}

struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    fn pick(&mut self, n: usize) -> usize {
        self.rng.next_u32() as usize % n
    }

    fn chance(&mut self, num: u32, den: u32) -> bool {
        self.rng.next_u32() % den < num
    }

    fn letter(&mut self, consonants: &[char], vowels: &[char]) -> char {
        let all: Vec<char> = consonants.iter().chain(vowels).copied().collect();
        all[self.pick(all.len())]
    }

    /// One expression item: (token text, minimum consumed length).
    fn item(&mut self, consonants: &[char], vowels: &[char], allow_optional: bool) -> (String, usize) {
        match self.pick(if allow_optional { 20 } else { 17 }) {
            0..=9 => (self.letter(consonants, vowels).to_string(), 1),
            10..=16 => {
                let class = if self.chance(1, 2) { 'C' } else { 'V' };
                let index = 1 + self.pick(2);
                (format!("{class}{index}"), 1)
            }
            _ => {
                let (inner, _) = self.item(consonants, vowels, false);
                (format!("[ {inner} ]"), 0)
            }
        }
    }

    /// An expression of up to `max_items` items; returns (text, min length).
    fn expr(&mut self, consonants: &[char], vowels: &[char], max_items: usize) -> (String, usize) {
        let n = self.pick(max_items + 1);
        let mut parts = Vec::new();
        let mut min_len = 0;
        for _ in 0..n {
            let (text, m) = self.item(consonants, vowels, true);
            parts.push(text);
            min_len += m;
        }
        if parts.is_empty() {
            ("0".to_string(), 0)
        } else {
            (parts.join(" "), min_len)
        }
    }

    fn tuple(&mut self, consonants: &[char], vowels: &[char], ntapes: usize, max_items: usize) -> (String, usize) {
        let mut parts = Vec::new();
        let mut min_len = 0;
        for _ in 0..ntapes {
            let (text, m) = self.expr(consonants, vowels, max_items);
            parts.push(text);
            min_len += m;
        }
        (format!("({})", parts.join(", ")), min_len)
    }

    fn lex_context(&mut self, consonants: &[char], vowels: &[char], ntapes: usize) -> String {
        if self.chance(2, 3) {
            "*".to_string()
        } else {
            self.tuple(consonants, vowels, ntapes, 1).0
        }
    }

    fn surf_context(&mut self, consonants: &[char], vowels: &[char]) -> String {
        if self.chance(2, 3) {
            "*".to_string()
        } else {
            self.expr(consonants, vowels, 1).0
        }
    }
}

/// Deterministically derives a small grammar and lexical input from `seed`.
pub fn toy_case(seed: u64) -> ToyCase {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let consonants: Vec<char> = CONSONANT_POOL[..1 + g.pick(2)].to_vec();
    let vowels: Vec<char> = VOWEL_POOL[..1 + g.pick(2)].to_vec();
    let ntapes = 1 + g.pick(2);
    let nrules = 1 + g.pick(4);

    let mut text = format!("tapes: {ntapes}\n");
    text.push_str(&format!(
        "consonants: {}\n",
        consonants.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
    ));
    text.push_str(&format!(
        "vowels: {}\n",
        vowels.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
    ));

    for i in 0..nrules {
        let keyword = if g.chance(1, 4) { "oblig" } else { "opt" };
        text.push_str(&format!("rule T{} {keyword}\n", i + 1));

        let mut features = Vec::new();
        for attr in ["num", "cls"] {
            if g.chance(1, 3) {
                let value = if g.chance(1, 4) {
                    ["$A", "$B"][g.pick(2)].to_string()
                } else {
                    ["x", "y"][g.pick(2)].to_string()
                };
                features.push(format!("{attr}={value}"));
            }
        }
        if !features.is_empty() {
            text.push_str(&format!(" features: {}\n", features.join(", ")));
        }

        let (mut lex, mut min_len) = g.tuple(&consonants, &vowels, ntapes, 2);
        while min_len == 0 {
            // Rules must be able to consume something; reroll until one can.
            (lex, min_len) = g.tuple(&consonants, &vowels, ntapes, 2);
        }
        let llc = g.lex_context(&consonants, &vowels, ntapes);
        let rlc = g.lex_context(&consonants, &vowels, ntapes);
        text.push_str(&format!(" lex: {llc} | {lex} | {rlc}\n"));

        let surf = g.expr(&consonants, &vowels, 3).0;
        let lsc = g.surf_context(&consonants, &vowels);
        let rsc = g.surf_context(&consonants, &vowels);
        text.push_str(&format!(" surf: {lsc} | {surf} | {rsc}\n"));
    }

    let grammar = parse_grammar(&text).expect("generated text follows the rule format");

    let mut tapes = Vec::new();
    for _ in 0..ntapes {
        let len = g.pick(4);
        let mut tape = Vec::new();
        for _ in 0..len {
            let symbol = g.letter(&consonants, &vowels);
            tape.push(grammar.alphabet.segment(symbol).unwrap());
        }
        tapes.push(tape);
    }

    ToyCase {
        grammar_text: text,
        grammar,
        lexical: TapeTuple::new(tapes),
    }
}
