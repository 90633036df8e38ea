//! Lower-strand enumeration and tape construction.
//!
//! The complements of a word `w1` form a mixed-radix space: position `i`
//! has as many digits as `w1[i]` has complements in `ρ`. Index 0 picks the
//! first declared complement everywhere, and the last position varies
//! fastest, so enumeration is lexicographic in declaration order.

use std::ops::Deref;

use thiserror::Error;

use crate::machine::{Alphabet, ComplementarityRelation, SymbolId, LEFT_END, RIGHT_END};

/// Maximum number of strands enumerated for one word unless overridden.
pub const DEFAULT_STRAND_BUDGET: u128 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrandError {
    #[error("strand budget exceeded: {needed} complementary strands, budget {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
}

/// A word over `V`, without endmarkers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Strand(Vec<SymbolId>);

impl Strand {
    pub fn new(symbols: Vec<SymbolId>) -> Self {
        debug_assert!(symbols.iter().all(|&s| s != LEFT_END && s != RIGHT_END));
        Self(symbols)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn parse(alphabet: &Alphabet, text: &str) -> Result<Self, crate::machine::MachineError> {
        alphabet.tokenize(text).map(Self)
    }

    pub fn render(&self, alphabet: &Alphabet) -> String {
        alphabet.render(&self.0)
    }

    pub fn symbols(&self) -> &[SymbolId] {
        &self.0
    }
}

impl Deref for Strand {
    type Target = [SymbolId];

    fn deref(&self) -> &[SymbolId] {
        &self.0
    }
}

impl From<Vec<SymbolId>> for Strand {
    fn from(symbols: Vec<SymbolId>) -> Self {
        Self::new(symbols)
    }
}

/// `#w1$` over `#w2$`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TapePair {
    pub upper: Vec<SymbolId>,
    pub lower: Vec<SymbolId>,
}

impl TapePair {
    pub fn new(w1: &Strand, w2: &Strand) -> Self {
        let frame = |w: &Strand| {
            let mut tape = Vec::with_capacity(w.len() + 2);
            tape.push(LEFT_END);
            tape.extend_from_slice(w);
            tape.push(RIGHT_END);
            tape
        };
        Self {
            upper: frame(w1),
            lower: frame(w2),
        }
    }
}

/// Equal length and every position pair in `ρ`.
pub fn is_complementary(w1: &Strand, w2: &Strand, rho: &ComplementarityRelation) -> bool {
    w1.len() == w2.len() && w1.iter().zip(w2.iter()).all(|(&u, &l)| rho.contains(u, l))
}

/// Number of complements of `w1`, saturating at `u128::MAX`.
pub fn count_complements(w1: &Strand, rho: &ComplementarityRelation) -> u128 {
    w1.iter()
        .fold(1u128, |acc, &u| acc.saturating_mul(rho.complements_of(u).len() as u128))
}

/// Fails when `w1` has more complements than `budget`.
pub fn check_budget(w1: &Strand, rho: &ComplementarityRelation, budget: u128) -> Result<u128, StrandError> {
    let needed = count_complements(w1, rho);
    if needed > budget {
        Err(StrandError::BudgetExceeded { needed, budget })
    } else {
        Ok(needed)
    }
}

/// Lazily enumerates the complements of `w1`.
pub fn complements<'a>(w1: &'a Strand, rho: &'a ComplementarityRelation) -> Complements<'a> {
    let choices: Vec<&[SymbolId]> = w1.iter().map(|&u| rho.complements_of(u)).collect();
    let exhausted = choices.iter().any(|c| c.is_empty());
    Complements {
        digits: vec![0; choices.len()],
        choices,
        next: if exhausted { None } else { Some(0) },
        total: count_complements(w1, rho),
    }
}

#[derive(Debug, Clone)]
pub struct Complements<'a> {
    choices: Vec<&'a [SymbolId]>,
    digits: Vec<usize>,
    next: Option<u128>,
    total: u128,
}

impl Complements<'_> {
    /// Total number of strands in the enumeration.
    pub fn total(&self) -> u128 {
        self.total
    }

    /// The strand at `index` by mixed-radix decoding.
    pub fn strand_at(&self, mut index: u128) -> Option<Strand> {
        if index >= self.total {
            return None;
        }
        let mut out = vec![0; self.choices.len()];
        for (slot, choice) in out.iter_mut().zip(&self.choices).rev() {
            let radix = choice.len() as u128;
            *slot = choice[(index % radix) as usize];
            index /= radix;
        }
        Some(Strand(out))
    }
}

impl Iterator for Complements<'_> {
    type Item = Strand;

    fn next(&mut self) -> Option<Strand> {
        let index = self.next?;
        let strand = Strand(self.digits.iter().zip(&self.choices).map(|(&d, c)| c[d]).collect());
        // Odometer increment, last position fastest.
        let mut carried = true;
        for (digit, choice) in self.digits.iter_mut().zip(&self.choices).rev() {
            *digit += 1;
            if *digit < choice.len() {
                carried = false;
                break;
            }
            *digit = 0;
        }
        self.next = if carried { None } else { Some(index + 1) };
        Some(strand)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        match self.next {
            None => (0, Some(0)),
            Some(i) => {
                let left = self.total - i;
                let left = usize::try_from(left).unwrap_or(usize::MAX);
                (left, Some(left))
            }
        }
    }
}
