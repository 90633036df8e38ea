use std::fmt;

use super::completion::inner;
use super::{MachineDef, StateIndex};

/// Maximum deviation of one operator's column Gram matrix from the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDeviation {
    pub upper: String,
    pub lower: String,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WellFormedReport {
    pub tol: f64,
    pub pairs: Vec<PairDeviation>,
}

impl WellFormedReport {
    pub fn is_well_formed(&self) -> bool {
        self.pairs.iter().all(|p| p.max_deviation <= self.tol)
    }

    pub fn max_deviation(&self) -> f64 {
        self.pairs.iter().map(|p| p.max_deviation).fold(0.0, f64::max)
    }

    pub fn failing(&self) -> impl Iterator<Item = &PairDeviation> {
        self.pairs.iter().filter(|p| p.max_deviation > self.tol)
    }
}

impl fmt::Display for WellFormedReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.pairs {
            let mark = if p.max_deviation <= self.tol { "ok" } else { "FAIL" };
            writeln!(f, "U[{},{}]\t{:.3e}\t{mark}", p.upper, p.lower, p.max_deviation)?;
        }
        write!(
            f,
            "{} at tol {:e}",
            if self.is_well_formed() {
                "well-formed"
            } else {
                "not well-formed"
            },
            self.tol
        )
    }
}

/// Checks `Σ_{q'} conj(⟨q'|U|q1⟩)⟨q'|U|q2⟩ = [q1 = q2]` over the declared
/// states of every materialized operator.
///
/// Zero columns count as deviation 1, so an uncompleted machine is reported
/// as not well-formed.
pub fn check_well_formed(m: &MachineDef, tol: f64) -> WellFormedReport {
    let declared: Vec<StateIndex> = (0..m.state_count()).filter(|&q| !m.is_filler(q)).collect();
    let pairs = m
        .operators()
        .map(|((u, l), op)| {
            let mut worst: f64 = 0.0;
            for (i, &q1) in declared.iter().enumerate() {
                let c1 = op.column(q1);
                worst = worst.max((inner(c1, c1).re - 1.0).abs());
                for &q2 in &declared[i + 1..] {
                    worst = worst.max(inner(c1, op.column(q2)).norm());
                }
            }
            PairDeviation {
                upper: m.alphabet().name(u).to_string(),
                lower: m.alphabet().name(l).to_string(),
                max_deviation: worst,
            }
        })
        .collect();
    WellFormedReport { tol, pairs }
}
