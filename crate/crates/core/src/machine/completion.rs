//! Default-reject completion of partially specified operators.
//!
//! Every zero column `U_{σ,τ}|q⟩` of a declared state is redirected to a
//! fresh rejecting state `q_rej<q,σ,τ>` with direction (0,0). Columns of the
//! fresh states themselves are left implicit: the declared columns are
//! orthonormal, so they always extend to a unitary on the enlarged space.

use thiserror::Error;

use crate::amplitude::{ComplexAmplitude, DEFAULT_TOL};

use super::{MachineDef, OperatorEntry, StateIndex, SymbolId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompletionError {
    #[error("column U[{upper},{lower}]|{state}> has squared norm {norm_sqr}, expected 0 or 1")]
    AmbiguousColumn {
        upper: String,
        lower: String,
        state: String,
        norm_sqr: f64,
    },
    #[error("columns U[{upper},{lower}]|{first}> and |{second}> overlap by {overlap}")]
    NonOrthogonal {
        upper: String,
        lower: String,
        first: String,
        second: String,
        overlap: f64,
    },
}

/// Validates the specified columns, then fills every zero column.
pub fn complete_operators(m: &MachineDef) -> Result<MachineDef, CompletionError> {
    complete_operators_with_tol(m, DEFAULT_TOL)
}

pub fn complete_operators_with_tol(m: &MachineDef, tol: f64) -> Result<MachineDef, CompletionError> {
    let pair_names = |(u, l): (SymbolId, SymbolId)| (m.alphabet.name(u).to_string(), m.alphabet.name(l).to_string());
    for (pair, op) in m.operators() {
        let sources: Vec<StateIndex> = (0..m.state_count())
            .filter(|&q| !m.is_filler(q) && !op.column(q).is_empty())
            .collect();
        for &q in &sources {
            let norm_sqr = op.column_norm_sqr(q);
            if norm_sqr > tol && (norm_sqr - 1.0).abs() > tol {
                let (upper, lower) = pair_names(pair);
                return Err(CompletionError::AmbiguousColumn {
                    upper,
                    lower,
                    state: m.state_name(q).to_string(),
                    norm_sqr,
                });
            }
        }
        for (i, &q1) in sources.iter().enumerate() {
            for &q2 in &sources[i + 1..] {
                let overlap = inner(op.column(q1), op.column(q2)).norm();
                if overlap > tol {
                    let (upper, lower) = pair_names(pair);
                    return Err(CompletionError::NonOrthogonal {
                        upper,
                        lower,
                        first: m.state_name(q1).to_string(),
                        second: m.state_name(q2).to_string(),
                        overlap,
                    });
                }
            }
        }
    }
    Ok(fill_default_rejects(m))
}

/// Fills zero columns without validating the specified ones.
///
/// Every specified pair and every readable pair is materialized. Applying
/// this twice adds nothing.
pub fn fill_default_rejects(m: &MachineDef) -> MachineDef {
    let mut out = m.clone();
    let mut pairs: Vec<(SymbolId, SymbolId)> = m.operators().map(|(pair, _)| pair).collect();
    pairs.extend(m.readable_pairs());
    pairs.sort_unstable();
    pairs.dedup();

    let declared: Vec<StateIndex> = (0..m.state_count()).filter(|&q| !m.is_filler(q)).collect();
    for pair in pairs {
        for &q in &declared {
            let empty = out
                .operator(pair.0, pair.1)
                .is_none_or(|op| op.column_norm_sqr(q) == 0.0);
            if !empty {
                continue;
            }
            let base = format!(
                "q_rej<{},{},{}>",
                out.states[q],
                out.alphabet.name(pair.0),
                out.alphabet.name(pair.1)
            );
            let fresh = out.add_filler(base);
            out.operator_mut(pair).push(OperatorEntry {
                from: q,
                to: fresh,
                amp: ComplexAmplitude::new(1.0, 0.0),
                expr: "1".to_string(),
            });
        }
    }
    out
}

/// `⟨a|b⟩` for sparse columns sorted by index.
pub(super) fn inner(a: &[(StateIndex, ComplexAmplitude)], b: &[(StateIndex, ComplexAmplitude)]) -> ComplexAmplitude {
    let (mut i, mut j) = (0, 0);
    let mut sum = ComplexAmplitude::new(0.0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                sum += a[i].1.conj() * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    sum
}
