//! Measure-many evolution over configurations `(state, upper head, lower head)`.
//!
//! Each step applies `U_{σ,τ}` to every configuration, where `σ` and `τ` are
//! the symbols under its two heads, moves the heads according to the target
//! state's direction, then measures: accepting and rejecting configurations
//! are removed and their probability is accumulated. The residual is not
//! renormalized.
//!
//! A column that is absent (an unmaterialized pair or an uncompleted zero
//! column) behaves as the default reject: its whole amplitude is measured as
//! rejection in the same step.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::amplitude::{ComplexAmplitude, DEFAULT_TOL};
use crate::machine::{MachineDef, StateIndex, StateKind, SymbolId};
use crate::strand::{check_budget, complements, is_complementary, Strand, StrandError, TapePair};

/// Residual amplitudes with squared modulus below this are dropped.
pub const PRUNE_THRESHOLD: f64 = 1e-15;
/// Norm change outside measurement that raises a diagnostic.
pub const NORM_ANOMALY_TOL: f64 = 1e-6;
/// A run stops once this close to fully halted.
pub const HALT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("head moved past the right endmarker into {at:?}")]
    HeadOverrun { at: Configuration },
    #[error("head moved past the right endmarker on lower strand {strand:?} into {at:?}")]
    StrandOverrun { strand: Strand, at: Configuration },
    #[error("configuration {0:?} is halting and cannot evolve")]
    HaltingConfiguration(Configuration),
    #[error("lower strand is not complementary to the upper strand")]
    NotComplementary,
    #[error(transparent)]
    Strand(#[from] StrandError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pub state: StateIndex,
    pub upos: usize,
    pub lpos: usize,
}

/// Configurations with nonzero amplitude.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Superposition {
    amps: BTreeMap<Configuration, ComplexAmplitude>,
}

impl Superposition {
    /// `|q_0⟩` with both heads on `#`.
    pub fn initial(m: &MachineDef) -> Self {
        Self::from_iter([(
            Configuration {
                state: m.start(),
                upos: 0,
                lpos: 0,
            },
            ComplexAmplitude::new(1.0, 0.0),
        )])
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn get(&self, c: &Configuration) -> ComplexAmplitude {
        self.amps.get(c).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Configuration, &ComplexAmplitude)> {
        self.amps.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        // An empty f64 sum is -0.0, so fold from +0.0.
        self.amps.values().fold(0.0, |acc, a| acc + a.norm_sqr())
    }
}

impl FromIterator<(Configuration, ComplexAmplitude)> for Superposition {
    /// Sums repeated configurations and drops exact zeros.
    fn from_iter<I: IntoIterator<Item = (Configuration, ComplexAmplitude)>>(iter: I) -> Self {
        let mut amps = BTreeMap::new();
        for (c, a) in iter {
            *amps.entry(c).or_default() += a;
        }
        amps.retain(|_, a: &mut ComplexAmplitude| a.norm_sqr() > 0.0);
        Self { amps }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    /// Non-halting part after measurement.
    pub next: Superposition,
    pub dp_acc: f64,
    pub dp_rej: f64,
    /// Squared norm right after the unitary, before measurement.
    pub evolved_norm_sqr: f64,
}

/// One evolve-then-measure step.
pub fn step(m: &MachineDef, tapes: &TapePair, s: &Superposition) -> Result<StepOutput, SimError> {
    let mut evolved: BTreeMap<Configuration, ComplexAmplitude> = BTreeMap::new();
    let mut implicit_reject = 0.0;
    for (&c, &alpha) in s.iter() {
        if m.is_halting(c.state) {
            return Err(SimError::HaltingConfiguration(c));
        }
        let sigma: SymbolId = tapes.upper[c.upos];
        let tau: SymbolId = tapes.lower[c.lpos];
        let column = m.operator(sigma, tau).map(|op| op.column(c.state)).unwrap_or(&[]);
        if column.is_empty() {
            implicit_reject += alpha.norm_sqr();
            continue;
        }
        for &(target, amp) in column {
            let d = m.direction(target);
            let next = Configuration {
                state: target,
                upos: c.upos + d.upper as usize,
                lpos: c.lpos + d.lower as usize,
            };
            if next.upos >= tapes.upper.len() || next.lpos >= tapes.lower.len() {
                return Err(SimError::HeadOverrun { at: next });
            }
            *evolved.entry(next).or_default() += alpha * amp;
        }
    }

    let mut out = StepOutput {
        next: Superposition::default(),
        dp_acc: 0.0,
        dp_rej: implicit_reject,
        evolved_norm_sqr: implicit_reject,
    };
    for (c, a) in evolved {
        let p = a.norm_sqr();
        out.evolved_norm_sqr += p;
        match m.kind(c.state) {
            StateKind::Accepting => out.dp_acc += p,
            StateKind::Rejecting => out.dp_rej += p,
            StateKind::NonHalting if p >= PRUNE_THRESHOLD => {
                out.next.amps.insert(c, a);
            }
            StateKind::NonHalting => {}
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HaltReason {
    AllHalted,
    StepCap,
    HeadOverrun,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceConfig {
    pub state: String,
    pub upos: usize,
    pub lpos: usize,
    pub re: f64,
    pub im: f64,
}

/// One JSON-line trace record; `configs` is the residual after measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub step: usize,
    pub dp_acc: f64,
    pub dp_rej: f64,
    pub configs: Vec<TraceConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormAnomaly {
    pub step: usize,
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub p_acc: f64,
    pub p_rej: f64,
    pub p_residual: f64,
    pub steps: usize,
    pub halt_reason: HaltReason,
    /// Set when `halt_reason` is `HeadOverrun`.
    pub overrun_at: Option<Configuration>,
    /// Largest `|p_acc + p_rej + residual − 1|` seen after any step.
    pub max_conservation_error: f64,
    pub norm_anomalies: Vec<NormAnomaly>,
    pub trace: Option<Vec<TraceRecord>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Defaults to `4 · |Q| · (|w1| + 2) · (|w2| + 2)`.
    pub step_cap: Option<usize>,
    pub trace: bool,
}

pub fn default_step_cap(m: &MachineDef, w1: &Strand, w2: &Strand) -> usize {
    4 * m.state_count() * (w1.len() + 2) * (w2.len() + 2)
}

/// Runs one strand pair from `|q_0⟩` until everything halts or the cap is hit.
pub fn run_strand(m: &MachineDef, w1: &Strand, w2: &Strand, opts: RunOptions) -> Result<RunOutcome, SimError> {
    if !is_complementary(w1, w2, m.rho()) {
        return Err(SimError::NotComplementary);
    }
    Ok(run_tapes(
        m,
        &TapePair::new(w1, w2),
        opts.step_cap.unwrap_or_else(|| default_step_cap(m, w1, w2)),
        opts.trace,
    ))
}

fn run_tapes(m: &MachineDef, tapes: &TapePair, step_cap: usize, trace: bool) -> RunOutcome {
    let mut outcome = RunOutcome {
        p_acc: 0.0,
        p_rej: 0.0,
        p_residual: 0.0,
        steps: 0,
        halt_reason: HaltReason::AllHalted,
        overrun_at: None,
        max_conservation_error: 0.0,
        norm_anomalies: Vec::new(),
        trace: trace.then(Vec::new),
    };
    let mut s = Superposition::initial(m);
    match m.kind(m.start()) {
        StateKind::Accepting => {
            outcome.p_acc = 1.0;
            return outcome;
        }
        StateKind::Rejecting => {
            outcome.p_rej = 1.0;
            return outcome;
        }
        StateKind::NonHalting => {}
    }

    loop {
        if s.is_empty() || outcome.p_acc + outcome.p_rej >= 1.0 - HALT_EPSILON {
            outcome.halt_reason = HaltReason::AllHalted;
            break;
        }
        if outcome.steps >= step_cap {
            outcome.halt_reason = HaltReason::StepCap;
            break;
        }
        let before = s.norm_sqr();
        let out = match step(m, tapes, &s) {
            Ok(out) => out,
            Err(SimError::HeadOverrun { at }) => {
                outcome.halt_reason = HaltReason::HeadOverrun;
                outcome.overrun_at = Some(at);
                break;
            }
            Err(e) => unreachable!("residual never holds halting configurations: {e}"),
        };
        outcome.steps += 1;
        if (out.evolved_norm_sqr - before).abs() > NORM_ANOMALY_TOL {
            outcome.norm_anomalies.push(NormAnomaly {
                step: outcome.steps,
                before,
                after: out.evolved_norm_sqr,
            });
        }
        outcome.p_acc += out.dp_acc;
        outcome.p_rej += out.dp_rej;
        s = out.next;
        let balance = outcome.p_acc + outcome.p_rej + s.norm_sqr() - 1.0;
        outcome.max_conservation_error = outcome.max_conservation_error.max(balance.abs());
        if let Some(records) = outcome.trace.as_mut() {
            records.push(TraceRecord {
                step: outcome.steps,
                dp_acc: out.dp_acc,
                dp_rej: out.dp_rej,
                configs: s
                    .iter()
                    .map(|(c, a)| TraceConfig {
                        state: m.state_name(c.state).to_string(),
                        upos: c.upos,
                        lpos: c.lpos,
                        re: a.re,
                        im: a.im,
                    })
                    .collect(),
            });
        }
    }
    outcome.p_residual = s.norm_sqr();
    outcome
}

/// How a word's strands are judged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AcceptancePolicy {
    /// Some strand accepts with `p_acc ≥ 1 − tol`.
    Certain { tol: f64 },
    /// Some strand accepts with `p_acc ≥ theta − 1e-9`, so floating-point
    /// noise cannot push an exact cut-point hit below the bar.
    Cutpoint { theta: f64 },
    /// Some strand has `p_acc ≥ 1 − tol`; otherwise every strand must
    /// reject with `p_rej ≥ 1/2 − tol`, reported in
    /// [`Decision::rejection_gap_holds`].
    BoundedError { tol: f64 },
}

impl Default for AcceptancePolicy {
    fn default() -> Self {
        Self::Certain { tol: DEFAULT_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid policy '{0}': expected certain, bounded-error or cutpoint:<theta> with 0 < theta <= 1")]
pub struct PolicyParseError(String);

impl AcceptancePolicy {
    pub fn cutpoint(theta: f64) -> Option<Self> {
        (theta > 0.0 && theta <= 1.0).then_some(Self::Cutpoint { theta })
    }

    /// Whether a strand accepting with `p_acc` meets the policy.
    pub fn qualifies(&self, p_acc: f64) -> bool {
        match *self {
            Self::Certain { tol } | Self::BoundedError { tol } => p_acc >= 1.0 - tol,
            Self::Cutpoint { theta } => p_acc >= theta - DEFAULT_TOL,
        }
    }
}

impl std::str::FromStr for AcceptancePolicy {
    type Err = PolicyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "certain" => Ok(Self::Certain { tol: DEFAULT_TOL }),
            "bounded-error" => Ok(Self::BoundedError { tol: DEFAULT_TOL }),
            _ => s
                .strip_prefix("cutpoint:")
                .and_then(|t| t.parse::<f64>().ok())
                .and_then(Self::cutpoint)
                .ok_or_else(|| PolicyParseError(s.to_string())),
        }
    }
}

impl std::fmt::Display for AcceptancePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Certain { .. } => write!(f, "certain"),
            Self::BoundedError { .. } => write!(f, "bounded-error"),
            Self::Cutpoint { theta } => write!(f, "cutpoint:{theta}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AcceptOptions {
    pub run: RunOptions,
    pub strand_budget: u128,
}

impl Default for AcceptOptions {
    fn default() -> Self {
        Self {
            run: RunOptions::default(),
            strand_budget: crate::strand::DEFAULT_STRAND_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub accepted: bool,
    /// First qualifying strand in enumeration order.
    pub witness: Option<Strand>,
    pub best_p_acc: f64,
    /// Smallest rejection probability over examined strands.
    pub min_p_rej: f64,
    pub strands_examined: u128,
    /// Bounded-error policy only, when no strand qualified.
    pub rejection_gap_holds: Option<bool>,
    /// Worst per-step conservation error over examined strands.
    pub max_conservation_error: f64,
    pub norm_anomalies: usize,
    /// Strands whose run stopped at the step cap.
    pub capped_strands: u128,
}

/// Exists-strand acceptance of `w1`.
///
/// Strands are examined in enumeration order and the search stops at the
/// first qualifying one, so statistics cover only the examined prefix.
pub fn accepts(
    m: &MachineDef,
    w1: &Strand,
    policy: AcceptancePolicy,
    opts: AcceptOptions,
) -> Result<Decision, SimError> {
    check_budget(w1, m.rho(), opts.strand_budget)?;
    let mut decision = Decision {
        accepted: false,
        witness: None,
        best_p_acc: 0.0,
        min_p_rej: f64::INFINITY,
        strands_examined: 0,
        rejection_gap_holds: None,
        max_conservation_error: 0.0,
        norm_anomalies: 0,
        capped_strands: 0,
    };
    for w2 in complements(w1, m.rho()) {
        let outcome = run_strand(m, w1, &w2, opts.run)?;
        if let (HaltReason::HeadOverrun, Some(at)) = (outcome.halt_reason, outcome.overrun_at) {
            return Err(SimError::StrandOverrun { strand: w2, at });
        }
        decision.strands_examined += 1;
        decision.best_p_acc = decision.best_p_acc.max(outcome.p_acc);
        decision.min_p_rej = decision.min_p_rej.min(outcome.p_rej);
        decision.max_conservation_error = decision.max_conservation_error.max(outcome.max_conservation_error);
        decision.norm_anomalies += outcome.norm_anomalies.len();
        if outcome.halt_reason == HaltReason::StepCap {
            decision.capped_strands += 1;
        }
        if policy.qualifies(outcome.p_acc) {
            decision.accepted = true;
            decision.witness = Some(w2);
            break;
        }
    }
    if decision.strands_examined == 0 {
        decision.min_p_rej = 0.0;
    }
    if let (AcceptancePolicy::BoundedError { tol }, false) = (policy, decision.accepted) {
        decision.rejection_gap_holds = Some(decision.strands_examined > 0 && decision.min_p_rej >= 0.5 - tol);
    }
    Ok(decision)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub word: Strand,
    pub result: Result<Decision, SimError>,
}

/// Upper symbols (first components of `ρ`) in alphabet order.
pub fn upper_alphabet(m: &MachineDef) -> Vec<SymbolId> {
    let uppers = m.rho().upper_symbols();
    m.alphabet().input_ids().filter(|s| uppers.contains(s)).collect()
}

/// All words over `symbols` up to `max_len`, shortest first, then lexicographic.
pub fn words_up_to(symbols: &[SymbolId], max_len: usize) -> Vec<Strand> {
    let mut out = vec![Strand::empty()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w: &Vec<SymbolId>| {
                symbols.iter().map(move |&s| {
                    let mut next = w.clone();
                    next.push(s);
                    next
                })
            })
            .collect();
        out.extend(layer.iter().cloned().map(Strand::new));
    }
    out
}

/// Membership table over every upper word of length `≤ max_len`.
///
/// Words are decided in parallel on the current rayon pool; row order is
/// length-then-lex regardless of scheduling.
pub fn language_sweep(m: &MachineDef, max_len: usize, policy: AcceptancePolicy, opts: AcceptOptions) -> Vec<SweepRow> {
    words_up_to(&upper_alphabet(m), max_len)
        .into_par_iter()
        .map(|word| {
            let result = accepts(m, &word, policy, opts);
            SweepRow { word, result }
        })
        .collect()
}
