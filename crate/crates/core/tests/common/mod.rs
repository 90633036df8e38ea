//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls into the simulator or the compiler: the dense engine
//! and the classical automaton only read a machine's declared data.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use wkqfa::machine::{Direction, MachineDef, MachineSpec, StateKind, SymbolId, LEFT_END, RIGHT_END};

/// Every word over `symbols` of length at most `max_len`, shortest first.
pub fn all_words<T: Clone>(symbols: &[T], max_len: usize) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new()];
    let mut start = 0;
    for _ in 0..max_len {
        let end = out.len();
        for i in start..end {
            for s in symbols {
                let mut w = out[i].clone();
                w.push(s.clone());
                out.push(w);
            }
        }
        start = end;
    }
    out
}

pub fn chars(word: &str) -> Vec<String> {
    word.chars().map(String::from).collect()
}

/// Every lower strand complementary to `upper`, by direct recursion.
pub fn all_strands(m: &MachineDef, upper: &[SymbolId]) -> Vec<Vec<SymbolId>> {
    let mut out = vec![Vec::new()];
    for &u in upper {
        let lowers: Vec<SymbolId> = m.rho().pairs().iter().filter(|p| p.0 == u).map(|p| p.1).collect();
        out = out
            .into_iter()
            .flat_map(|prefix| {
                lowers.iter().map(move |&l| {
                    let mut w = prefix.clone();
                    w.push(l);
                    w
                })
            })
            .collect();
    }
    out
}

fn framed(w: &[SymbolId]) -> Vec<SymbolId> {
    let mut tape = vec![LEFT_END];
    tape.extend_from_slice(w);
    tape.push(RIGHT_END);
    tape
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DenseEnd {
    Halted,
    Cap,
    Overrun,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseOutcome {
    pub p_acc: f64,
    pub p_rej: f64,
    pub end: DenseEnd,
}

/// Configuration-space simulator over a full `|Q| × |#w1$| × |#w2$|`
/// amplitude array, with one dense matrix per symbol pair.
///
/// A non-halting state whose column is zero under the pair being read loses
/// its amplitude to rejection, which is what default-reject completion would
/// produce.
pub struct DenseEngine {
    n: usize,
    kinds: Vec<StateKind>,
    dirs: Vec<Direction>,
    matrices: BTreeMap<(SymbolId, SymbolId), Vec<Vec<Complex64>>>,
}

impl DenseEngine {
    pub fn new(m: &MachineDef) -> Self {
        let n = m.state_count();
        let mut matrices = BTreeMap::new();
        for (pair, op) in m.operators() {
            let mut u = vec![vec![Complex64::new(0.0, 0.0); n]; n];
            for e in op.entries() {
                u[e.to][e.from] += e.amp;
            }
            matrices.insert(pair, u);
        }
        Self {
            n,
            kinds: (0..n).map(|q| m.kind(q)).collect(),
            dirs: (0..n).map(|q| m.direction(q)).collect(),
            matrices,
        }
    }

    pub fn run(&self, start: usize, w1: &[SymbolId], w2: &[SymbolId], cap: usize) -> DenseOutcome {
        let (t1, t2) = (framed(w1), framed(w2));
        let (l1, l2) = (t1.len(), t2.len());
        let idx = |q: usize, i: usize, j: usize| (q * l1 + i) * l2 + j;
        let zero = Complex64::new(0.0, 0.0);
        let mut psi = vec![zero; self.n * l1 * l2];
        let mut out = DenseOutcome {
            p_acc: 0.0,
            p_rej: 0.0,
            end: DenseEnd::Halted,
        };
        match self.kinds[start] {
            StateKind::Accepting => {
                out.p_acc = 1.0;
                return out;
            }
            StateKind::Rejecting => {
                out.p_rej = 1.0;
                return out;
            }
            StateKind::NonHalting => psi[idx(start, 0, 0)] = Complex64::new(1.0, 0.0),
        }
        for _ in 0..cap {
            let remaining: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
            if remaining < 1e-14 || out.p_acc + out.p_rej >= 1.0 - 1e-12 {
                return out;
            }
            let mut next = vec![zero; psi.len()];
            for i in 0..l1 {
                for j in 0..l2 {
                    let slice: Vec<Complex64> = (0..self.n).map(|q| psi[idx(q, i, j)]).collect();
                    if slice.iter().all(|a| *a == zero) {
                        continue;
                    }
                    let Some(u) = self.matrices.get(&(t1[i], t2[j])) else {
                        out.p_rej += slice.iter().map(|a| a.norm_sqr()).sum::<f64>();
                        continue;
                    };
                    for (q, a) in slice.iter().enumerate() {
                        if *a != zero && (0..self.n).all(|r| u[r][q] == zero) {
                            out.p_rej += a.norm_sqr();
                        }
                    }
                    for (r, row) in u.iter().enumerate() {
                        let phi: Complex64 = row.iter().zip(&slice).map(|(x, y)| x * y).sum();
                        if phi == zero {
                            continue;
                        }
                        let (ni, nj) = (i + self.dirs[r].upper as usize, j + self.dirs[r].lower as usize);
                        if ni >= l1 || nj >= l2 {
                            out.end = DenseEnd::Overrun;
                            return out;
                        }
                        next[idx(r, ni, nj)] += phi;
                    }
                }
            }
            for q in 0..self.n {
                for i in 0..l1 {
                    for j in 0..l2 {
                        let a = &mut next[idx(q, i, j)];
                        match self.kinds[q] {
                            StateKind::Accepting => out.p_acc += a.norm_sqr(),
                            StateKind::Rejecting => out.p_rej += a.norm_sqr(),
                            StateKind::NonHalting => continue,
                        }
                        *a = zero;
                    }
                }
            }
            psi = next;
        }
        let remaining: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        if remaining >= 1e-14 && out.p_acc + out.p_rej < 1.0 - 1e-12 {
            out.end = DenseEnd::Cap;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassicalEnd {
    Accept,
    Reject,
    Overrun,
    Loop,
}

/// A deterministic two-head one-way automaton given by a rule table.
#[derive(Debug, Clone)]
pub struct TwoHeadAutomaton {
    pub start: usize,
    pub kinds: Vec<StateKind>,
    pub moves: Vec<(u8, u8)>,
    /// `(state, upper, lower) → next state`; absent rules reject.
    pub rules: BTreeMap<(usize, SymbolId, SymbolId), usize>,
}

impl TwoHeadAutomaton {
    pub fn run(&self, w1: &[SymbolId], w2: &[SymbolId]) -> ClassicalEnd {
        let (t1, t2) = (framed(w1), framed(w2));
        let (mut q, mut i, mut j) = (self.start, 0usize, 0usize);
        let mut seen = HashSet::new();
        loop {
            match self.kinds[q] {
                StateKind::Accepting => return ClassicalEnd::Accept,
                StateKind::Rejecting => return ClassicalEnd::Reject,
                StateKind::NonHalting => {}
            }
            if !seen.insert((q, i, j)) {
                return ClassicalEnd::Loop;
            }
            let Some(&next) = self.rules.get(&(q, t1[i], t2[j])) else {
                return ClassicalEnd::Reject;
            };
            let (d1, d2) = self.moves[next];
            i += d1 as usize;
            j += d2 as usize;
            if i >= t1.len() || j >= t2.len() {
                return ClassicalEnd::Overrun;
            }
            q = next;
        }
    }
}

/// Machine over `V = {a, b}` with `ρ = {(a,a), (a,b), (b,b)}` built from a
/// random injective rule table, plus the same table as a classical automaton.
///
/// States `0..k` are non-halting, then one accepting and one rejecting state.
pub fn random_permutation_machine<R: Rng>(rng: &mut R) -> (MachineDef, TwoHeadAutomaton) {
    let k = rng.gen_range(2..=4);
    let n = k + 2;
    let names: Vec<String> = (0..n)
        .map(|q| match q {
            q if q == k => "acc".to_string(),
            q if q == k + 1 => "rej".to_string(),
            q => format!("p{q}"),
        })
        .collect();
    let mut kinds = vec![StateKind::NonHalting; n];
    kinds[k] = StateKind::Accepting;
    kinds[k + 1] = StateKind::Rejecting;
    let mut moves: Vec<(u8, u8)> = (0..k).map(|_| (rng.gen_range(0..=1), rng.gen_range(0..=1))).collect();
    // Bias towards progress so most runs halt on the tape.
    if moves.iter().all(|&m| m == (0, 0)) {
        moves[0] = (1, 1);
    }
    moves.extend([(0, 0), (0, 0)]);

    // Γ ids: # = 0, $ = 1, a = 2, b = 3.
    let symbols: [SymbolId; 4] = [0, 1, 2, 3];
    let mut rules = BTreeMap::new();
    for &u in &symbols {
        for &l in &symbols {
            let mut targets: Vec<usize> = (0..n).collect();
            targets.shuffle(rng);
            for (q, &target) in targets.iter().enumerate().take(k) {
                if rng.gen_bool(0.85) {
                    rules.insert((q, u, l), target);
                }
            }
        }
    }
    let automaton = TwoHeadAutomaton {
        start: 0,
        kinds: kinds.clone(),
        moves: moves.clone(),
        rules: rules.clone(),
    };

    let name_of = |s: SymbolId| ["#", "$", "a", "b"][s].to_string();
    let spec = MachineSpec {
        states: names.clone(),
        start: names[0].clone(),
        accept: vec!["acc".into()],
        reject: vec!["rej".into()],
        alphabet: vec!["a".into(), "b".into()],
        rho: vec![
            ("a".into(), "a".into()),
            ("a".into(), "b".into()),
            ("b".into(), "b".into()),
        ],
        directions: names
            .iter()
            .zip(&moves)
            .map(|(q, &(d1, d2))| (q.clone(), Direction::new(d1, d2)))
            .collect(),
        entries: rules
            .iter()
            .map(|(&(q, u, l), &t)| {
                (
                    name_of(u),
                    name_of(l),
                    names[q].clone(),
                    names[t].clone(),
                    "1".to_string(),
                )
            })
            .collect(),
    };
    (MachineDef::new(spec).expect("generated machine is valid"), automaton)
}

/// Amplitude strings with exact values, for building random unitaries.
const HALF_ROOT: [(&str, f64, f64); 4] = [
    ("1/sqrt(2)", FRAC_1_SQRT_2, 0.0),
    ("-1/sqrt(2)", -FRAC_1_SQRT_2, 0.0),
    ("1/sqrt(2)*i", 0.0, FRAC_1_SQRT_2),
    ("-1/sqrt(2)*i", 0.0, -FRAC_1_SQRT_2),
];

/// Random machine over `V = {a, b}`, `ρ = {(a,a), (a,b), (b,a), (b,b)}`,
/// whose every operator is a unitary on all states: a permutation composed
/// with Hadamard-like mixing of random coordinate pairs.
///
/// With `lockstep`, every non-halting state moves both heads and `($,$)`
/// sends each non-halting state to a halting one, so runs never overrun.
pub fn random_unitary_machine<R: Rng>(rng: &mut R, lockstep: bool) -> MachineDef {
    let k = rng.gen_range(2..=3);
    let h = k + rng.gen_range(0..=1);
    let n = k + h;
    let names: Vec<String> = (0..n).map(|q| format!("s{q}")).collect();
    let mut accept = Vec::new();
    let mut reject = Vec::new();
    for (q, name) in names.iter().enumerate().skip(k) {
        if q == k || (q != k + 1 && rng.gen_bool(0.5)) {
            accept.push(name.clone());
        } else {
            reject.push(name.clone());
        }
    }
    let directions: Vec<(String, Direction)> = (0..n)
        .map(|q| {
            let d = if q >= k {
                Direction::STAY
            } else if lockstep {
                Direction::new(1, 1)
            } else {
                Direction::new(rng.gen_range(0..=1), rng.gen_range(0..=1))
            };
            (names[q].clone(), d)
        })
        .collect();

    let sym = ["#", "$", "a", "b"];
    let mut entries = Vec::new();
    for u in sym {
        for l in sym {
            let mut perm: Vec<usize> = (0..n).collect();
            if lockstep && (u, l) == ("$", "$") {
                let mut halting: Vec<usize> = (k..n).collect();
                halting.shuffle(rng);
                let mut rest: Vec<usize> = (0..k).chain(halting[k..].iter().copied()).collect();
                rest.shuffle(rng);
                perm = halting[..k].iter().copied().chain(rest).collect();
            } else {
                perm.shuffle(rng);
            }
            // Mix targets of some disjoint source pairs.
            let mut sources: Vec<usize> = (0..n).collect();
            sources.shuffle(rng);
            let mixed = if lockstep && (u, l) == ("$", "$") {
                0
            } else {
                rng.gen_range(0..=n / 2)
            };
            let mut done = vec![false; n];
            for pair in sources.chunks(2).take(mixed) {
                if let [x, y] = *pair {
                    let (tx, ty) = (perm[x], perm[y]);
                    // Columns (a, a) and (b, -b) are orthonormal for |a| = |b| = 1/√2.
                    let a = HALF_ROOT[rng.gen_range(0..4)].0;
                    let b = HALF_ROOT[rng.gen_range(0..4)].0;
                    entries.push((u, l, x, tx, a.to_string()));
                    entries.push((u, l, x, ty, a.to_string()));
                    entries.push((u, l, y, tx, b.to_string()));
                    entries.push((u, l, y, ty, negate(b)));
                    done[x] = true;
                    done[y] = true;
                }
            }
            for q in 0..n {
                if !done[q] {
                    let phase = ["1", "-1", "i", "-1*i", "exp(2*pi*i*1/3)"][rng.gen_range(0..5)];
                    entries.push((u, l, q, perm[q], phase.to_string()));
                }
            }
        }
    }
    let spec = MachineSpec {
        states: names.clone(),
        start: names[0].clone(),
        accept,
        reject,
        alphabet: vec!["a".into(), "b".into()],
        rho: vec![
            ("a".into(), "a".into()),
            ("a".into(), "b".into()),
            ("b".into(), "a".into()),
            ("b".into(), "b".into()),
        ],
        directions,
        entries: entries
            .into_iter()
            .map(|(u, l, f, t, e)| (u.to_string(), l.to_string(), names[f].clone(), names[t].clone(), e))
            .collect(),
    };
    MachineDef::new(spec).expect("generated machine is valid")
}

fn negate(expr: &str) -> String {
    match expr.strip_prefix('-') {
        Some(rest) => rest.to_string(),
        None => format!("-{expr}"),
    }
}

/// A random total DFA table over `symbols` letters with at most `max_states`.
pub fn random_dfa_table<R: Rng>(
    rng: &mut R,
    max_states: usize,
    symbols: usize,
) -> (usize, Vec<usize>, Vec<Vec<usize>>) {
    let n = rng.gen_range(1..=max_states);
    let table: Vec<Vec<usize>> = (0..n)
        .map(|_| (0..symbols).map(|_| rng.gen_range(0..n)).collect())
        .collect();
    let finals: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
    (rng.gen_range(0..n), finals, table)
}

/// Direct DFA run on a dense table.
pub fn table_accepts(start: usize, finals: &[usize], table: &[Vec<usize>], word: &[usize]) -> bool {
    let end = word.iter().fold(start, |q, &k| table[q][k]);
    finals.contains(&end)
}
