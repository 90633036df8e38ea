//! DFA to WKQFA compilation by transition numbering.
//!
//! Transitions are listed in (state, symbol) declaration order. The `i`-th
//! transition on symbol `x` gets the lower symbol `x_i`, so a lower strand
//! spells out a guessed run of the DFA and the machine only follows it while
//! each guess matches the current state.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::machine::{
    Alphabet, Direction, MachineDef, MachineError, MachineSpec, SymbolId, LEFT_END_TEXT, RIGHT_END_TEXT,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DfaError {
    #[error("dfa declares no states")]
    NoStates,
    #[error("duplicate dfa state '{0}'")]
    DuplicateState(String),
    #[error("unknown dfa state '{0}'")]
    UnknownState(String),
    #[error("unknown dfa symbol '{0}'")]
    UnknownSymbol(String),
    #[error("invalid dfa alphabet: {0}")]
    Alphabet(Box<MachineError>),
    #[error("conflicting transitions from '{state}' on '{symbol}'")]
    Conflict { state: String, symbol: String },
    #[error("transition function is partial; missing {}", format_missing(.missing))]
    Partial { missing: Vec<(String, String)> },
    #[error("malformed dfa document: {0}")]
    Document(String),
}

fn format_missing(missing: &[(String, String)]) -> String {
    missing
        .iter()
        .map(|(q, x)| format!("({q}, {x})"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// A total deterministic finite automaton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DfaDef {
    states: Vec<String>,
    alphabet: Alphabet,
    start: usize,
    finals: BTreeSet<usize>,
    // delta[q][k] for the k-th input symbol.
    delta: Vec<Vec<usize>>,
}

impl DfaDef {
    /// Builds a DFA from named transitions `(from, on, to)`.
    pub fn new<S: AsRef<str>>(
        states: &[S],
        alphabet: &[S],
        start: &str,
        finals: &[S],
        transitions: &[(S, S, S)],
    ) -> Result<Self, DfaError> {
        if states.is_empty() {
            return Err(DfaError::NoStates);
        }
        let mut ids = HashMap::new();
        for (i, q) in states.iter().enumerate() {
            if ids.insert(q.as_ref(), i).is_some() {
                return Err(DfaError::DuplicateState(q.as_ref().to_string()));
            }
        }
        let state = |q: &str| ids.get(q).copied().ok_or_else(|| DfaError::UnknownState(q.to_string()));
        let alphabet = Alphabet::new(alphabet.iter().map(|s| s.as_ref().to_string()))
            .map_err(|e| DfaError::Alphabet(Box::new(e)))?;
        let symbol = |x: &str| {
            alphabet
                .id(x)
                .filter(|&id| alphabet.is_input(id))
                .map(|id| id - 2)
                .ok_or_else(|| DfaError::UnknownSymbol(x.to_string()))
        };

        let mut table: Vec<Vec<Option<usize>>> = vec![vec![None; alphabet.input_symbols().len()]; states.len()];
        for (from, on, to) in transitions {
            let (f, k, t) = (state(from.as_ref())?, symbol(on.as_ref())?, state(to.as_ref())?);
            match table[f][k] {
                Some(existing) if existing != t => {
                    return Err(DfaError::Conflict {
                        state: from.as_ref().to_string(),
                        symbol: on.as_ref().to_string(),
                    })
                }
                _ => table[f][k] = Some(t),
            }
        }
        let missing: Vec<(String, String)> = table
            .iter()
            .enumerate()
            .flat_map(|(q, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, t)| t.is_none())
                    .map(move |(k, _)| (q, k))
            })
            .map(|(q, k)| (states[q].as_ref().to_string(), alphabet.input_symbols()[k].clone()))
            .collect();
        if !missing.is_empty() {
            return Err(DfaError::Partial { missing });
        }

        Ok(Self {
            states: states.iter().map(|s| s.as_ref().to_string()).collect(),
            start: state(start)?,
            finals: finals.iter().map(|q| state(q.as_ref())).collect::<Result<_, _>>()?,
            delta: table
                .into_iter()
                .map(|row| row.into_iter().map(|t| t.expect("checked total")).collect())
                .collect(),
            alphabet,
        })
    }

    /// Builds a DFA over generated names `s0, s1, …` from a dense table.
    ///
    /// `table[q][k]` is the successor of state `q` on symbol `k`.
    pub fn from_table<S: AsRef<str>>(
        alphabet: &[S],
        start: usize,
        finals: &[usize],
        table: &[Vec<usize>],
    ) -> Result<Self, DfaError> {
        let names: Vec<String> = (0..table.len()).map(|q| format!("s{q}")).collect();
        let name = |q: usize| names.get(q).cloned().unwrap_or_else(|| format!("s{q}"));
        let mut transitions = Vec::new();
        for (q, row) in table.iter().enumerate() {
            for (k, &t) in row.iter().enumerate() {
                let on = alphabet
                    .get(k)
                    .map(|s| s.as_ref().to_string())
                    .ok_or_else(|| DfaError::UnknownSymbol(format!("#{k}")))?;
                transitions.push((name(q), on, name(t)));
            }
        }
        let alphabet: Vec<String> = alphabet.iter().map(|s| s.as_ref().to_string()).collect();
        let finals: Vec<String> = finals.iter().map(|&q| name(q)).collect();
        Self::new(&names, &alphabet, &name(start), &finals, &transitions)
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn finals(&self) -> &BTreeSet<usize> {
        &self.finals
    }

    /// Successor of `q` on the `k`-th input symbol.
    pub fn next(&self, q: usize, k: usize) -> usize {
        self.delta[q][k]
    }

    /// Transitions `(from, symbol index, to)` in numbering order.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.delta
            .iter()
            .enumerate()
            .flat_map(|(q, row)| row.iter().enumerate().map(move |(k, &t)| (q, k, t)))
    }

    /// Accepts a word given as input-symbol indices.
    pub fn run_indices(&self, word: &[usize]) -> bool {
        let end = word.iter().fold(self.start, |q, &k| self.delta[q][k]);
        self.finals.contains(&end)
    }

    pub fn to_file(&self) -> DfaFile {
        DfaFile {
            states: self.states.clone(),
            alphabet: self.alphabet.input_symbols().to_vec(),
            start: self.states[self.start].clone(),
            finals: self.finals.iter().map(|&q| self.states[q].clone()).collect(),
            delta: self
                .transitions()
                .map(|(q, k, t)| DfaTransition {
                    from: self.states[q].clone(),
                    on: self.alphabet.input_symbols()[k].clone(),
                    to: self.states[t].clone(),
                })
                .collect(),
        }
    }
}

/// Standard DFA acceptance of a word given as symbol names.
pub fn dfa_run<S: AsRef<str>>(d: &DfaDef, word: &[S]) -> Result<bool, DfaError> {
    let indices = word
        .iter()
        .map(|x| {
            d.alphabet
                .id(x.as_ref())
                .filter(|&id| d.alphabet.is_input(id))
                .map(|id| id - 2)
                .ok_or_else(|| DfaError::UnknownSymbol(x.as_ref().to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(d.run_indices(&indices))
}

/// [`dfa_run`] on a word spelled as text, tokenized like machine words.
pub fn dfa_run_text(d: &DfaDef, text: &str) -> Result<bool, DfaError> {
    let ids = d.alphabet.tokenize(text).map_err(|e| match e {
        MachineError::Tokenize { text, .. } => DfaError::UnknownSymbol(text),
        other => DfaError::Alphabet(Box::new(other)),
    })?;
    Ok(d.run_indices(&ids.into_iter().map(|id| id - 2).collect::<Vec<_>>()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DfaFile {
    pub states: Vec<String>,
    pub alphabet: Vec<String>,
    pub start: String,
    #[serde(rename = "final")]
    pub finals: Vec<String>,
    pub delta: Vec<DfaTransition>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DfaTransition {
    pub from: String,
    pub on: String,
    pub to: String,
}

impl DfaFile {
    pub fn into_dfa(self) -> Result<DfaDef, DfaError> {
        let transitions: Vec<(String, String, String)> = self.delta.into_iter().map(|t| (t.from, t.on, t.to)).collect();
        DfaDef::new(&self.states, &self.alphabet, &self.start, &self.finals, &transitions)
    }
}

/// Parses and validates a DFA document, including totality.
pub fn load_dfa(document: &str) -> Result<DfaDef, DfaError> {
    let file: DfaFile = serde_json::from_str(document).map_err(|e| DfaError::Document(e.to_string()))?;
    file.into_dfa()
}

fn fresh_name(base: &str, taken: &BTreeSet<String>) -> String {
    let mut name = base.to_string();
    while taken.contains(&name) {
        name.push('\'');
    }
    name
}

/// Translates a DFA into an equivalent WKQFA.
///
/// States are `q_0', Q…` followed by the accepting states; `V'` lists each
/// symbol `x` followed by its transition copies `x1…xn`. Lower copies whose
/// name is already taken get an underscore before the number.
///
/// With at most one final state there is a single accepting state `q_acc`.
/// Otherwise each final state `q` gets its own `q_acc<q>`, because sending
/// two final states to one target under `($,$)` would not be unitary.
pub fn compile(d: &DfaDef) -> MachineDef {
    let mut taken: BTreeSet<String> = d.states.iter().cloned().collect();
    let start = fresh_name("q0'", &taken);
    taken.insert(start.clone());
    let mut accepting: Vec<(Option<usize>, String)> = Vec::new();
    if d.finals.len() <= 1 {
        accepting.push((d.finals.first().copied(), fresh_name("q_acc", &taken)));
    } else {
        for &q in &d.finals {
            let name = fresh_name(&format!("q_acc<{}>", d.states[q]), &taken);
            taken.insert(name.clone());
            accepting.push((Some(q), name));
        }
    }

    let inputs = d.alphabet.input_symbols();
    // Per symbol, the transitions on it in numbering order.
    let mut numbered: Vec<Vec<(usize, usize)>> = vec![Vec::new(); inputs.len()];
    for (q, k, t) in d.transitions() {
        numbered[k].push((q, t));
    }

    let mut symbol_names: BTreeSet<String> = inputs.iter().cloned().collect();
    let mut alphabet = Vec::new();
    let mut copies: BTreeMap<(usize, usize), String> = BTreeMap::new();
    for (k, x) in inputs.iter().enumerate() {
        alphabet.push(x.clone());
        for i in 1..=numbered[k].len() {
            let mut copy = format!("{x}{i}");
            if symbol_names.contains(&copy) {
                copy = format!("{x}_{i}");
                while symbol_names.contains(&copy) {
                    copy.push('\'');
                }
            }
            symbol_names.insert(copy.clone());
            copies.insert((k, i), copy.clone());
            alphabet.push(copy);
        }
    }

    let mut rho = Vec::new();
    let mut entries = Vec::new();
    entries.push((
        LEFT_END_TEXT.to_string(),
        LEFT_END_TEXT.to_string(),
        start.clone(),
        d.states[d.start].clone(),
        "1".to_string(),
    ));
    for (k, x) in inputs.iter().enumerate() {
        for (i, &(q, t)) in numbered[k].iter().enumerate() {
            let copy = copies[&(k, i + 1)].clone();
            rho.push((x.clone(), copy.clone()));
            entries.push((
                x.clone(),
                copy,
                d.states[q].clone(),
                d.states[t].clone(),
                "1".to_string(),
            ));
        }
    }
    for (final_state, name) in &accepting {
        if let Some(q) = final_state {
            entries.push((
                RIGHT_END_TEXT.to_string(),
                RIGHT_END_TEXT.to_string(),
                d.states[*q].clone(),
                name.clone(),
                "1".to_string(),
            ));
        }
    }

    let accept: Vec<String> = accepting.into_iter().map(|(_, name)| name).collect();
    let mut states = vec![start.clone()];
    states.extend(d.states.iter().cloned());
    states.extend(accept.iter().cloned());
    let directions = states
        .iter()
        .map(|q| {
            (
                q.clone(),
                if accept.contains(q) {
                    Direction::STAY
                } else {
                    Direction::new(1, 1)
                },
            )
        })
        .collect();

    MachineDef::new(MachineSpec {
        states,
        start,
        accept,
        reject: vec![],
        alphabet,
        rho,
        directions,
        entries,
    })
    .expect("compiled machine is valid by construction")
}

/// The compiled machine's id of each DFA input symbol.
pub fn upper_ids(d: &DfaDef, compiled: &MachineDef) -> Vec<SymbolId> {
    d.alphabet
        .input_symbols()
        .iter()
        .map(|x| {
            compiled
                .alphabet()
                .id(x)
                .expect("compiled alphabet keeps every input symbol")
        })
        .collect()
}
