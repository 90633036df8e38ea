//! The WKQFA data model.
//!
//! Symbols and states are interned: symbols index the working alphabet
//! `Γ = {#, $} ∪ V` (ids 0 and 1 are the endmarkers) and states index
//! [`MachineDef::states`]. Operators are stored column-wise, keyed by the
//! source state, so `U|q⟩` is a direct lookup.

mod completion;
mod file;
mod wellformed;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::amplitude::{AmplitudeError, ComplexAmplitude};

pub use completion::{complete_operators, complete_operators_with_tol, fill_default_rejects, CompletionError};
pub use file::{load_machine, MachineFile, OperatorBlock, OperatorFileEntry};
pub use wellformed::{check_well_formed, PairDeviation, WellFormedReport};

/// Index into the working alphabet.
pub type SymbolId = usize;
/// Index into the machine's state list.
pub type StateIndex = usize;

pub const LEFT_END: SymbolId = 0;
pub const RIGHT_END: SymbolId = 1;
pub const LEFT_END_TEXT: &str = "#";
pub const RIGHT_END_TEXT: &str = "$";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("machine declares no states")]
    NoStates,
    #[error("duplicate state '{0}'")]
    DuplicateState(String),
    #[error("unknown state '{0}'")]
    UnknownState(String),
    #[error("duplicate input symbol '{0}'")]
    DuplicateSymbol(String),
    #[error("unknown symbol '{0}'")]
    UnknownSymbol(String),
    #[error("endmarker '{0}' cannot be an input symbol")]
    EndmarkerInAlphabet(String),
    #[error("input symbols must be non-empty")]
    EmptySymbol,
    #[error("state '{0}' is both accepting and rejecting")]
    AcceptRejectOverlap(String),
    #[error("state '{0}' has no head direction")]
    MissingDirection(String),
    #[error("head direction for '{state}' must be 0 or 1, got {value}")]
    BadDirection { state: String, value: u8 },
    #[error("complementarity pair ({0}, {1}) uses a symbol outside V")]
    BadComplementPair(String, String),
    #[error("complementarity pair ({0}, {1}) listed twice")]
    DuplicateComplementPair(String, String),
    #[error("duplicate operator entry U[{upper},{lower}] {from} -> {to}")]
    DuplicateEntry {
        upper: String,
        lower: String,
        from: String,
        to: String,
    },
    /// `entry` reads like "'1/sqrt(2)' for U[a,b] p -> q".
    #[error("amplitude {entry}: {source}")]
    Amplitude { entry: String, source: AmplitudeError },
    #[error("cannot tokenize '{text}' at offset {offset}")]
    Tokenize { text: String, offset: usize },
    #[error("malformed machine document: {0}")]
    Document(String),
}

/// The input alphabet `V` together with the two endmarkers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    // Γ in id order: "#", "$", then V as declared.
    names: Vec<String>,
    ids: HashMap<String, SymbolId>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(input_symbols: impl IntoIterator<Item = S>) -> Result<Self, MachineError> {
        let mut names = vec![LEFT_END_TEXT.to_string(), RIGHT_END_TEXT.to_string()];
        let mut ids = HashMap::new();
        ids.insert(LEFT_END_TEXT.to_string(), LEFT_END);
        ids.insert(RIGHT_END_TEXT.to_string(), RIGHT_END);
        for symbol in input_symbols {
            let symbol = symbol.into();
            if symbol.is_empty() {
                return Err(MachineError::EmptySymbol);
            }
            if symbol == LEFT_END_TEXT || symbol == RIGHT_END_TEXT {
                return Err(MachineError::EndmarkerInAlphabet(symbol));
            }
            if ids.contains_key(&symbol) {
                return Err(MachineError::DuplicateSymbol(symbol));
            }
            ids.insert(symbol.clone(), names.len());
            names.push(symbol);
        }
        Ok(Self { names, ids })
    }

    /// `V` in declaration order.
    pub fn input_symbols(&self) -> &[String] {
        &self.names[2..]
    }

    /// Ids of `V` in declaration order.
    pub fn input_ids(&self) -> impl Iterator<Item = SymbolId> {
        2..self.names.len()
    }

    /// Size of the working alphabet `Γ`.
    pub fn working_len(&self) -> usize {
        self.names.len()
    }

    /// Id of a symbol of `Γ`, including the endmarkers.
    pub fn id(&self, symbol: &str) -> Option<SymbolId> {
        self.ids.get(symbol).copied()
    }

    pub fn is_input(&self, id: SymbolId) -> bool {
        id >= 2 && id < self.names.len()
    }

    pub fn name(&self, id: SymbolId) -> &str {
        &self.names[id]
    }

    /// Splits a word into input symbols.
    ///
    /// Words containing whitespace or commas are split on them; otherwise
    /// symbols are matched greedily, longest first.
    pub fn tokenize(&self, text: &str) -> Result<Vec<SymbolId>, MachineError> {
        let lookup = |token: &str, offset: usize| {
            self.id(token)
                .filter(|&id| self.is_input(id))
                .ok_or_else(|| MachineError::Tokenize {
                    text: text.to_string(),
                    offset,
                })
        };
        if text.contains(|c: char| c.is_whitespace() || c == ',') {
            let mut out = Vec::new();
            let mut offset = 0;
            for token in text.split(|c: char| c.is_whitespace() || c == ',') {
                if !token.is_empty() {
                    out.push(lookup(token, offset)?);
                }
                offset += token.len() + 1;
            }
            return Ok(out);
        }
        let mut by_length: Vec<&String> = self.input_symbols().iter().collect();
        by_length.sort_by_key(|s| std::cmp::Reverse(s.len()));
        let mut out = Vec::new();
        let mut offset = 0;
        while offset < text.len() {
            let rest = &text[offset..];
            let symbol =
                by_length
                    .iter()
                    .find(|s| rest.starts_with(s.as_str()))
                    .ok_or_else(|| MachineError::Tokenize {
                        text: text.to_string(),
                        offset,
                    })?;
            out.push(lookup(symbol, offset)?);
            offset += symbol.len();
        }
        Ok(out)
    }

    /// Concatenates symbol names.
    pub fn render(&self, ids: &[SymbolId]) -> String {
        ids.iter().map(|&id| self.name(id)).collect()
    }
}

/// The relation `ρ ⊆ V × V`, kept in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ComplementarityRelation {
    pairs: Vec<(SymbolId, SymbolId)>,
    by_upper: BTreeMap<SymbolId, Vec<SymbolId>>,
}

impl ComplementarityRelation {
    pub fn new(pairs: impl IntoIterator<Item = (SymbolId, SymbolId)>) -> Self {
        let mut relation = Self::default();
        for (upper, lower) in pairs {
            if !relation.contains(upper, lower) {
                relation.pairs.push((upper, lower));
                relation.by_upper.entry(upper).or_default().push(lower);
            }
        }
        relation
    }

    pub fn pairs(&self) -> &[(SymbolId, SymbolId)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, upper: SymbolId, lower: SymbolId) -> bool {
        self.by_upper.get(&upper).is_some_and(|lowers| lowers.contains(&lower))
    }

    /// Lower complements of `upper`, in declaration order.
    pub fn complements_of(&self, upper: SymbolId) -> &[SymbolId] {
        self.by_upper.get(&upper).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Symbols occurring as first components.
    pub fn upper_symbols(&self) -> BTreeSet<SymbolId> {
        self.by_upper.keys().copied().collect()
    }

    /// Symbols occurring as second components.
    pub fn lower_symbols(&self) -> BTreeSet<SymbolId> {
        self.pairs.iter().map(|&(_, lower)| lower).collect()
    }

    /// Each upper symbol has one complement and no complement is shared.
    pub fn is_injective(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.by_upper.values().all(|lowers| lowers.len() == 1)
            && self.pairs.iter().all(|&(_, lower)| seen.insert(lower))
    }
}

/// Head movement attached to a target state: 0 stays, 1 moves right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Direction {
    pub upper: u8,
    pub lower: u8,
}

impl Direction {
    pub const STAY: Direction = Direction { upper: 0, lower: 0 };

    pub fn new(upper: u8, lower: u8) -> Self {
        debug_assert!(upper <= 1 && lower <= 1);
        Self { upper, lower }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.upper, self.lower)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateKind {
    Accepting,
    Rejecting,
    NonHalting,
}

/// One specified matrix element `⟨to|U|from⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorEntry {
    pub from: StateIndex,
    pub to: StateIndex,
    pub amp: ComplexAmplitude,
    /// Source text of the amplitude, kept for export.
    pub expr: String,
}

/// `U_{σ,τ}` as a list of entries plus a column index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Operator {
    entries: Vec<OperatorEntry>,
    columns: BTreeMap<StateIndex, Vec<(StateIndex, ComplexAmplitude)>>,
}

impl Operator {
    pub fn entries(&self) -> &[OperatorEntry] {
        &self.entries
    }

    /// Nonzero-or-specified entries of `U|from⟩`, sorted by target.
    pub fn column(&self, from: StateIndex) -> &[(StateIndex, ComplexAmplitude)] {
        self.columns.get(&from).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Squared norm of `U|from⟩`.
    pub fn column_norm_sqr(&self, from: StateIndex) -> f64 {
        self.column(from).iter().fold(0.0, |acc, (_, a)| acc + a.norm_sqr())
    }

    fn push(&mut self, entry: OperatorEntry) {
        let column = self.columns.entry(entry.from).or_default();
        let at = column.partition_point(|&(to, _)| to < entry.to);
        column.insert(at, (entry.to, entry.amp));
        self.entries.push(entry);
    }

    fn has_entry(&self, from: StateIndex, to: StateIndex) -> bool {
        self.column(from).iter().any(|&(t, _)| t == to)
    }
}

/// One tagged entry of `δ(q, σ, τ, ·, ·, ·)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaEntry {
    pub target: String,
    pub direction: Direction,
    pub amp: ComplexAmplitude,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeltaError {
    #[error("unknown state '{0}'")]
    UnknownState(String),
    #[error("unknown symbol '{0}'")]
    UnknownSymbol(String),
    #[error("no operator U[{0},{1}] in this machine")]
    UnknownOperator(String, String),
}

/// A Watson-Crick quantum finite automaton.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineDef {
    states: Vec<String>,
    state_ids: HashMap<String, StateIndex>,
    kinds: Vec<StateKind>,
    directions: Vec<Direction>,
    alphabet: Alphabet,
    rho: ComplementarityRelation,
    start: StateIndex,
    operators: BTreeMap<(SymbolId, SymbolId), Operator>,
    // States introduced by default-reject completion; their own columns are
    // the implicit unitary extension and are never materialized.
    fillers: BTreeSet<StateIndex>,
}

/// Builder input for [`MachineDef::new`].
#[derive(Debug, Clone, Default)]
pub struct MachineSpec {
    pub states: Vec<String>,
    pub start: String,
    pub accept: Vec<String>,
    pub reject: Vec<String>,
    pub alphabet: Vec<String>,
    pub rho: Vec<(String, String)>,
    pub directions: Vec<(String, Direction)>,
    /// `(upper, lower, from, to, amplitude expression)`.
    pub entries: Vec<(String, String, String, String, String)>,
}

impl MachineDef {
    /// Validates and interns a machine description.
    pub fn new(spec: MachineSpec) -> Result<Self, MachineError> {
        if spec.states.is_empty() {
            return Err(MachineError::NoStates);
        }
        let mut state_ids = HashMap::new();
        for (i, name) in spec.states.iter().enumerate() {
            if state_ids.insert(name.clone(), i).is_some() {
                return Err(MachineError::DuplicateState(name.clone()));
            }
        }
        let state = |name: &str| {
            state_ids
                .get(name)
                .copied()
                .ok_or_else(|| MachineError::UnknownState(name.to_string()))
        };

        let alphabet = Alphabet::new(spec.alphabet.iter().cloned())?;
        let start = state(&spec.start)?;

        let mut kinds = vec![StateKind::NonHalting; spec.states.len()];
        for name in &spec.accept {
            kinds[state(name)?] = StateKind::Accepting;
        }
        for name in &spec.reject {
            let q = state(name)?;
            if kinds[q] == StateKind::Accepting {
                return Err(MachineError::AcceptRejectOverlap(name.clone()));
            }
            kinds[q] = StateKind::Rejecting;
        }

        let mut rho_pairs = Vec::new();
        for (upper, lower) in &spec.rho {
            let ids = (alphabet.id(upper), alphabet.id(lower));
            match ids {
                (Some(u), Some(l)) if alphabet.is_input(u) && alphabet.is_input(l) => {
                    if rho_pairs.contains(&(u, l)) {
                        return Err(MachineError::DuplicateComplementPair(upper.clone(), lower.clone()));
                    }
                    rho_pairs.push((u, l));
                }
                _ => return Err(MachineError::BadComplementPair(upper.clone(), lower.clone())),
            }
        }

        let mut directions: Vec<Option<Direction>> = vec![None; spec.states.len()];
        for (name, d) in &spec.directions {
            for value in [d.upper, d.lower] {
                if value > 1 {
                    return Err(MachineError::BadDirection {
                        state: name.clone(),
                        value,
                    });
                }
            }
            directions[state(name)?] = Some(*d);
        }
        let directions = directions
            .into_iter()
            .enumerate()
            .map(|(i, d)| d.ok_or_else(|| MachineError::MissingDirection(spec.states[i].clone())))
            .collect::<Result<Vec<_>, _>>()?;

        let mut operators: BTreeMap<(SymbolId, SymbolId), Operator> = BTreeMap::new();
        for (upper, lower, from, to, expr) in &spec.entries {
            let symbol = |s: &str| alphabet.id(s).ok_or_else(|| MachineError::UnknownSymbol(s.to_string()));
            let pair = (symbol(upper)?, symbol(lower)?);
            let (f, t) = (state(from)?, state(to)?);
            let amp = crate::amplitude::parse_amplitude(expr).map_err(|source| MachineError::Amplitude {
                entry: format!("'{expr}' for U[{upper},{lower}] {from} -> {to}"),
                source,
            })?;
            let op = operators.entry(pair).or_default();
            if op.has_entry(f, t) {
                return Err(MachineError::DuplicateEntry {
                    upper: upper.clone(),
                    lower: lower.clone(),
                    from: from.clone(),
                    to: to.clone(),
                });
            }
            op.push(OperatorEntry {
                from: f,
                to: t,
                amp,
                expr: expr.clone(),
            });
        }

        Ok(Self {
            states: spec.states,
            state_ids,
            kinds,
            directions,
            alphabet,
            rho: ComplementarityRelation::new(rho_pairs),
            start,
            operators,
            fillers: BTreeSet::new(),
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, name: &str) -> Option<StateIndex> {
        self.state_ids.get(name).copied()
    }

    pub fn state_name(&self, q: StateIndex) -> &str {
        &self.states[q]
    }

    pub fn kind(&self, q: StateIndex) -> StateKind {
        self.kinds[q]
    }

    pub fn is_halting(&self, q: StateIndex) -> bool {
        self.kinds[q] != StateKind::NonHalting
    }

    pub fn direction(&self, q: StateIndex) -> Direction {
        self.directions[q]
    }

    pub fn start(&self) -> StateIndex {
        self.start
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn rho(&self) -> &ComplementarityRelation {
        &self.rho
    }

    pub fn accepting(&self) -> impl Iterator<Item = StateIndex> + '_ {
        (0..self.states.len()).filter(|&q| self.kinds[q] == StateKind::Accepting)
    }

    pub fn rejecting(&self) -> impl Iterator<Item = StateIndex> + '_ {
        (0..self.states.len()).filter(|&q| self.kinds[q] == StateKind::Rejecting)
    }

    /// `Q_non = Q − (Q_acc ∪ Q_rej)`.
    pub fn non_halting(&self) -> impl Iterator<Item = StateIndex> + '_ {
        (0..self.states.len()).filter(|&q| self.kinds[q] == StateKind::NonHalting)
    }

    /// States added by default-reject completion.
    pub fn fillers(&self) -> &BTreeSet<StateIndex> {
        &self.fillers
    }

    pub fn is_filler(&self, q: StateIndex) -> bool {
        self.fillers.contains(&q)
    }

    pub fn operators(&self) -> impl Iterator<Item = ((SymbolId, SymbolId), &Operator)> {
        self.operators.iter().map(|(&k, v)| (k, v))
    }

    pub fn operator(&self, upper: SymbolId, lower: SymbolId) -> Option<&Operator> {
        self.operators.get(&(upper, lower))
    }

    /// Pairs that can appear under the heads during some run: the
    /// endmarkers plus first (upper) or second (lower) components of `ρ`.
    pub fn readable_pairs(&self) -> Vec<(SymbolId, SymbolId)> {
        let mut uppers = vec![LEFT_END, RIGHT_END];
        uppers.extend(self.rho.upper_symbols());
        let mut lowers = vec![LEFT_END, RIGHT_END];
        lowers.extend(self.rho.lower_symbols());
        uppers
            .iter()
            .flat_map(|&u| lowers.iter().map(move |&l| (u, l)))
            .collect()
    }

    /// Nonzero entries of `U_{σ,τ}|q⟩`, each tagged with the target's head movement.
    pub fn derive_delta(&self, q: &str, upper: &str, lower: &str) -> Result<Vec<DeltaEntry>, DeltaError> {
        let qi = self
            .state_index(q)
            .ok_or_else(|| DeltaError::UnknownState(q.to_string()))?;
        let symbol = |s: &str| {
            self.alphabet
                .id(s)
                .ok_or_else(|| DeltaError::UnknownSymbol(s.to_string()))
        };
        let (u, l) = (symbol(upper)?, symbol(lower)?);
        let op = self
            .operator(u, l)
            .ok_or_else(|| DeltaError::UnknownOperator(upper.to_string(), lower.to_string()))?;
        Ok(op
            .column(qi)
            .iter()
            .filter(|(_, amp)| amp.norm_sqr() > 0.0)
            .map(|&(to, amp)| DeltaEntry {
                target: self.states[to].clone(),
                direction: self.directions[to],
                amp,
            })
            .collect())
    }

    /// A strongly WKQFA has an injective complementarity relation.
    pub fn is_strong(&self) -> bool {
        self.rho.is_injective()
    }

    fn add_filler(&mut self, base: String) -> StateIndex {
        let mut name = base;
        while self.state_ids.contains_key(&name) {
            name.push('\'');
        }
        let q = self.states.len();
        self.state_ids.insert(name.clone(), q);
        self.states.push(name);
        self.kinds.push(StateKind::Rejecting);
        self.directions.push(Direction::STAY);
        self.fillers.insert(q);
        q
    }

    fn operator_mut(&mut self, pair: (SymbolId, SymbolId)) -> &mut Operator {
        self.operators.entry(pair).or_default()
    }
}
