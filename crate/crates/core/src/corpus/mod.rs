//! Built-in machines and independent classical membership oracles.
//!
//! Each entry keeps its raw definition alongside the default-reject filled
//! machine used for simulation.

use std::fmt;

use thiserror::Error;

use crate::compiler::{compile, load_dfa, DfaDef};
use crate::machine::{fill_default_rejects, load_machine, MachineDef};
use crate::strand::Strand;

const EXAMPLE1: &str = include_str!("data/example1_anbncn.json");
const EXAMPLE2_DFA: &str = include_str!("data/example2_regex.dfa.json");
const THEOREM3: &str = include_str!("data/theorem3_yao.json");
const THEOREM5: &str = include_str!("data/theorem5_ww.json");

pub const NAMES: [&str; 4] = ["example1_anbncn", "example2_regex", "theorem3_yao", "theorem5_ww"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("unknown corpus machine '{0}'; known: {known}", known = NAMES.join(", "))]
    UnknownName(String),
    #[error("'{prefix}' matches several corpus machines: {}", .matches.join(", "))]
    Ambiguous { prefix: String, matches: Vec<String> },
    #[error("word '{0}' is not over the machine's upper alphabet")]
    BadWord(String),
}

/// Classical membership test for a corpus language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Oracle {
    /// `a^n b^n c^n`, `n ≥ 1`.
    AnBnCn,
    /// Runs the source DFA.
    Regex(DfaDef),
    /// Blocks `%w*x`; some two blocks share `w` and differ in `x`.
    EqualKeyDistinctValue,
    /// `ww` over `{a, b}`.
    Square,
}

impl Oracle {
    pub fn contains<S: AsRef<str>>(&self, word: &[S]) -> bool {
        let word: Vec<&str> = word.iter().map(AsRef::as_ref).collect();
        match self {
            Self::AnBnCn => {
                let n = word.len() / 3;
                n >= 1
                    && word.len() == 3 * n
                    && word[..n].iter().all(|&s| s == "a")
                    && word[n..2 * n].iter().all(|&s| s == "b")
                    && word[2 * n..].iter().all(|&s| s == "c")
            }
            Self::Regex(d) => crate::compiler::dfa_run(d, &word).unwrap_or(false),
            Self::EqualKeyDistinctValue => match parse_blocks(&word) {
                Some(blocks) => blocks
                    .iter()
                    .enumerate()
                    .any(|(i, (w, x))| blocks[i + 1..].iter().any(|(w2, x2)| w == w2 && x != x2)),
                None => false,
            },
            Self::Square => {
                word.len().is_multiple_of(2)
                    && word.iter().all(|&s| s == "a" || s == "b")
                    && word[..word.len() / 2] == word[word.len() / 2..]
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::AnBnCn => "a^n b^n c^n with n >= 1".into(),
            Self::Regex(_) => "(a+b)*a, decided by running the source DFA".into(),
            Self::EqualKeyDistinctValue => "words %w_1*x_1%w_2*x_2...%w_n*x_n with w_i, x_i over {a,b}, \
                 such that w_i = w_j and x_i != x_j for some i != j; other shapes are non-members"
                .into(),
            Self::Square => "ww with w over {a,b}".into(),
        }
    }
}

/// Splits `%w_1*x_1%w_2*x_2…` into `(w_i, x_i)`; `None` for any other shape.
fn parse_blocks<'a>(word: &[&'a str]) -> Option<Vec<(Vec<&'a str>, Vec<&'a str>)>> {
    if word.is_empty() {
        return Some(Vec::new());
    }
    if word[0] != "%" {
        return None;
    }
    word[1..]
        .split(|&s| s == "%")
        .map(|block| {
            let star = block.iter().position(|&s| s == "*")?;
            let (w, x) = (&block[..star], &block[star + 1..]);
            let letters = |part: &[&str]| part.iter().all(|&s| s == "a" || s == "b");
            (letters(w) && letters(x)).then(|| (w.to_vec(), x.to_vec()))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: &'static str,
    /// As transcribed, before completion.
    pub definition: MachineDef,
    /// Definition with every zero column sent to a fresh reject state.
    pub machine: MachineDef,
    pub oracle: Oracle,
    pub notes: &'static str,
}

impl CorpusEntry {
    /// Oracle membership of an upper word of this machine.
    pub fn oracle_contains(&self, w: &Strand) -> bool {
        let names: Vec<&str> = w.iter().map(|&s| self.machine.alphabet().name(s)).collect();
        self.oracle.contains(&names)
    }
}

impl fmt::Display for CorpusEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.name, self.oracle.describe())
    }
}

/// The source DFA of `example2_regex`.
pub fn example2_dfa() -> DfaDef {
    load_dfa(EXAMPLE2_DFA).expect("embedded dfa is valid")
}

pub fn get_machine(name: &str) -> Result<CorpusEntry, CorpusError> {
    let load = |doc: &str| load_machine(doc).expect("embedded machine is valid");
    let (name, definition, oracle, notes) = match name {
        "example1_anbncn" => (
            "example1_anbncn",
            load(EXAMPLE1),
            Oracle::AnBnCn,
            "Strongly deterministic; lower strand equals the upper. Counts a's against b's, then b's against c's.",
        ),
        "example2_regex" => {
            let dfa = example2_dfa();
            (
                "example2_regex",
                compile(&dfa),
                Oracle::Regex(dfa),
                "Compiled from the two-state DFA for (a+b)*a; the lower strand guesses the transition sequence.",
            )
        }
        "theorem3_yao" => (
            "theorem3_yao",
            load(THEOREM3),
            Oracle::EqualKeyDistinctValue,
            "Lower markers vm1 and vm2 guess two blocks; q2 compares their w parts and q3 their x parts. \
             Input words are read as blocks %w*x.",
        ),
        "theorem5_ww" => (
            "theorem5_ww",
            load(THEOREM5),
            Oracle::Square,
            "The lower marker m guesses the midpoint; one path checks periodicity, the other the midpoint \
             position, and a final Fourier step accepts with certainty only when both agree. ($,$) from q6 \
             enters q8, so path two ends on the right endmarker. U[a,$] and U[b,$] send q3 and q4 to q4, \
             so those two operators are not unitary. The empty word is rejected although it is in the language.",
        ),
        other => return Err(CorpusError::UnknownName(other.to_string())),
    };
    Ok(CorpusEntry {
        name,
        machine: fill_default_rejects(&definition),
        definition,
        oracle,
        notes,
    })
}

/// Resolves a full name, `corpus/NAME`, or a unique prefix.
pub fn resolve(name: &str) -> Result<CorpusEntry, CorpusError> {
    let name = name.strip_prefix("corpus/").unwrap_or(name);
    if NAMES.contains(&name) {
        return get_machine(name);
    }
    let matches: Vec<&str> = NAMES.iter().copied().filter(|n| n.starts_with(name)).collect();
    match matches.as_slice() {
        [one] => get_machine(one),
        [] => Err(CorpusError::UnknownName(name.to_string())),
        _ => Err(CorpusError::Ambiguous {
            prefix: name.to_string(),
            matches: matches.iter().map(|s| s.to_string()).collect(),
        }),
    }
}

/// Oracle membership of a word spelled over the machine's upper alphabet.
pub fn oracle_membership(name: &str, text: &str) -> Result<bool, CorpusError> {
    let entry = get_machine(name)?;
    let w = Strand::parse(entry.machine.alphabet(), text).map_err(|_| CorpusError::BadWord(text.to_string()))?;
    Ok(entry.oracle_contains(&w))
}
