//! JSON machine documents.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Direction, MachineDef, MachineError, MachineSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineFile {
    pub states: Vec<String>,
    pub start: String,
    #[serde(default)]
    pub accept: Vec<String>,
    #[serde(default)]
    pub reject: Vec<String>,
    pub alphabet: Vec<String>,
    pub rho: Vec<(String, String)>,
    pub directions: BTreeMap<String, [u8; 2]>,
    pub operators: Vec<OperatorBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorBlock {
    pub upper: String,
    pub lower: String,
    pub entries: Vec<OperatorFileEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorFileEntry {
    pub from: String,
    pub to: String,
    pub amp: String,
}

/// Parses a machine document. Operators are returned uncompleted.
pub fn load_machine(document: &str) -> Result<MachineDef, MachineError> {
    let file: MachineFile = serde_json::from_str(document).map_err(|e| MachineError::Document(e.to_string()))?;
    file.into_machine()
}

impl MachineFile {
    pub fn into_machine(self) -> Result<MachineDef, MachineError> {
        let mut directions = Vec::with_capacity(self.directions.len());
        for (state, [upper, lower]) in self.directions {
            for value in [upper, lower] {
                if value > 1 {
                    return Err(MachineError::BadDirection { state, value });
                }
            }
            directions.push((state, Direction { upper, lower }));
        }
        let entries = self
            .operators
            .into_iter()
            .flat_map(|block| {
                let (upper, lower) = (block.upper, block.lower);
                block
                    .entries
                    .into_iter()
                    .map(move |e| (upper.clone(), lower.clone(), e.from, e.to, e.amp))
            })
            .collect();
        MachineDef::new(MachineSpec {
            states: self.states,
            start: self.start,
            accept: self.accept,
            reject: self.reject,
            alphabet: self.alphabet,
            rho: self.rho,
            directions,
            entries,
        })
    }

    /// Pretty JSON with sorted object keys; stable for identical input.
    pub fn to_canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("machine documents always serialize");
        let mut text = serde_json::to_string_pretty(&value).expect("json values always serialize");
        text.push('\n');
        text
    }
}

impl MachineDef {
    /// The document form of this machine, operators grouped per symbol pair.
    pub fn to_file(&self) -> MachineFile {
        let names = |qs: Vec<usize>| qs.into_iter().map(|q| self.states[q].clone()).collect();
        let operators = self
            .operators
            .iter()
            .filter(|(_, op)| !op.entries().is_empty())
            .map(|(&(u, l), op)| OperatorBlock {
                upper: self.alphabet.name(u).to_string(),
                lower: self.alphabet.name(l).to_string(),
                entries: op
                    .entries()
                    .iter()
                    .map(|e| OperatorFileEntry {
                        from: self.states[e.from].clone(),
                        to: self.states[e.to].clone(),
                        amp: e.expr.clone(),
                    })
                    .collect(),
            })
            .collect();
        MachineFile {
            states: self.states.clone(),
            start: self.states[self.start].clone(),
            accept: names(self.accepting().collect()),
            reject: names(self.rejecting().collect()),
            alphabet: self.alphabet.input_symbols().to_vec(),
            rho: self
                .rho
                .pairs()
                .iter()
                .map(|&(u, l)| (self.alphabet.name(u).to_string(), self.alphabet.name(l).to_string()))
                .collect(),
            directions: self
                .states
                .iter()
                .zip(&self.directions)
                .map(|(name, d)| (name.clone(), [d.upper, d.lower]))
                .collect(),
            operators,
        }
    }

    pub fn to_json(&self) -> String {
        self.to_file().to_canonical_json()
    }
}
