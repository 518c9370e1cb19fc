use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::gate::{Gate, QubitId};
use crate::error::{Error, Result};

/// How multi-controlled gates are treated during execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    /// Gates with any number of controls are applied by definition.
    Logical,
    /// Only gates with at most two controls are accepted.
    Native,
}

/// Named qubit roles of the vehicle controller register.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterMap {
    /// Front, back, left, right.
    pub sensors: [QubitId; 4],
    pub ancillas: Vec<QubitId>,
    /// `[A, B]` qubits of the left motor.
    pub ml: [QubitId; 2],
    /// `[A, B]` qubits of the right motor.
    pub mr: [QubitId; 2],
    pub mu: QubitId,
    pub ask: QubitId,
}

impl RegisterMap {
    /// The 13-qubit controller layout: sensors q0..q3, ancillas q4..q6,
    /// ML q7,q8, MR q9,q10, MU q11, ASK q12.
    pub fn vehicle() -> Self {
        RegisterMap {
            sensors: [QubitId(0), QubitId(1), QubitId(2), QubitId(3)],
            ancillas: vec![QubitId(4), QubitId(5), QubitId(6)],
            ml: [QubitId(7), QubitId(8)],
            mr: [QubitId(9), QubitId(10)],
            mu: QubitId(11),
            ask: QubitId(12),
        }
    }

    /// Output qubits in truth-table column order: ML_A, ML_B, MR_A, MR_B, MU, ASK.
    pub fn outputs(&self) -> [QubitId; 6] {
        [
            self.ml[0], self.ml[1], self.mr[0], self.mr[1], self.mu, self.ask,
        ]
    }

    pub fn all_qubits(&self) -> impl Iterator<Item = QubitId> + '_ {
        self.sensors
            .iter()
            .chain(self.ancillas.iter())
            .copied()
            .chain(self.outputs())
    }

    /// Checks that roles are disjoint and fit in `num_qubits`.
    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        let mut seen = BTreeSet::new();
        for q in self.all_qubits() {
            if q.index() >= num_qubits {
                return Err(Error::Structural(format!(
                    "register role {q} outside {num_qubits}-qubit register"
                )));
            }
            if !seen.insert(q) {
                return Err(Error::Structural(format!("qubit {q} assigned two roles")));
            }
        }
        Ok(())
    }

    pub fn min_width(&self) -> usize {
        self.all_qubits().map(|q| q.index() + 1).max().unwrap_or(0)
    }
}

/// An ordered X-family gate list over a fixed-width register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
    registers: Option<RegisterMap>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::Structural("circuit needs at least one qubit".into()));
        }
        if num_qubits > usize::BITS as usize - 1 {
            return Err(Error::Capacity(format!("{num_qubits} qubits")));
        }
        Ok(Circuit {
            num_qubits,
            gates: Vec::new(),
            registers: None,
        })
    }

    pub fn from_gates(num_qubits: usize, gates: impl IntoIterator<Item = Gate>) -> Result<Self> {
        let mut c = Circuit::new(num_qubits)?;
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn with_registers(mut self, registers: RegisterMap) -> Result<Self> {
        registers.validate(self.num_qubits)?;
        self.registers = Some(registers);
        Ok(self)
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        if gate.max_qubit() >= self.num_qubits {
            return Err(Error::Structural(format!(
                "gate `{gate}` references a qubit outside the {}-qubit register",
                self.num_qubits
            )));
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn registers(&self) -> Option<&RegisterMap> {
        self.registers.as_ref()
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// True when every gate has at most two controls.
    pub fn is_native(&self) -> bool {
        self.gates.iter().all(Gate::is_native)
    }

    pub(crate) fn check_mode(&self, mode: ExecMode) -> Result<()> {
        if mode == ExecMode::Native {
            if let Some(g) = self.gates.iter().find(|g| !g.is_native()) {
                return Err(Error::Structural(format!(
                    "gate `{g}` has {} controls; lower the circuit before native execution",
                    g.num_controls()
                )));
            }
        }
        Ok(())
    }

    /// Classical action on a basis index.
    pub fn apply_to_index(&self, index: usize) -> usize {
        self.gates.iter().fold(index, |i, g| g.apply_to_index(i))
    }
}

/// A classical bitstring embedded in the register; `bits[i]` is qubit `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisState {
    bits: Vec<bool>,
}

impl BasisState {
    pub fn zeros(n: usize) -> Self {
        BasisState {
            bits: vec![false; n],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BasisState { bits }
    }

    pub fn from_index(index: usize, n: usize) -> Self {
        BasisState {
            bits: (0..n).map(|i| index >> i & 1 == 1).collect(),
        }
    }

    /// Parses a `0`/`1` string where character `i` is qubit `i`.
    pub fn parse(text: &str) -> Result<Self> {
        text.chars()
            .enumerate()
            .map(|(i, ch)| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::parse(1, i + 1, format!("expected 0 or 1, got {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BasisState::from_bits)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, q: QubitId) -> bool {
        self.bits[q.index()]
    }

    pub fn set(&mut self, q: QubitId, value: bool) {
        self.bits[q.index()] = value;
    }

    pub fn index(&self) -> usize {
        self.bits
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | (usize::from(b) << i))
    }
}

impl std::fmt::Display for BasisState {
    /// Register order: the first character is qubit 0.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vehicle_layout_is_valid_on_13_qubits() {
        let r = RegisterMap::vehicle();
        r.validate(13).unwrap();
        assert_eq!(r.min_width(), 13);
        assert!(r.validate(12).is_err());
    }

    #[test]
    fn overlapping_roles_rejected() {
        let mut r = RegisterMap::vehicle();
        r.ask = QubitId(0);
        assert!(matches!(r.validate(13), Err(Error::Structural(_))));
    }

    #[test]
    fn push_rejects_out_of_range() {
        let mut c = Circuit::new(2).unwrap();
        assert!(c.push(Gate::x(2)).is_err());
        assert!(c.push(Gate::x(1)).is_ok());
    }

    #[test]
    fn basis_index_round_trip() {
        let b = BasisState::from_index(0b1010, 5);
        assert_eq!(b.to_string(), "01010");
        assert_eq!(b.index(), 0b1010);
        assert_eq!(BasisState::parse("01010").unwrap(), b);
    }

    #[test]
    fn native_mode_rejects_mcx() {
        let c = Circuit::from_gates(5, [Gate::mcx(&[0, 1, 2], 4).unwrap()]).unwrap();
        assert!(!c.is_native());
        assert!(c.check_mode(ExecMode::Logical).is_ok());
        assert!(c.check_mode(ExecMode::Native).is_err());
    }
}
