use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Position of a qubit in the register. Qubit `i` is bit `i` of a basis index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QubitId(pub usize);

impl QubitId {
    pub const fn index(self) -> usize {
        self.0
    }

    pub(crate) const fn mask(self) -> usize {
        1 << self.0
    }
}

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q[{}]", self.0)
    }
}

impl From<usize> for QubitId {
    fn from(i: usize) -> Self {
        QubitId(i)
    }
}

/// A NOT on `target` conditioned on every qubit in `controls` being 1.
///
/// Zero controls is X, one is CX, two is CCX; three or more is a logical MCX
/// that must be lowered before native execution.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gate {
    controls: Vec<QubitId>,
    target: QubitId,
}

impl Gate {
    pub fn new(controls: impl IntoIterator<Item = QubitId>, target: QubitId) -> Result<Self> {
        let controls: Vec<QubitId> = controls.into_iter().collect();
        for (i, c) in controls.iter().enumerate() {
            if *c == target {
                return Err(Error::Structural(format!(
                    "target {target} is also a control"
                )));
            }
            if controls[..i].contains(c) {
                return Err(Error::Structural(format!("control {c} listed twice")));
            }
        }
        Ok(Gate { controls, target })
    }

    pub fn x(target: usize) -> Self {
        Gate {
            controls: Vec::new(),
            target: QubitId(target),
        }
    }

    pub fn cx(control: usize, target: usize) -> Result<Self> {
        Gate::new([QubitId(control)], QubitId(target))
    }

    pub fn ccx(c1: usize, c2: usize, target: usize) -> Result<Self> {
        Gate::new([QubitId(c1), QubitId(c2)], QubitId(target))
    }

    pub fn mcx(controls: &[usize], target: usize) -> Result<Self> {
        Gate::new(controls.iter().copied().map(QubitId), QubitId(target))
    }

    pub fn controls(&self) -> &[QubitId] {
        &self.controls
    }

    pub fn target(&self) -> QubitId {
        self.target
    }

    pub fn num_controls(&self) -> usize {
        self.controls.len()
    }

    /// At most two controls.
    pub fn is_native(&self) -> bool {
        self.controls.len() <= 2
    }

    pub fn control_mask(&self) -> usize {
        self.controls.iter().fold(0, |m, c| m | c.mask())
    }

    pub fn qubits(&self) -> impl Iterator<Item = QubitId> + '_ {
        self.controls.iter().copied().chain(std::iter::once(self.target))
    }

    /// Largest qubit index referenced.
    pub fn max_qubit(&self) -> usize {
        self.qubits().map(QubitId::index).max().unwrap_or(0)
    }

    /// Classical action on a basis index.
    #[inline]
    pub fn apply_to_index(&self, index: usize) -> usize {
        let cm = self.control_mask();
        if index & cm == cm {
            index ^ self.target.mask()
        } else {
            index
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.controls.len() {
            0 => write!(f, "x {}", self.target),
            1 => write!(f, "cx {},{}", self.controls[0], self.target),
            2 => write!(
                f,
                "ccx {},{},{}",
                self.controls[0], self.controls[1], self.target
            ),
            _ => {
                write!(f, "mcx ")?;
                for c in &self.controls {
                    write!(f, "{c},")?;
                }
                write!(f, "{}", self.target)
            }
        }
    }
}
