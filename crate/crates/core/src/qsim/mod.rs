//! Exact execution of X-family circuits.
//!
//! Two paths are provided: a full state vector of complex amplitudes and a
//! classical basis-state fast path. For circuits built only from X, CX, CCX and
//! MCX they agree on every basis input.

mod circuit;
mod gate;
pub mod qasm;
mod state;
mod unitary;

pub use circuit::{BasisState, Circuit, ExecMode, RegisterMap};
pub use gate::{Gate, QubitId};
pub use state::{
    apply_gate, new_state, run_basis, run_state, StateVector, MAX_STATE_QUBITS, NORM_TOLERANCE,
    PARALLEL_MIN_QUBITS,
};
pub use unitary::{as_unitary, permutation_of, MAX_DENSE_QUBITS};
