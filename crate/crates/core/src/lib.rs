//! Quantum-circuit controller for a Braitenberg-style obstacle-avoiding vehicle.
//!
//! * [`qsim`] executes X-family circuits on a state vector or a basis-state fast path.
//! * [`decompose`] lowers k-controlled NOTs to CCX/CX networks over clean ancillas.
//! * [`synth`] compiles a truth table into a segment-per-row circuit and decodes actuators.
//! * [`gridworld`] senses and moves a robot on an occupancy grid.
//! * [`session`] runs episodes, persists traces and serves the live protocol.

pub mod decompose;
pub mod error;
pub mod gridworld;
pub mod par;
pub mod qsim;
pub mod session;
pub mod synth;

pub use error::{Error, Result};
