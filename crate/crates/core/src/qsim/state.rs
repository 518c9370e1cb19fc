use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::circuit::{BasisState, Circuit, ExecMode};
use super::gate::Gate;
use crate::error::{Error, Result};

/// Largest register a state vector may hold.
pub const MAX_STATE_QUBITS: usize = 24;

/// Registers at or above this width take the rayon path in [`StateVector::apply`].
pub const PARALLEL_MIN_QUBITS: usize = 14;

/// Tolerance on total probability accepted by [`StateVector::measure_all`].
pub const NORM_TOLERANCE: f64 = 1e-9;

/// 2^n complex amplitudes; basis index `Σ v_i 2^i` with qubit 0 least significant.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `n` qubits.
    pub fn new(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    /// The computational basis state with the given index.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        if n == 0 || n > MAX_STATE_QUBITS {
            return Err(Error::Capacity(format!(
                "state vector width {n} outside 1..={MAX_STATE_QUBITS}"
            )));
        }
        let dim = 1usize << n;
        if index >= dim {
            return Err(Error::Structural(format!(
                "basis index {index} outside {n}-qubit register"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector {
            num_qubits: n,
            amplitudes,
        })
    }

    pub fn from_basis_state(b: &BasisState) -> Result<Self> {
        Self::basis(b.len(), b.index())
    }

    /// Wraps raw amplitudes; the length must be a power of two. Normalization is not checked.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::Structural(format!(
                "{dim} amplitudes is not a power of two >= 2"
            )));
        }
        let n = dim.trailing_zeros() as usize;
        if n > MAX_STATE_QUBITS {
            return Err(Error::Capacity(format!("state vector width {n}")));
        }
        Ok(StateVector {
            num_qubits: n,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    /// Index of the single amplitude with modulus 1, if this is a basis state.
    pub fn as_basis_index(&self) -> Option<usize> {
        let hit = self
            .amplitudes
            .iter()
            .position(|a| (a.norm() - 1.0).abs() <= 1e-12)?;
        let rest: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != hit)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        (rest <= 1e-24).then_some(hit)
    }

    fn check_gate(&self, gate: &Gate) -> Result<()> {
        if gate.max_qubit() >= self.num_qubits {
            return Err(Error::Structural(format!(
                "gate `{gate}` references a qubit outside the {}-qubit state",
                self.num_qubits
            )));
        }
        Ok(())
    }

    /// Flips the target on every basis index whose control bits are all 1.
    /// Gates of any control count are applied by definition.
    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        #[cfg(feature = "parallel")]
        if self.num_qubits >= PARALLEL_MIN_QUBITS && rayon::current_num_threads() > 1 {
            return self.apply_parallel(gate);
        }
        self.apply_sequential(gate)
    }

    pub fn apply_sequential(&mut self, gate: &Gate) -> Result<()> {
        self.check_gate(gate)?;
        let half = gate.target().mask();
        let cm = gate.control_mask();
        for (block, chunk) in self.amplitudes.chunks_mut(2 * half).enumerate() {
            let base = block * 2 * half;
            let (lo, hi) = chunk.split_at_mut(half);
            for (j, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                if (base + j) & cm == cm {
                    std::mem::swap(a, b);
                }
            }
        }
        Ok(())
    }

    /// Rayon version of [`apply_sequential`](Self::apply_sequential); bitwise identical results.
    #[cfg(feature = "parallel")]
    pub fn apply_parallel(&mut self, gate: &Gate) -> Result<()> {
        self.check_gate(gate)?;
        let half = gate.target().mask();
        let cm = gate.control_mask();
        let blocks = self.amplitudes.len() / (2 * half);
        let swap_block = |base: usize, lo: &mut [Complex64], hi: &mut [Complex64]| {
            for (j, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                if (base + j) & cm == cm {
                    std::mem::swap(a, b);
                }
            }
        };
        const GRAIN: usize = 4096;
        if blocks >= 64 {
            self.amplitudes
                .par_chunks_mut(2 * half)
                .with_min_len((GRAIN / (2 * half)).max(1))
                .enumerate()
                .for_each(|(block, chunk)| {
                    let (lo, hi) = chunk.split_at_mut(half);
                    swap_block(block * 2 * half, lo, hi);
                });
        } else {
            for (block, chunk) in self.amplitudes.chunks_mut(2 * half).enumerate() {
                let base = block * 2 * half;
                let (lo, hi) = chunk.split_at_mut(half);
                lo.par_chunks_mut(GRAIN)
                    .zip(hi.par_chunks_mut(GRAIN))
                    .enumerate()
                    .for_each(|(k, (l, h))| swap_block(base + k * GRAIN, l, h));
            }
        }
        Ok(())
    }

    /// Runs every gate of `circuit` in order.
    pub fn run(&mut self, circuit: &Circuit, mode: ExecMode) -> Result<()> {
        if circuit.num_qubits() != self.num_qubits {
            return Err(Error::Structural(format!(
                "circuit width {} does not match state width {}",
                circuit.num_qubits(),
                self.num_qubits
            )));
        }
        circuit.check_mode(mode)?;
        circuit.gates().iter().try_for_each(|g| self.apply(g))
    }

    /// Samples a basis index with probability `|amp|²` and returns its bits.
    ///
    /// A basis state is returned directly and the seed is ignored.
    pub fn measure_all(&self, seed: u64) -> Result<BasisState> {
        let norm = self.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Numerical(format!(
                "state norm {norm} is not 1 within {NORM_TOLERANCE}"
            )));
        }
        if let Some(index) = self.as_basis_index() {
            return Ok(BasisState::from_index(index, self.num_qubits));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw: f64 = rng.gen::<f64>() * norm;
        let mut acc = 0.0;
        let mut last_nonzero = 0;
        for (i, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            if p > 0.0 {
                last_nonzero = i;
                acc += p;
                if draw < acc {
                    return Ok(BasisState::from_index(i, self.num_qubits));
                }
            }
        }
        Ok(BasisState::from_index(last_nonzero, self.num_qubits))
    }
}

/// `|0…0⟩` on `n` qubits.
pub fn new_state(n: usize) -> Result<StateVector> {
    StateVector::new(n)
}

/// Applies `gate` to `state` by definition (any control count).
pub fn apply_gate(mut state: StateVector, gate: &Gate) -> Result<StateVector> {
    state.apply(gate)?;
    Ok(state)
}

/// Classical fast path: propagates the bitstring through each gate.
/// Multi-controlled gates are applied by definition.
pub fn run_basis(circuit: &Circuit, input: &BasisState) -> Result<BasisState> {
    if input.len() != circuit.num_qubits() {
        return Err(Error::Structural(format!(
            "input has {} bits but the circuit has {} qubits",
            input.len(),
            circuit.num_qubits()
        )));
    }
    Ok(BasisState::from_index(
        circuit.apply_to_index(input.index()),
        circuit.num_qubits(),
    ))
}

/// Runs `circuit` on a fresh state vector prepared in `input`.
pub fn run_state(circuit: &Circuit, input: &BasisState, mode: ExecMode) -> Result<StateVector> {
    let mut sv = StateVector::from_basis_state(input)?;
    sv.run(circuit, mode)?;
    Ok(sv)
}
