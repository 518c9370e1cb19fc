use ndarray::Array2;
use num_complex::Complex64;

use super::circuit::{Circuit, ExecMode};
use super::state::StateVector;
use crate::error::{Error, Result};
use crate::par;

/// Largest register for which a dense matrix is built.
pub const MAX_DENSE_QUBITS: usize = 12;

/// Dense `2^n × 2^n` matrix whose column `j` is the circuit run on basis state `j`.
///
/// Multi-controlled gates are applied by definition.
pub fn as_unitary(circuit: &Circuit) -> Result<Array2<Complex64>> {
    let n = circuit.num_qubits();
    if n > MAX_DENSE_QUBITS {
        return Err(Error::Capacity(format!(
            "dense unitary of {n} qubits exceeds the {MAX_DENSE_QUBITS}-qubit cap"
        )));
    }
    let dim = 1usize << n;
    let columns = par::map_indices(dim, |j| -> Result<Vec<Complex64>> {
        let mut sv = StateVector::basis(n, j)?;
        sv.run(circuit, ExecMode::Logical)?;
        Ok(sv.amplitudes().to_vec())
    });
    let mut m = Array2::zeros((dim, dim));
    for (j, col) in columns.into_iter().enumerate() {
        for (i, a) in col?.into_iter().enumerate() {
            m[(i, j)] = a;
        }
    }
    Ok(m)
}

/// If `m` is a 0/1 permutation matrix, returns `p` with `m[(p[j], j)] == 1`.
pub fn permutation_of(m: &Array2<Complex64>) -> Option<Vec<usize>> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return None;
    }
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut perm = Vec::with_capacity(cols);
    let mut row_hit = vec![false; rows];
    for j in 0..cols {
        let mut found = None;
        for i in 0..rows {
            let v = m[(i, j)];
            if v == one {
                if found.is_some() || row_hit[i] {
                    return None;
                }
                found = Some(i);
                row_hit[i] = true;
            } else if v != zero {
                return None;
            }
        }
        perm.push(found?);
    }
    Some(perm)
}
