//! Lowering of k-controlled NOT gates into CCX/CX networks.
//!
//! The construction is a linear AND-chain over `k - 1` clean ancillas:
//!
//! ```text
//! CCX(c1, c2 -> a1)
//! CCX(a1, c3 -> a2) ... CCX(a_{k-2}, c_k -> a_{k-1})
//! CX(a_{k-1} -> target)
//! ... the k - 1 CCX gates again in reverse order
//! ```
//!
//! Ancillas must start at 0 and are returned to 0. Behavior on dirty
//! ancillas is outside the contract.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::par;
use crate::qsim::{run_basis, run_state, BasisState, Circuit, ExecMode, Gate, QubitId};

/// Largest control count accepted by [`verify_equivalence`].
pub const MAX_VERIFY_CONTROLS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionPlan {
    pub k: usize,
    pub ancillas_needed: usize,
    pub ancillas: Vec<QubitId>,
    pub gates: Vec<Gate>,
    /// Number of compute gates before the target flip.
    pub compute_prefix_len: usize,
}

impl DecompositionPlan {
    /// The single gate that writes the target.
    pub fn target_flip(&self) -> &Gate {
        &self.gates[self.compute_prefix_len]
    }

    /// Gates before the target flip, reversed, equal the gates after it.
    pub fn is_palindrome(&self) -> bool {
        let (compute, rest) = self.gates.split_at(self.compute_prefix_len);
        let uncompute = &rest[1..];
        compute.iter().rev().eq(uncompute.iter())
    }

    /// `(ccx, cx)` gate counts.
    pub fn gate_counts(&self) -> (usize, usize) {
        let ccx = self.gates.iter().filter(|g| g.num_controls() == 2).count();
        let cx = self.gates.iter().filter(|g| g.num_controls() == 1).count();
        (ccx, cx)
    }
}

pub const fn ancillas_needed(k: usize) -> usize {
    if k >= 3 {
        k - 1
    } else {
        0
    }
}

/// Builds the native gate sequence for an MCX on `controls` → `target`.
///
/// Gates with at most two controls are returned unchanged and use no ancillas.
/// Only the first `k - 1` entries of `ancillas` are used.
pub fn decompose_mcx(
    controls: &[QubitId],
    target: QubitId,
    ancillas: &[QubitId],
) -> Result<DecompositionPlan> {
    let k = controls.len();
    let needed = ancillas_needed(k);
    if ancillas.len() < needed {
        return Err(Error::Capacity(format!(
            "{k}-control gate needs {needed} ancillas, {} available",
            ancillas.len()
        )));
    }
    let used = &ancillas[..needed];

    let mut seen = BTreeSet::new();
    for q in controls.iter().chain(used).chain(std::iter::once(&target)) {
        if !seen.insert(*q) {
            return Err(Error::Structural(format!(
                "qubit {q} appears more than once among controls, ancillas and target"
            )));
        }
    }

    if k <= 2 {
        return Ok(DecompositionPlan {
            k,
            ancillas_needed: 0,
            ancillas: Vec::new(),
            gates: vec![Gate::new(controls.iter().copied(), target)?],
            compute_prefix_len: 0,
        });
    }

    let mut compute = Vec::with_capacity(k - 1);
    compute.push(Gate::new([controls[0], controls[1]], used[0])?);
    for i in 1..k - 1 {
        compute.push(Gate::new([used[i - 1], controls[i + 1]], used[i])?);
    }
    let flip = Gate::new([used[k - 2]], target)?;

    let mut gates = Vec::with_capacity(2 * (k - 1) + 1);
    gates.extend(compute.iter().cloned());
    gates.push(flip);
    gates.extend(compute.into_iter().rev());

    Ok(DecompositionPlan {
        k,
        ancillas_needed: needed,
        ancillas: used.to_vec(),
        gates,
        compute_prefix_len: k - 1,
    })
}

/// Lowers every gate with three or more controls using the circuit's ancilla register.
pub fn lower_circuit(circuit: &Circuit) -> Result<Circuit> {
    let pool = circuit
        .registers()
        .map(|r| r.ancillas.clone())
        .unwrap_or_default();
    lower_circuit_with_pool(circuit, &pool)
}

/// Lowers every gate with three or more controls, reusing `pool` for each one.
///
/// Reuse is sound because every plan returns its ancillas to 0.
pub fn lower_circuit_with_pool(circuit: &Circuit, pool: &[QubitId]) -> Result<Circuit> {
    let mut out = Circuit::new(circuit.num_qubits())?;
    for g in circuit.gates() {
        if g.is_native() {
            out.push(g.clone())?;
            continue;
        }
        let plan = decompose_mcx(g.controls(), g.target(), pool)?;
        for lowered in plan.gates {
            out.push(lowered)?;
        }
    }
    match circuit.registers() {
        Some(r) => out.with_registers(r.clone()),
        None => Ok(out),
    }
}

/// One `(controls, target)` basis input checked by [`verify_equivalence`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceCase {
    pub controls: Vec<bool>,
    pub target_in: bool,
    pub expected_target: bool,
    pub actual_target: bool,
    pub controls_preserved: bool,
    pub ancillas_clean: bool,
}

impl EquivalenceCase {
    pub fn passed(&self) -> bool {
        self.expected_target == self.actual_target && self.controls_preserved && self.ancillas_clean
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub k: usize,
    pub ancillas: usize,
    pub ccx_count: usize,
    pub cx_count: usize,
    pub cases: Vec<EquivalenceCase>,
}

impl EquivalenceReport {
    pub fn matches(&self) -> usize {
        self.cases.iter().filter(|c| c.passed()).count()
    }

    pub fn passed(&self) -> bool {
        self.matches() == self.cases.len()
    }

    pub fn first_counterexample(&self) -> Option<&EquivalenceCase> {
        self.cases.iter().find(|c| !c.passed())
    }
}

/// Test register for a `k`-control plan: controls `0..k`, target `k`,
/// ancillas `k+1..2k`.
pub fn verification_layout(k: usize) -> (Vec<QubitId>, QubitId, Vec<QubitId>) {
    let controls = (0..k).map(QubitId).collect();
    let target = QubitId(k);
    let ancillas = (k + 1..k + 1 + ancillas_needed(k)).map(QubitId).collect();
    (controls, target, ancillas)
}

/// Exhaustively compares the lowered plan with the logical MCX on all
/// `2^(k+1)` (controls, target) inputs with ancillas at 0.
pub fn verify_equivalence(k: usize) -> Result<EquivalenceReport> {
    if k > MAX_VERIFY_CONTROLS {
        return Err(Error::Capacity(format!(
            "equivalence sweep supports at most {MAX_VERIFY_CONTROLS} controls"
        )));
    }
    let (controls, target, ancillas) = verification_layout(k);
    let width = k + 1 + ancillas.len();
    let plan = decompose_mcx(&controls, target, &ancillas)?;
    let (ccx_count, cx_count) = plan.gate_counts();
    let lowered = Circuit::from_gates(width, plan.gates)?;
    let logical = Circuit::from_gates(width, [Gate::new(controls.iter().copied(), target)?])?;

    let cases = par::map_indices(1usize << (k + 1), |input| -> Result<EquivalenceCase> {
        // Bits 0..=k of `input` are (controls, target); ancilla bits stay 0.
        let start = BasisState::from_index(input, width);
        let expected = run_state(&logical, &start, ExecMode::Logical)?.measure_all(0)?;
        let actual = run_basis(&lowered, &start)?;
        Ok(EquivalenceCase {
            controls: controls.iter().map(|&q| start.get(q)).collect(),
            target_in: start.get(target),
            expected_target: expected.get(target),
            actual_target: actual.get(target),
            controls_preserved: controls.iter().all(|&q| actual.get(q) == start.get(q)),
            ancillas_clean: ancillas.iter().all(|&q| !actual.get(q)),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    Ok(EquivalenceReport {
        k,
        ancillas: plan.ancillas_needed,
        ccx_count,
        cx_count,
        cases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{as_unitary, RegisterMap};

    fn q(v: &[usize]) -> Vec<QubitId> {
        v.iter().copied().map(QubitId).collect()
    }

    #[test]
    fn small_gates_pass_through() {
        for k in 0..=2 {
            let plan = decompose_mcx(&q(&(0..k).collect::<Vec<_>>()), QubitId(5), &[]).unwrap();
            assert_eq!(plan.gates.len(), 1);
            assert_eq!(plan.ancillas_needed, 0);
            assert!(plan.is_palindrome());
        }
    }

    #[test]
    fn four_controls_use_three_ancillas() {
        let plan = decompose_mcx(&q(&[0, 1, 2, 3]), QubitId(7), &q(&[4, 5, 6])).unwrap();
        assert_eq!(plan.ancillas_needed, 3);
        assert_eq!(plan.gate_counts(), (6, 1));
        assert!(plan.is_palindrome());
        assert_eq!(plan.target_flip(), &Gate::cx(6, 7).unwrap());
    }

    #[test]
    fn three_controls_counts() {
        let plan = decompose_mcx(&q(&[0, 1, 2]), QubitId(3), &q(&[4, 5])).unwrap();
        assert_eq!(plan.ancillas_needed, 2);
        assert_eq!(plan.gate_counts(), (4, 1));
    }

    #[test]
    fn gate_count_law() {
        for k in 3..=10 {
            let (c, t, a) = verification_layout(k);
            let plan = decompose_mcx(&c, t, &a).unwrap();
            assert_eq!(plan.gate_counts(), (2 * (k - 1), 1));
            assert!(plan.is_palindrome());
            assert!(plan.gates.iter().all(Gate::is_native));
        }
    }

    #[test]
    fn insufficient_ancillas() {
        let err = decompose_mcx(&q(&[0, 1, 2, 3]), QubitId(7), &q(&[4, 5])).unwrap_err();
        assert!(matches!(err, Error::Capacity(_)));
    }

    #[test]
    fn overlapping_qubits() {
        let err = decompose_mcx(&q(&[0, 1, 2, 3]), QubitId(7), &q(&[4, 3, 6])).unwrap_err();
        assert!(matches!(err, Error::Structural(_)));
        let err = decompose_mcx(&q(&[0, 1, 2]), QubitId(4), &q(&[4, 5])).unwrap_err();
        assert!(matches!(err, Error::Structural(_)));
    }

    #[test]
    fn verify_examples() {
        let report = verify_equivalence(4).unwrap();
        assert!(report.passed());
        let all_ones = report
            .cases
            .iter()
            .find(|c| c.controls == [true; 4] && !c.target_in)
            .unwrap();
        assert!(all_ones.actual_target && all_ones.ancillas_clean);
        let partial = report
            .cases
            .iter()
            .find(|c| c.controls == [true, true, false, true] && !c.target_in)
            .unwrap();
        assert!(!partial.actual_target && partial.ancillas_clean);

        let report = verify_equivalence(5).unwrap();
        assert_eq!((report.matches(), report.cases.len()), (64, 64));
    }

    #[test]
    fn verify_cap() {
        assert!(matches!(verify_equivalence(7), Err(Error::Capacity(_))));
    }

    #[test]
    fn lowering_leaves_native_circuits_alone() {
        let c = Circuit::from_gates(
            3,
            [Gate::x(0), Gate::cx(0, 1).unwrap(), Gate::ccx(0, 1, 2).unwrap()],
        )
        .unwrap();
        assert_eq!(lower_circuit(&c).unwrap(), c);
    }

    #[test]
    fn lowering_with_register_pool() {
        let regs = RegisterMap::vehicle();
        let c = Circuit::from_gates(13, [Gate::mcx(&[0, 1, 2, 3], 7).unwrap()])
            .unwrap()
            .with_registers(regs)
            .unwrap();
        let lowered = lower_circuit(&c).unwrap();
        assert!(lowered.is_native());
        assert_eq!(lowered.len(), 7);
        let used: BTreeSet<usize> = lowered
            .gates()
            .iter()
            .flat_map(|g| g.qubits().map(QubitId::index).collect::<Vec<_>>())
            .collect();
        assert_eq!(used, [0, 1, 2, 3, 4, 5, 6, 7].into_iter().collect());
    }

    #[test]
    fn lowering_pool_too_small() {
        let c = Circuit::from_gates(8, [Gate::mcx(&[0, 1, 2, 3], 7).unwrap()]).unwrap();
        assert!(matches!(
            lower_circuit_with_pool(&c, &q(&[4, 5])),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn shared_pool_two_mcx_matches_logical_on_clean_subspace() {
        // q0..q3 controls, q7 and q8 targets, pool q4..q6; 9 qubits.
        let logical = Circuit::from_gates(
            9,
            [
                Gate::mcx(&[0, 1, 2, 3], 7).unwrap(),
                Gate::mcx(&[0, 1, 2, 7], 8).unwrap(),
            ],
        )
        .unwrap();
        let lowered = lower_circuit_with_pool(&logical, &q(&[4, 5, 6])).unwrap();
        assert!(lowered.is_native());
        let ul = as_unitary(&logical).unwrap();
        let ur = as_unitary(&lowered).unwrap();
        let ancilla_mask = 0b111_0000;
        for j in (0..1usize << 9).filter(|j| j & ancilla_mask == 0) {
            assert_eq!(ul.column(j), ur.column(j), "column {j}");
        }
    }
}
