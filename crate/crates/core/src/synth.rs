//! Truth-table synthesis of the segment-per-row controller, and decoding of
//! its measured actuator qubits.
//!
//! Each row with a nonzero output becomes one segment: X on every input qubit
//! whose bit is 0, one input-controlled X per set output bit, then the same X
//! layer again. Output qubits must start at 0.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::decompose::{ancillas_needed, lower_circuit};
use crate::error::{Error, Result};
use crate::qsim::{run_basis, run_state, BasisState, Circuit, ExecMode, Gate, QubitId, RegisterMap};

const MAX_TABLE_INPUTS: usize = 16;
const MAX_TABLE_OUTPUTS: usize = 32;

/// Total Boolean function `{0,1}^inputs → {0,1}^outputs`.
///
/// Row `r` is indexed with input `j` at bit `j`; the stored word has output `j` at bit `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    inputs: usize,
    outputs: usize,
    rows: Vec<u32>,
}

impl TruthTable {
    pub fn new(inputs: usize, outputs: usize, rows: Vec<u32>) -> Result<Self> {
        if inputs == 0 || inputs > MAX_TABLE_INPUTS {
            return Err(Error::Capacity(format!("{inputs} table inputs")));
        }
        if outputs == 0 || outputs > MAX_TABLE_OUTPUTS {
            return Err(Error::Capacity(format!("{outputs} table outputs")));
        }
        if rows.len() != 1 << inputs {
            return Err(Error::Structural(format!(
                "{} rows given, {} required",
                rows.len(),
                1usize << inputs
            )));
        }
        if let Some(r) = rows.iter().find(|&&r| outputs < 32 && r >> outputs != 0) {
            return Err(Error::Structural(format!(
                "row output {r:#b} wider than {outputs} bits"
            )));
        }
        Ok(TruthTable {
            inputs,
            outputs,
            rows,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn row(&self, input: usize) -> u32 {
        self.rows[input]
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    /// Parses `<inputs bits> <outputs bits>` lines; `#` starts a comment.
    /// Character `j` of each field is bit `j`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut shape: Option<(usize, usize)> = None;
        let mut rows: Vec<Option<u32>> = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let ln = ln + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let (Some(inp), Some(out), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::parse(ln, 1, "expected `<input bits> <output bits>`"));
            };
            let (m, p) = *shape.get_or_insert((inp.len(), out.len()));
            if inp.len() != m || out.len() != p {
                return Err(Error::parse(ln, 1, format!("row width differs from {m} {p}")));
            }
            if m == 0 || m > MAX_TABLE_INPUTS || p == 0 || p > MAX_TABLE_OUTPUTS {
                return Err(Error::parse(ln, 1, format!("unsupported table shape {m}x{p}")));
            }
            if rows.is_empty() {
                rows = vec![None; 1 << m];
            }
            let input = bits_le(inp).map_err(|c| Error::parse(ln, c, "expected 0 or 1"))? as usize;
            let output = bits_le(out).map_err(|c| Error::parse(ln, inp.len() + 1 + c, "expected 0 or 1"))?;
            if rows[input].replace(output).is_some() {
                return Err(Error::parse(ln, 1, format!("input {inp} listed twice")));
            }
        }
        let Some((m, p)) = shape else {
            return Err(Error::parse(1, 1, "truth table has no rows"));
        };
        if let Some(missing) = rows.iter().position(Option::is_none) {
            return Err(Error::parse(
                text.lines().count().max(1),
                1,
                format!("input {} missing", format_bits(missing as u32, m)),
            ));
        }
        TruthTable::new(m, p, rows.into_iter().map(Option::unwrap).collect())
    }

    /// Text form accepted by [`TruthTable::parse`].
    pub fn to_text(&self) -> String {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                format!(
                    "{} {}\n",
                    format_bits(i as u32, self.inputs),
                    format_bits(r, self.outputs)
                )
            })
            .collect()
    }
}

fn bits_le(s: &str) -> std::result::Result<u32, usize> {
    s.chars().enumerate().try_fold(0u32, |acc, (i, c)| match c {
        '0' => Ok(acc),
        '1' => Ok(acc | 1 << i),
        _ => Err(i + 1),
    })
}

fn format_bits(word: u32, width: usize) -> String {
    (0..width)
        .map(|i| if word >> i & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Built-in vehicle controller.
///
/// Inputs are S1..S4 (front, back, left, right; 1 = clear). Outputs, in order,
/// are ML_A, ML_B, MR_A, MR_B, MU, ASK.
pub fn builtin_table() -> TruthTable {
    const ML_A: u32 = 1 << 0;
    const ML_B: u32 = 1 << 1;
    const MR_A: u32 = 1 << 2;
    const MR_B: u32 = 1 << 3;
    const MU: u32 = 1 << 4;
    const ASK: u32 = 1 << 5;
    let rows = (0u32..16)
        .map(|input| match input.count_ones() {
            0 => MU,
            1 => match SensorWord::from_index(input as usize) {
                w if w.front => ML_A | MR_A,
                w if w.back => ML_B | MR_B,
                w if w.left => MR_A,
                _ => ML_A,
            },
            _ => ASK,
        })
        .collect();
    TruthTable::new(4, 6, rows).expect("static table shape")
}

/// Qubits used by [`synthesize`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub inputs: Vec<QubitId>,
    pub outputs: Vec<QubitId>,
    pub ancillas: Vec<QubitId>,
}

impl Layout {
    /// Inputs `0..m`, ancillas next, outputs last.
    pub fn contiguous(inputs: usize, outputs: usize) -> Self {
        let a = ancillas_needed(inputs);
        Layout {
            inputs: (0..inputs).map(QubitId).collect(),
            ancillas: (inputs..inputs + a).map(QubitId).collect(),
            outputs: (inputs + a..inputs + a + outputs).map(QubitId).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.inputs
            .iter()
            .chain(&self.outputs)
            .chain(&self.ancillas)
            .map(|q| q.index() + 1)
            .max()
            .unwrap_or(0)
    }

    fn validate(&self, table: &TruthTable) -> Result<()> {
        if self.inputs.len() != table.inputs() || self.outputs.len() != table.outputs() {
            return Err(Error::Structural(format!(
                "layout has {} inputs and {} outputs, table needs {} and {}",
                self.inputs.len(),
                self.outputs.len(),
                table.inputs(),
                table.outputs()
            )));
        }
        let mut seen = BTreeSet::new();
        for q in self.inputs.iter().chain(&self.outputs).chain(&self.ancillas) {
            if !seen.insert(*q) {
                return Err(Error::Structural(format!("qubit {q} has two layout roles")));
            }
        }
        let needed = ancillas_needed(table.inputs());
        if self.ancillas.len() < needed {
            return Err(Error::Capacity(format!(
                "{needed} ancillas needed for lowering, {} in layout",
                self.ancillas.len()
            )));
        }
        Ok(())
    }
}

impl From<&RegisterMap> for Layout {
    fn from(r: &RegisterMap) -> Self {
        Layout {
            inputs: r.sensors.to_vec(),
            outputs: r.outputs().to_vec(),
            ancillas: r.ancillas.clone(),
        }
    }
}

/// One minterm of the controller: the gates that fire on exactly one input row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub row: usize,
    pub gates: Vec<Gate>,
}

/// Segments for every row with a nonzero output, in ascending row order.
pub fn segments(table: &TruthTable, layout: &Layout) -> Result<Vec<Segment>> {
    layout.validate(table)?;
    let mut out = Vec::new();
    for (row, &word) in table.rows().iter().enumerate() {
        if word == 0 {
            continue;
        }
        let wrap: Vec<Gate> = layout
            .inputs
            .iter()
            .enumerate()
            .filter(|&(j, _)| row >> j & 1 == 0)
            .map(|(_, q)| Gate::x(q.index()))
            .collect();
        let mut gates = wrap.clone();
        for (j, &target) in layout.outputs.iter().enumerate() {
            if word >> j & 1 == 1 {
                gates.push(Gate::new(layout.inputs.iter().copied(), target)?);
            }
        }
        gates.extend(wrap);
        out.push(Segment { row, gates });
    }
    Ok(out)
}

/// Joins segments into a logical (unlowered) circuit of the given width.
pub fn assemble(width: usize, segments: &[Segment]) -> Result<Circuit> {
    Circuit::from_gates(width, segments.iter().flat_map(|s| s.gates.iter().cloned()))
}

/// Synthesizes `table` onto `layout`. The result is logical: MCX gates are not lowered.
pub fn synthesize(table: &TruthTable, layout: &Layout) -> Result<Circuit> {
    assemble(layout.width(), &segments(table, layout)?)
}

/// Synthesizes onto the named controller register and attaches it.
pub fn synthesize_controller(table: &TruthTable, registers: &RegisterMap) -> Result<Circuit> {
    let width = registers.min_width();
    assemble(width, &segments(table, &Layout::from(registers))?)?.with_registers(registers.clone())
}

/// Two-qubit motor register value `|AB⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MotorState {
    /// `|00⟩`
    Stop,
    /// `|10⟩`
    Forward,
    /// `|01⟩`
    Backward,
}

impl MotorState {
    pub fn decode(a: bool, b: bool) -> Result<Self> {
        match (a, b) {
            (false, false) => Ok(MotorState::Stop),
            (true, false) => Ok(MotorState::Forward),
            (false, true) => Ok(MotorState::Backward),
            (true, true) => Err(Error::CorruptController(
                "motor qubits read |11⟩, which is not a motor state".into(),
            )),
        }
    }

    /// `(A, B)` bits.
    pub fn bits(self) -> (bool, bool) {
        match self {
            MotorState::Stop => (false, false),
            MotorState::Forward => (true, false),
            MotorState::Backward => (false, true),
        }
    }
}

/// Decoded actuator readout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ControlOutcome {
    pub ml: MotorState,
    pub mr: MotorState,
    pub mu: bool,
    pub ask: bool,
}

impl ControlOutcome {
    pub const OFF: ControlOutcome = ControlOutcome {
        ml: MotorState::Stop,
        mr: MotorState::Stop,
        mu: false,
        ask: false,
    };

    /// Exactly one of: propeller, ask, some wheel turning.
    pub fn is_single_decision(&self) -> bool {
        let moving = (self.ml, self.mr) != (MotorState::Stop, MotorState::Stop);
        usize::from(self.mu) + usize::from(self.ask) + usize::from(moving) == 1
    }

    /// Six characters, left to right: ASK, MU, MR_B, MR_A, ML_B, ML_A.
    pub fn format_table_iv(&self) -> String {
        let (ml_a, ml_b) = self.ml.bits();
        let (mr_a, mr_b) = self.mr.bits();
        [self.ask, self.mu, mr_b, mr_a, ml_b, ml_a]
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }

    /// Inverse of [`format_table_iv`](Self::format_table_iv).
    pub fn parse_table_iv(s: &str) -> Result<Self> {
        let bits: Vec<bool> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(()),
            })
            .collect::<std::result::Result<_, _>>()
            .ok()
            .filter(|b: &Vec<bool>| b.len() == 6)
            .ok_or_else(|| Error::parse(1, 1, format!("`{s}` is not a 6-bit actuator string")))?;
        let [ask, mu, mr_b, mr_a, ml_b, ml_a] = bits[..] else {
            unreachable!()
        };
        Ok(ControlOutcome {
            ml: MotorState::decode(ml_a, ml_b)?,
            mr: MotorState::decode(mr_a, mr_b)?,
            mu,
            ask,
        })
    }
}

impl fmt::Display for ControlOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format_table_iv())
    }
}

/// Body-frame direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "F")]
    Front,
    #[serde(rename = "B")]
    Back,
    #[serde(rename = "L")]
    Left,
    #[serde(rename = "R")]
    Right,
}

impl Direction {
    /// Sensor order S1..S4.
    pub const ALL: [Direction; 4] = [
        Direction::Front,
        Direction::Back,
        Direction::Left,
        Direction::Right,
    ];

    pub fn letter(self) -> char {
        match self {
            Direction::Front => 'F',
            Direction::Back => 'B',
            Direction::Left => 'L',
            Direction::Right => 'R',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'F' => Some(Direction::Front),
            'B' => Some(Direction::Back),
            'L' => Some(Direction::Left),
            'R' => Some(Direction::Right),
            _ => None,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Direction::from_letter(c),
            _ => None,
        }
        .ok_or_else(|| Error::parse(1, 1, format!("`{s}` is not one of F, B, L, R")))
    }
}

/// Four IR readings; `true` means clear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SensorWord {
    pub front: bool,
    pub back: bool,
    pub left: bool,
    pub right: bool,
}

impl SensorWord {
    /// Bit 0 is the front sensor, bit 3 the right.
    pub fn from_index(index: usize) -> Self {
        SensorWord {
            front: index & 1 != 0,
            back: index & 2 != 0,
            left: index & 4 != 0,
            right: index & 8 != 0,
        }
    }

    pub fn index(self) -> usize {
        Direction::ALL
            .iter()
            .enumerate()
            .map(|(i, &d)| usize::from(self.get(d)) << i)
            .sum()
    }

    pub fn all() -> impl Iterator<Item = SensorWord> {
        (0..16).map(SensorWord::from_index)
    }

    pub fn only(d: Direction) -> Self {
        let mut w = SensorWord::default();
        w.set(d, true);
        w
    }

    pub fn get(self, d: Direction) -> bool {
        match d {
            Direction::Front => self.front,
            Direction::Back => self.back,
            Direction::Left => self.left,
            Direction::Right => self.right,
        }
    }

    pub fn set(&mut self, d: Direction, clear: bool) {
        match d {
            Direction::Front => self.front = clear,
            Direction::Back => self.back = clear,
            Direction::Left => self.left = clear,
            Direction::Right => self.right = clear,
        }
    }

    pub fn popcount(self) -> u32 {
        self.index().count_ones()
    }

    pub fn clear_directions(self) -> Vec<Direction> {
        Direction::ALL.into_iter().filter(|&d| self.get(d)).collect()
    }
}

impl fmt::Display for SensorWord {
    /// `S1S2S3S4`, e.g. `1000` for front clear.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in Direction::ALL {
            f.write_str(if self.get(d) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for SensorWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() != 4 {
            return Err(Error::parse(1, 1, format!("sensor word `{s}` is not 4 bits")));
        }
        let v = bits_le(s).map_err(|c| Error::parse(1, c, "expected 0 or 1"))?;
        Ok(SensorWord::from_index(v as usize))
    }
}

/// Runs `circuit` (logical or lowered) on the given sensors with every other
/// qubit at 0 and decodes the actuator qubits.
pub fn evaluate(circuit: &Circuit, sensors: SensorWord) -> Result<ControlOutcome> {
    let regs = circuit.registers().ok_or_else(|| {
        Error::Structural("controller circuit has no register map attached".into())
    })?;
    let mut input = BasisState::zeros(circuit.num_qubits());
    for (d, &q) in Direction::ALL.iter().zip(&regs.sensors) {
        input.set(q, sensors.get(*d));
    }
    decode(regs, &run_basis(circuit, &input)?)
}

/// Reads the actuator roles of `regs` out of a measured register.
pub fn decode(regs: &RegisterMap, out: &BasisState) -> Result<ControlOutcome> {
    Ok(ControlOutcome {
        ml: MotorState::decode(out.get(regs.ml[0]), out.get(regs.ml[1]))?,
        mr: MotorState::decode(out.get(regs.mr[0]), out.get(regs.mr[1]))?,
        mu: out.get(regs.mu),
        ask: out.get(regs.ask),
    })
}

/// A lowered controller circuit with an evaluation counter.
#[derive(Debug)]
pub struct Controller {
    circuit: Circuit,
    evaluations: AtomicU64,
}

impl Controller {
    /// Synthesizes and lowers the built-in table on the 13-qubit vehicle register.
    pub fn builtin() -> Result<Self> {
        let logical = synthesize_controller(&builtin_table(), &RegisterMap::vehicle())?;
        Controller::from_circuit(lower_circuit(&logical)?)
    }

    pub fn from_circuit(circuit: Circuit) -> Result<Self> {
        if circuit.registers().is_none() {
            return Err(Error::Structural(
                "controller circuit has no register map attached".into(),
            ));
        }
        Ok(Controller {
            circuit,
            evaluations: AtomicU64::new(0),
        })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn evaluate(&self, sensors: SensorWord) -> Result<ControlOutcome> {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        evaluate(&self.circuit, sensors)
    }

    /// Same as [`evaluate`](Self::evaluate) but executes the full state vector and
    /// samples it with `seed`. Agrees with the basis path for every sensor word.
    pub fn evaluate_state_vector(&self, sensors: SensorWord, seed: u64) -> Result<ControlOutcome> {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        let regs = self.circuit.registers().expect("checked at construction");
        let mut input = BasisState::zeros(self.circuit.num_qubits());
        for (d, &q) in Direction::ALL.iter().zip(&regs.sensors) {
            input.set(q, sensors.get(*d));
        }
        let state = run_state(&self.circuit, &input, ExecMode::Logical)?;
        decode(regs, &state.measure_all(seed)?)
    }

    /// Number of circuit runs so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }
}

/// Published simulation results: `(S1S2S3S4, ASK MU MR_B MR_A ML_B ML_A)`, in the published row order.
pub const REFERENCE_OUTPUTS: [(&str, &str); 16] = [
    ("0000", "010000"),
    ("0001", "000001"),
    ("0010", "000100"),
    ("0100", "001010"),
    ("1000", "000101"),
    ("1100", "100000"),
    ("1010", "100000"),
    ("1001", "100000"),
    ("0101", "100000"),
    ("0110", "100000"),
    ("0011", "100000"),
    ("1110", "100000"),
    ("1101", "100000"),
    ("1011", "100000"),
    ("0111", "100000"),
    ("1111", "100000"),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifyRow {
    pub input: String,
    pub expected: String,
    pub computed: String,
    pub pass: bool,
}

/// Evaluates `circuit` on every reference row. An evaluation error counts as a failure
/// and is reported in `computed`.
pub fn verify_reference(circuit: &Circuit) -> Vec<VerifyRow> {
    REFERENCE_OUTPUTS
        .iter()
        .map(|&(input, expected)| {
            let sensors: SensorWord = input.parse().expect("static sensor word");
            let computed = match evaluate(circuit, sensors) {
                Ok(o) => o.format_table_iv(),
                Err(e) => format!("error: {e}"),
            };
            VerifyRow {
                input: input.to_string(),
                expected: expected.to_string(),
                pass: computed == expected,
                computed,
            }
        })
        .collect()
}
