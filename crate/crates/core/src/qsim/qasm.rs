//! OpenQASM 2.0 subset: one `q` register and `x`, `cx`, `ccx` statements.
//!
//! Export is canonical (single spaces, no space after commas, `\n` after
//! every line) so that export → import → export is byte-stable.

use std::fmt::Write as _;

use super::circuit::Circuit;
use super::gate::{Gate, QubitId};
use crate::error::{Error, Result};

const HEADER: &str = "OPENQASM 2.0;";

pub fn export(circuit: &Circuit) -> Result<String> {
    let mut out = String::new();
    writeln!(out, "{HEADER}").unwrap();
    writeln!(out, "qreg q[{}];", circuit.num_qubits()).unwrap();
    for g in circuit.gates() {
        if !g.is_native() {
            return Err(Error::Structural(format!(
                "`{g}` has no QASM-subset spelling; lower the circuit first"
            )));
        }
        writeln!(out, "{g};").unwrap();
    }
    Ok(out)
}

pub fn import(text: &str) -> Result<Circuit> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());

    match lines.next() {
        Some((_, l)) if l.trim() == HEADER => {}
        Some((n, l)) => return Err(Error::parse(n, 1, format!("expected `{HEADER}`, found `{}`", l.trim()))),
        None => return Err(Error::parse(1, 1, format!("missing `{HEADER}` header"))),
    }

    let (reg_line, reg) = lines
        .next()
        .ok_or_else(|| Error::parse(2, 1, "missing `qreg q[N];` declaration"))?;
    let width = parse_qreg(reg.trim()).ok_or_else(|| {
        Error::parse(reg_line, 1, format!("expected `qreg q[N];`, found `{}`", reg.trim()))
    })?;
    let mut circuit = Circuit::new(width).map_err(|e| Error::parse(reg_line, 1, e.to_string()))?;

    for (n, raw) in lines {
        let line = raw.trim();
        let col = raw.len() - raw.trim_start().len() + 1;
        let gate = parse_gate(line).map_err(|m| Error::parse(n, col, m))?;
        circuit
            .push(gate)
            .map_err(|e| Error::parse(n, col, e.to_string()))?;
    }
    Ok(circuit)
}

fn parse_qreg(line: &str) -> Option<usize> {
    let rest = line.strip_prefix("qreg")?;
    if !rest.starts_with(char::is_whitespace) {
        return None;
    }
    let body = rest.trim().strip_suffix(';')?.trim_end();
    parse_qubit(body).map(QubitId::index).filter(|&n| n > 0)
}

fn parse_qubit(arg: &str) -> Option<QubitId> {
    let inner = arg.trim().strip_prefix("q[")?.strip_suffix(']')?;
    if inner.is_empty() || !inner.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    inner.parse().ok().map(QubitId)
}

fn parse_gate(line: &str) -> Result<Gate, String> {
    let body = line
        .strip_suffix(';')
        .ok_or_else(|| format!("statement `{line}` is not terminated by `;`"))?;
    let (name, args) = body
        .split_once(char::is_whitespace)
        .ok_or_else(|| format!("unsupported statement `{line}`"))?;
    let arity = match name {
        "x" => 1,
        "cx" => 2,
        "ccx" => 3,
        other => return Err(format!("unsupported statement `{other}`")),
    };
    let qubits = args
        .split(',')
        .map(|a| parse_qubit(a).ok_or_else(|| format!("bad qubit argument `{}`", a.trim())))
        .collect::<Result<Vec<_>, _>>()?;
    if qubits.len() != arity {
        return Err(format!(
            "`{name}` takes {arity} qubit(s), got {}",
            qubits.len()
        ));
    }
    let (target, controls) = qubits.split_last().expect("arity >= 1");
    Gate::new(controls.iter().copied(), *target).map_err(|e| e.to_string())
}
