//! `qbot`: verify, decompose, simulate, run, serve and export the vehicle controller.
//!
//! Exit codes: 0 success, 1 verification or validation failure, 2 input or parse error.

use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qbot_core::decompose::{decompose_mcx, lower_circuit, verification_layout, verify_equivalence};
use qbot_core::gridworld::load_map;
use qbot_core::qsim::{qasm, run_basis, BasisState, Circuit, RegisterMap};
use qbot_core::session::{
    read_trace, replay, serve, write_trace, AskPolicy, Backend, Episode, EpisodeConfig, PORT_ENV,
};
use qbot_core::synth::{
    assemble, builtin_table, decode, segments, synthesize_controller, verify_reference,
    Controller, Direction, Layout, SensorWord, TruthTable,
};
use qbot_core::Error;

#[derive(Parser)]
#[command(name = "qbot", version, about = "Quantum-circuit controller for an obstacle-avoiding vehicle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Basis,
    Statevector,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize and lower the built-in controller, then check all 16 reference rows.
    Verify {
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Fault injection: drop the segment with this index before lowering.
        #[arg(long, value_name = "INDEX")]
        omit_segment: Option<usize>,
    },
    /// Lower a k-controlled NOT into CCX/CX gates over k-1 ancillas.
    Decompose {
        #[arg(long, value_name = "K")]
        controls: usize,
        /// Write the lowered plan as QASM.
        #[arg(long, value_name = "FILE")]
        emit: Option<PathBuf>,
        /// Exhaustively compare the plan with the logical gate.
        #[arg(long)]
        verify: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Run a QASM-subset circuit on one basis input.
    Sim {
        #[arg(long, value_name = "FILE")]
        circuit: PathBuf,
        /// Input bits in register order (first character is q[0]).
        #[arg(long, value_name = "BITS", conflicts_with = "sensors", required_unless_present = "sensors")]
        input: Option<String>,
        /// Sensor word S1S2S3S4; other qubits start at 0. Needs --registers.
        #[arg(long, value_name = "SSSS", requires = "registers")]
        sensors: Option<String>,
        /// Register-map JSON sidecar; enables the actuator readout.
        #[arg(long, value_name = "FILE")]
        registers: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Run one headless episode on a map.
    Run {
        #[arg(long, value_name = "FILE")]
        map: PathBuf,
        /// first-clear or script:FBLR...
        #[arg(long, default_value = "first-clear")]
        policy: String,
        #[arg(long, default_value_t = qbot_core::session::DEFAULT_MAX_STEPS)]
        max_steps: usize,
        /// Write the JSONL trace here.
        #[arg(long, value_name = "OUT")]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "basis")]
        backend: BackendArg,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Check a JSONL trace against a freshly synthesized controller.
    Replay {
        #[arg(long, value_name = "FILE")]
        trace: PathBuf,
        /// Also check sensing, occupancy and goal entry against this map.
        #[arg(long, value_name = "FILE")]
        map: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Serve the live episode protocol (newline-delimited JSON over TCP).
    Serve {
        #[arg(long, env = PORT_ENV, default_value_t = 7878)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Write the lowered controller circuit as QASM.
    Export {
        /// Output file; standard output when omitted.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Also write the register-map JSON sidecar.
        #[arg(long, value_name = "FILE")]
        registers: Option<PathBuf>,
        /// Synthesize this 4-in/6-out truth table instead of the built-in one.
        #[arg(long, value_name = "FILE")]
        table: Option<PathBuf>,
    },
}

/// Command failure mapped to an exit code.
enum Failure {
    /// Exit 1.
    Check(String),
    /// Exit 2.
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::CorruptController(_) | Error::Contract(_) | Error::Numerical(_) => {
                Failure::Check(e.to_string())
            }
            _ => Failure::Input(e.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> CmdResult {
    fs::write(path, contents).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify {
            format,
            omit_segment,
        } => cmd_verify(format, omit_segment),
        Command::Decompose {
            controls,
            emit,
            verify,
            format,
        } => cmd_decompose(controls, emit.as_deref(), verify, format),
        Command::Sim {
            circuit,
            input,
            sensors,
            registers,
            format,
        } => cmd_sim(&circuit, input, sensors, registers.as_deref(), format),
        Command::Run {
            map,
            policy,
            max_steps,
            trace,
            seed,
            backend,
            format,
        } => cmd_run(&map, &policy, max_steps, trace.as_deref(), seed, backend, format),
        Command::Replay { trace, map, format } => cmd_replay(&trace, map.as_deref(), format),
        Command::Serve { port, host } => cmd_serve(&host, port),
        Command::Export {
            out,
            registers,
            table,
        } => cmd_export(out.as_deref(), registers.as_deref(), table.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("qbot: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("qbot: {msg}");
            ExitCode::from(2)
        }
    }
}

fn cmd_verify(format: Format, omit_segment: Option<usize>) -> CmdResult {
    let regs = RegisterMap::vehicle();
    let logical = match omit_segment {
        None => synthesize_controller(&builtin_table(), &regs)?,
        Some(i) => {
            let mut segs = segments(&builtin_table(), &Layout::from(&regs))?;
            if i >= segs.len() {
                return Err(Failure::Input(format!(
                    "segment {i} out of range (0..{})",
                    segs.len()
                )));
            }
            segs.remove(i);
            assemble(regs.min_width(), &segs)?.with_registers(regs)?
        }
    };
    let lowered = lower_circuit(&logical)?;
    let rows = verify_reference(&lowered);
    let passed = rows.iter().filter(|r| r.pass).count();

    match format {
        Format::Json => print_json(&rows),
        Format::Text => {
            println!("{:<8} {:<9} {:<9} result", "input", "expected", "computed");
            for r in &rows {
                println!(
                    "|{}⟩  {:<9} {:<9} {}",
                    r.input,
                    r.expected,
                    r.computed,
                    if r.pass { "PASS" } else { "FAIL" }
                );
            }
            println!("{passed}/{} PASS", rows.len());
        }
    }
    if passed == rows.len() {
        Ok(())
    } else {
        Err(Failure::Check(format!("{} of {} rows failed", rows.len() - passed, rows.len())))
    }
}

#[derive(Serialize)]
struct DecomposeSummary {
    controls: usize,
    ancillas: usize,
    ccx: usize,
    cx: usize,
    gates: usize,
    palindrome: bool,
}

#[derive(Serialize)]
struct CaseRow {
    controls: String,
    target_in: u8,
    expected: u8,
    actual: u8,
    ancillas_clean: bool,
    pass: bool,
}

fn cmd_decompose(k: usize, emit: Option<&Path>, verify: bool, format: Format) -> CmdResult {
    let (controls, target, ancillas) = verification_layout(k);
    let width = k + 1 + ancillas.len();
    let plan = decompose_mcx(&controls, target, &ancillas)?;
    let (ccx, cx) = plan.gate_counts();
    let summary = DecomposeSummary {
        controls: k,
        ancillas: plan.ancillas_needed,
        ccx,
        cx,
        gates: plan.gates.len(),
        palindrome: plan.is_palindrome(),
    };
    if let Some(path) = emit {
        let circuit = Circuit::from_gates(width, plan.gates.iter().cloned())?;
        write(path, &qasm::export(&circuit)?)?;
    }

    let report = if verify { Some(verify_equivalence(k)?) } else { None };
    let rows: Vec<CaseRow> = report
        .iter()
        .flat_map(|r| &r.cases)
        .map(|c| CaseRow {
            controls: c.controls.iter().map(|&b| if b { '1' } else { '0' }).collect(),
            target_in: c.target_in.into(),
            expected: c.expected_target.into(),
            actual: c.actual_target.into(),
            ancillas_clean: c.ancillas_clean,
            pass: c.passed(),
        })
        .collect();

    match format {
        Format::Json => print_json(&serde_json::json!({ "plan": summary, "cases": rows })),
        Format::Text => {
            println!(
                "{k}-control NOT: {} ancillas, {ccx} CCX + {cx} CX ({} gates)",
                summary.ancillas, summary.gates
            );
            if report.is_some() {
                println!("{:<8} {:<3} {:<8} {:<6} {:<8} result", "controls", "t", "expected", "actual", "ancillas");
                for r in &rows {
                    println!(
                        "{:<8} {:<3} {:<8} {:<6} {:<8} {}",
                        r.controls,
                        r.target_in,
                        r.expected,
                        r.actual,
                        if r.ancillas_clean { "clean" } else { "DIRTY" },
                        if r.pass { "PASS" } else { "FAIL" }
                    );
                }
            }
        }
    }
    if let Some(r) = report {
        if format == Format::Text {
            println!("{}/{} PASS", r.matches(), r.cases.len());
        }
        if !r.passed() {
            return Err(Failure::Check(format!(
                "first counterexample: {:?}",
                r.first_counterexample()
            )));
        }
    }
    Ok(())
}

fn load_registers(path: &Path) -> Result<RegisterMap, Failure> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn cmd_sim(
    circuit_path: &Path,
    input: Option<String>,
    sensors: Option<String>,
    registers: Option<&Path>,
    format: Format,
) -> CmdResult {
    let mut circuit = qasm::import(&read(circuit_path)?)
        .map_err(|e| Failure::Input(format!("{}: {e}", circuit_path.display())))?;
    let regs = registers.map(load_registers).transpose()?;
    if let Some(r) = &regs {
        circuit = circuit.with_registers(r.clone())?;
    }
    let start = match (input, sensors) {
        (Some(bits), _) => BasisState::parse(&bits)?,
        (None, Some(word)) => {
            let word: SensorWord = word.parse()?;
            let r = regs.as_ref().expect("clap requires --registers");
            let mut b = BasisState::zeros(circuit.num_qubits());
            for (d, &q) in Direction::ALL.iter().zip(&r.sensors) {
                b.set(q, word.get(*d));
            }
            b
        }
        (None, None) => unreachable!("clap requires one of --input/--sensors"),
    };
    let out = run_basis(&circuit, &start)?;
    let actuators = regs
        .as_ref()
        .map(|r| decode(r, &out).map(|o| o.format_table_iv()))
        .transpose()?;
    match format {
        Format::Json => print_json(&serde_json::json!({
            "input": start.to_string(),
            "output": out.to_string(),
            "actuators": actuators,
        })),
        Format::Text => {
            println!("{out}");
            if let Some(a) = actuators {
                println!("actuators {a}");
            }
        }
    }
    Ok(())
}

fn cmd_run(
    map_path: &Path,
    policy: &str,
    max_steps: usize,
    trace_out: Option<&Path>,
    seed: u64,
    backend: BackendArg,
    format: Format,
) -> CmdResult {
    let policy: AskPolicy = policy.parse()?;
    if policy == AskPolicy::Interactive {
        return Err(Failure::Input(
            "interactive play goes through `serve`; use first-clear or script:...".into(),
        ));
    }
    let mut config = EpisodeConfig::new(read(map_path)?, policy);
    config.max_steps = max_steps;
    config.seed = seed;
    config.backend = match backend {
        BackendArg::Basis => Backend::Basis,
        BackendArg::Statevector => Backend::StateVector,
    };
    let mut episode = Episode::start(config)
        .map_err(|e| Failure::from(e).with_context(&map_path.display().to_string()))?;
    let trace = episode.run()?;
    if let Some(path) = trace_out {
        write(path, &write_trace(&trace.records))?;
    }
    let status = trace
        .terminal
        .map(|t| t.to_string())
        .unwrap_or_else(|| "RUNNING".into());
    match format {
        Format::Json => print_json(&serde_json::json!({
            "records": trace.records,
            "terminal": trace.terminal,
        })),
        Format::Text => {
            for r in &trace.records {
                let choice = r.ask_choice.map(|d| format!(" (asked, chose {d})")).unwrap_or_default();
                println!(
                    "{:>4} ({},{}) {:?}  sensors {}  output {}  {}{choice}",
                    r.step, r.pose.x, r.pose.y, r.pose.heading, r.sensors, r.output, r.action
                );
            }
            println!("{status} after {} steps", trace.records.len());
        }
    }
    Ok(())
}

impl Failure {
    fn with_context(self, ctx: &str) -> Self {
        match self {
            Failure::Check(m) => Failure::Check(format!("{ctx}: {m}")),
            Failure::Input(m) => Failure::Input(format!("{ctx}: {m}")),
        }
    }
}

fn cmd_replay(trace_path: &Path, map_path: Option<&Path>, format: Format) -> CmdResult {
    let records = read_trace(&read(trace_path)?)
        .map_err(|e| Failure::Input(format!("{}: {e}", trace_path.display())))?;
    let world = map_path.map(|p| read(p).and_then(|t| Ok(load_map(&t)?))).transpose()?;
    let controller = Controller::builtin()?;
    let poses = replay(&records, &controller, world.as_ref().map(|(m, p)| (m, *p)))
        .map_err(|e| Failure::Check(format!("{}: {e}", trace_path.display())))?;
    match format {
        Format::Json => print_json(&serde_json::json!({ "records": records.len(), "poses": poses })),
        Format::Text => println!("{} records valid; {} poses reconstructed", records.len(), poses.len()),
    }
    Ok(())
}

fn cmd_serve(host: &str, port: u16) -> CmdResult {
    let controller = Arc::new(Controller::builtin()?);
    let listener = TcpListener::bind((host, port))
        .map_err(|e| Failure::Input(format!("bind {host}:{port}: {e}")))?;
    eprintln!(
        "qbot: serving on {}",
        listener.local_addr().map(|a| a.to_string()).unwrap_or_default()
    );
    serve(listener, controller).map_err(|e| Failure::Input(e.to_string()))
}

fn cmd_export(out: Option<&Path>, registers: Option<&Path>, table: Option<&Path>) -> CmdResult {
    let table = match table {
        Some(p) => TruthTable::parse(&read(p)?)
            .map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?,
        None => builtin_table(),
    };
    let regs = RegisterMap::vehicle();
    let lowered = lower_circuit(&synthesize_controller(&table, &regs)?)?;
    let text = qasm::export(&lowered)?;
    match out {
        Some(p) => write(p, &text)?,
        None => print!("{text}"),
    }
    if let Some(p) = registers {
        let json = serde_json::to_string_pretty(&regs).expect("serializable");
        write(p, &format!("{json}\n"))?;
    }
    Ok(())
}
