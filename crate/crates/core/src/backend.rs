//! The execution contract shared by the MPS and dense backends.
//!
//! A [`Simulator`] receives gates as matrices; [`Executor`] is the gate
//! visitor that maps IR instructions onto those calls and records which
//! qubits are measured. [`execute`] runs a flattened program on the backend
//! selected by a [`BackendConfig`] and fills a [`QubitBuffer`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dense::{self, DenseState};
use crate::gates;
use crate::ir::{GateVisitor, Instruction, IrError, QubitBuffer};
use crate::mps::{MpsState, TruncationPolicy};
use crate::pauli::PauliString;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("a register needs at least one qubit")]
    EmptyRegister,
    #[error("qubit {qubit} is out of range for {n} qubit(s)")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("gate matrix is not unitary")]
    NonUnitary,
    #[error("site {site} has no right neighbour")]
    RightBoundary { site: usize },
    #[error("two-qubit gate applied twice to qubit {qubit}")]
    RepeatedQubit { qubit: usize },
    #[error("SVD did not converge")]
    SvdFailed,
    #[error("expected length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("{n} qubits exceed the dense simulator cap of {cap}")]
    TooManyQubits { n: usize, cap: usize },
    #[error("gate on qubit {qubit} after it was measured")]
    GateAfterMeasure { qubit: usize },
    #[error(transparent)]
    Ir(#[from] IrError),
}

/// Anything that can evolve a pure state gate by gate.
pub trait Simulator {
    fn num_qubits(&self) -> usize;
    fn apply_one(&mut self, gate: &Matrix2<C64>, q: usize) -> Result<(), SimError>;
    /// `gate` acts on `|q1 q2>`, `q1` being its first qubit.
    fn apply_two(&mut self, gate: &Matrix4<C64>, q1: usize, q2: usize) -> Result<(), SimError>;
    fn expectation(&self, pauli: &PauliString) -> Result<f64, SimError>;
    fn max_bond_seen(&self) -> usize;
    fn peak_memory_bytes(&self) -> u64;
    fn trunc_error_sq(&self) -> f64;
}

/// Qubit-by-qubit access to the output distribution: `branches` returns the
/// unnormalized weight of each value of `site` given the prefix in `cursor`.
pub trait SequentialSampler {
    type Cursor;

    fn num_sites(&self) -> usize;
    fn start(&self) -> Self::Cursor;
    fn branches(&self, cursor: &Self::Cursor, site: usize) -> [(f64, Self::Cursor); 2];
}

/// Draws `shots` bitstrings (character `k` = qubit `k`), one uniform variate
/// per qubit per shot, so any two samplers with the same distribution and
/// seed produce the same counts.
pub fn sample_counts<S: SequentialSampler>(
    sampler: &S,
    shots: usize,
    seed: u64,
) -> BTreeMap<String, u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = BTreeMap::new();
    let n = sampler.num_sites();
    let mut bits = String::with_capacity(n);
    for _ in 0..shots {
        bits.clear();
        let mut cursor = sampler.start();
        for site in 0..n {
            let [(w0, c0), (w1, c1)] = sampler.branches(&cursor, site);
            let r: f64 = rng.random();
            let total = w0 + w1;
            let p0 = if total > 0.0 { w0 / total } else { 0.5 };
            if r < p0 {
                bits.push('0');
                cursor = c0;
            } else {
                bits.push('1');
                cursor = c1;
            }
        }
        *counts.entry(bits.clone()).or_insert(0) += 1;
    }
    counts
}

/// Visitor that drives a [`Simulator`] and collects terminal measurements.
pub struct Executor<'a, S: Simulator> {
    sim: &'a mut S,
    measured: Vec<usize>,
}

impl<'a, S: Simulator> Executor<'a, S> {
    pub fn new(sim: &'a mut S) -> Self {
        Executor { sim, measured: Vec::new() }
    }

    /// Measured qubits in program order.
    pub fn measured(&self) -> &[usize] {
        &self.measured
    }

    pub fn into_measured(self) -> Vec<usize> {
        self.measured
    }

    pub fn run(&mut self, program: &[Instruction]) -> Result<(), SimError> {
        for instr in program {
            if instr.is_unitary() {
                if let Some(&q) = instr.qubits.iter().find(|q| self.measured.contains(q)) {
                    return Err(SimError::GateAfterMeasure { qubit: q });
                }
            }
            if instr.params.iter().any(|p| p.value().is_none()) {
                let name = match &instr.params[0] {
                    crate::ir::Param::Named(n) => n.clone(),
                    crate::ir::Param::Value(_) => unreachable!(),
                };
                return Err(IrError::UnboundParameter { name }.into());
            }
            instr.accept(self)?;
        }
        Ok(())
    }

    fn one(&mut self, q: usize, g: Matrix2<C64>) -> Result<(), SimError> {
        self.sim.apply_one(&g, q)
    }

    fn two(&mut self, q1: usize, q2: usize, g: Matrix4<C64>) -> Result<(), SimError> {
        self.sim.apply_two(&g, q1, q2)
    }
}

impl<S: Simulator> GateVisitor for Executor<'_, S> {
    type Output = Result<(), SimError>;

    fn visit_h(&mut self, q: usize) -> Self::Output {
        self.one(q, gates::hadamard())
    }
    fn visit_x(&mut self, q: usize) -> Self::Output {
        self.one(q, gates::pauli_x())
    }
    fn visit_y(&mut self, q: usize) -> Self::Output {
        self.one(q, gates::pauli_y())
    }
    fn visit_z(&mut self, q: usize) -> Self::Output {
        self.one(q, gates::pauli_z())
    }
    fn visit_rx(&mut self, q: usize, theta: f64) -> Self::Output {
        self.one(q, gates::rx(theta))
    }
    fn visit_ry(&mut self, q: usize, theta: f64) -> Self::Output {
        self.one(q, gates::ry(theta))
    }
    fn visit_rz(&mut self, q: usize, theta: f64) -> Self::Output {
        self.one(q, gates::rz(theta))
    }
    fn visit_cnot(&mut self, control: usize, target: usize) -> Self::Output {
        self.two(control, target, gates::cnot())
    }
    fn visit_cz(&mut self, q1: usize, q2: usize) -> Self::Output {
        self.two(q1, q2, gates::cz())
    }
    fn visit_swap(&mut self, q1: usize, q2: usize) -> Self::Output {
        self.two(q1, q2, gates::swap())
    }
    fn visit_measure(&mut self, q: usize, _creg: Option<usize>) -> Self::Output {
        let n = self.sim.num_qubits();
        if q >= n {
            return Err(SimError::QubitOutOfRange { qubit: q, n });
        }
        self.measured.push(q);
        Ok(())
    }
    fn visit_identity(&mut self, q: usize) -> Self::Output {
        self.one(q, gates::identity())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mps,
    Dense,
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mps" => Ok(BackendKind::Mps),
            "dense" => Ok(BackendKind::Dense),
            other => Err(format!("unknown backend `{other}` (expected mps or dense)")),
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Mps => "mps",
            BackendKind::Dense => "dense",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Ignored by the dense backend.
    pub truncation: TruncationPolicy,
    pub shots: usize,
    pub seed: u64,
    pub oracle_qubit_cap: usize,
}

impl BackendConfig {
    pub fn new(kind: BackendKind) -> Self {
        BackendConfig {
            kind,
            truncation: TruncationPolicy::default(),
            shots: 1024,
            seed: 0,
            oracle_qubit_cap: dense::DEFAULT_QUBIT_CAP,
        }
    }

    pub fn mps(truncation: TruncationPolicy) -> Self {
        BackendConfig { truncation, ..Self::new(BackendKind::Mps) }
    }

    pub fn dense() -> Self {
        Self::new(BackendKind::Dense)
    }

    pub fn with_shots(mut self, shots: usize, seed: u64) -> Self {
        self.shots = shots;
        self.seed = seed;
        self
    }
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self::new(BackendKind::Mps)
    }
}

/// Result of one execution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub counts: BTreeMap<String, u64>,
    pub max_bond_seen: usize,
    pub memory_estimate_bytes: u64,
    pub trunc_error_sq: f64,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// A state from either backend.
#[derive(Debug, Clone)]
pub enum State {
    Mps(MpsState),
    Dense(DenseState),
}

impl State {
    pub fn new(n: usize, config: &BackendConfig) -> Result<Self, SimError> {
        Ok(match config.kind {
            BackendKind::Mps => State::Mps(MpsState::with_policy(n, config.truncation)?),
            BackendKind::Dense => State::Dense(DenseState::with_cap(n, config.oracle_qubit_cap)?),
        })
    }

    pub fn sample(&self, shots: usize, seed: u64) -> BTreeMap<String, u64> {
        match self {
            State::Mps(s) => sample_counts(s, shots, seed),
            State::Dense(s) => s.sample(shots, seed),
        }
    }

    fn sim(&mut self) -> &mut dyn Simulator {
        match self {
            State::Mps(s) => s,
            State::Dense(s) => s,
        }
    }

    fn sim_ref(&self) -> &dyn Simulator {
        match self {
            State::Mps(s) => s,
            State::Dense(s) => s,
        }
    }
}

impl Simulator for State {
    fn num_qubits(&self) -> usize {
        self.sim_ref().num_qubits()
    }
    fn apply_one(&mut self, gate: &Matrix2<C64>, q: usize) -> Result<(), SimError> {
        self.sim().apply_one(gate, q)
    }
    fn apply_two(&mut self, gate: &Matrix4<C64>, q1: usize, q2: usize) -> Result<(), SimError> {
        self.sim().apply_two(gate, q1, q2)
    }
    fn expectation(&self, pauli: &PauliString) -> Result<f64, SimError> {
        self.sim_ref().expectation(pauli)
    }
    fn max_bond_seen(&self) -> usize {
        self.sim_ref().max_bond_seen()
    }
    fn peak_memory_bytes(&self) -> u64 {
        self.sim_ref().peak_memory_bytes()
    }
    fn trunc_error_sq(&self) -> f64 {
        self.sim_ref().trunc_error_sq()
    }
}

/// Runs `program` on a fresh `n`-qubit state. Returns the state and the
/// measured qubits in program order.
pub fn simulate(
    program: &[Instruction],
    n: usize,
    config: &BackendConfig,
) -> Result<(State, Vec<usize>), SimError> {
    let mut state = State::new(n, config)?;
    let mut exec = Executor::new(&mut state);
    exec.run(program)?;
    let measured = exec.into_measured();
    Ok((state, measured))
}

/// Keeps only the measured positions of full-register bitstrings.
pub fn project_counts(
    full: &BTreeMap<String, u64>,
    measured: &[usize],
) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for (bits, &count) in full {
        let b = bits.as_bytes();
        let key: String = measured.iter().map(|&q| b[q] as char).collect();
        *out.entry(key).or_insert(0) += count;
    }
    out
}

/// Executes a flattened program into `buffer`, whose size is the register
/// width. Simulator state does not persist between calls.
pub fn execute(
    program: &[Instruction],
    buffer: &mut QubitBuffer,
    config: &BackendConfig,
) -> Result<RunRecord, SimError> {
    let n = buffer.size;
    if let Some(q) = program.iter().flat_map(|i| i.qubits.iter().copied()).max() {
        if q >= n {
            return Err(SimError::QubitOutOfRange { qubit: q, n });
        }
    }
    buffer.reset();
    let start = Instant::now();
    let (state, measured) = simulate(program, n, config)?;
    let counts = if measured.is_empty() || config.shots == 0 {
        BTreeMap::new()
    } else {
        project_counts(&state.sample(config.shots, config.seed), &measured)
    };
    let record = RunRecord {
        counts,
        max_bond_seen: state.max_bond_seen(),
        memory_estimate_bytes: state.peak_memory_bytes(),
        trunc_error_sq: state.trunc_error_sq(),
        wall_time: start.elapsed(),
    };
    buffer.measurement_counts = record.counts.clone();
    buffer.metadata.insert("max_bond_seen".into(), record.max_bond_seen as f64);
    buffer.metadata.insert("memory_estimate_bytes".into(), record.memory_estimate_bytes as f64);
    buffer.metadata.insert("trunc_error_sq".into(), record.trunc_error_sq);
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::GateKind;

    fn bell_program() -> Vec<Instruction> {
        vec![
            Instruction::gate(GateKind::H, &[0], &[]),
            Instruction::gate(GateKind::Cnot, &[0, 1], &[]),
            Instruction::measure(0, 0),
            Instruction::measure(1, 1),
        ]
    }

    #[test]
    fn bell_counts_agree_across_backends() {
        let mut buf = QubitBuffer::new("q", 2);
        let mps = execute(&bell_program(), &mut buf, &BackendConfig::default().with_shots(1000, 7)).unwrap();
        let dense = execute(&bell_program(), &mut buf, &BackendConfig::dense().with_shots(1000, 7)).unwrap();
        assert_eq!(mps.counts, dense.counts);
        assert!(mps.counts.keys().all(|k| k == "00" || k == "11"));
        assert_eq!(mps.counts.values().sum::<u64>(), 1000);
        assert_eq!(mps.max_bond_seen, 2);
        assert_eq!(buf.measurement_counts, dense.counts);
    }

    #[test]
    fn product_state_sampling_is_exact() {
        let prog = vec![
            Instruction::gate(GateKind::X, &[0], &[]),
            Instruction::gate(GateKind::X, &[1], &[]),
            Instruction::measure(0, 0),
            Instruction::measure(1, 1),
        ];
        let mut buf = QubitBuffer::new("q", 2);
        let rec = execute(&prog, &mut buf, &BackendConfig::default().with_shots(100, 1)).unwrap();
        assert_eq!(rec.counts, BTreeMap::from([("11".to_string(), 100)]));
    }

    #[test]
    fn measurement_order_is_program_order() {
        let prog = vec![
            Instruction::gate(GateKind::X, &[0], &[]),
            Instruction::measure(1, 0),
            Instruction::measure(0, 1),
            Instruction::measure(0, 2),
        ];
        let mut buf = QubitBuffer::new("q", 2);
        let rec = execute(&prog, &mut buf, &BackendConfig::default().with_shots(10, 1)).unwrap();
        assert_eq!(rec.counts, BTreeMap::from([("011".to_string(), 10)]));
    }

    #[test]
    fn execution_errors() {
        let mut buf = QubitBuffer::new("q", 1);
        let err = execute(&bell_program(), &mut buf, &BackendConfig::default()).unwrap_err();
        assert_eq!(err, SimError::QubitOutOfRange { qubit: 1, n: 1 });

        let prog = vec![Instruction::measure(0, 0), Instruction::gate(GateKind::H, &[0], &[])];
        let err = execute(&prog, &mut buf, &BackendConfig::default()).unwrap_err();
        assert_eq!(err, SimError::GateAfterMeasure { qubit: 0 });

        let unbound = vec![Instruction::new(GateKind::Rx, vec![0], vec!["t".into()]).unwrap()];
        assert!(matches!(
            execute(&unbound, &mut buf, &BackendConfig::dense()),
            Err(SimError::Ir(IrError::UnboundParameter { .. }))
        ));
    }

    #[test]
    fn backend_selector_strings() {
        assert_eq!("mps".parse::<BackendKind>().unwrap(), BackendKind::Mps);
        assert_eq!("dense".parse::<BackendKind>().unwrap(), BackendKind::Dense);
        assert!("gpu".parse::<BackendKind>().is_err());
        assert_eq!(BackendKind::Dense.to_string(), "dense");
    }
}
