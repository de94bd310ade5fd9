//! Dense statevector reference simulator.
//!
//! Stores all `2^n` amplitudes (index bit `k` = qubit `k`) and applies gates
//! as sparse updates. It is slow on purpose: every MPS result in the test
//! suites is checked against it.

use std::collections::BTreeMap;

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64 as C64;

use crate::backend::{sample_counts, Executor, SequentialSampler, SimError, Simulator};
use crate::gates;
use crate::ir::Instruction;
use crate::pauli::PauliString;

pub const DEFAULT_QUBIT_CAP: usize = 24;
pub const QUBIT_CAP_ENV: &str = "MPSQVM_ORACLE_QUBIT_CAP";

/// The qubit cap from the environment, falling back to 24.
pub fn qubit_cap_from_env() -> usize {
    std::env::var(QUBIT_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_QUBIT_CAP)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    n: usize,
    amps: Vec<C64>,
}

impl DenseState {
    pub fn new(n: usize) -> Result<Self, SimError> {
        Self::with_cap(n, qubit_cap_from_env())
    }

    pub fn with_cap(n: usize, cap: usize) -> Result<Self, SimError> {
        if n == 0 {
            return Err(SimError::EmptyRegister);
        }
        if n > cap {
            return Err(SimError::TooManyQubits { n, cap });
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[0] = C64::new(1.0, 0.0);
        Ok(DenseState { n, amps })
    }

    /// Wraps raw amplitudes; `amps.len()` must be a power of two.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self, SimError> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(SimError::LengthMismatch { expected: len.next_power_of_two().max(2), got: len });
        }
        Ok(DenseState { n: len.trailing_zeros() as usize, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check(&self, q: usize) -> Result<(), SimError> {
        if q >= self.n {
            Err(SimError::QubitOutOfRange { qubit: q, n: self.n })
        } else {
            Ok(())
        }
    }

    pub fn apply_one_qubit(&mut self, gate: &Matrix2<C64>, q: usize) -> Result<(), SimError> {
        self.check(q)?;
        if !gates::is_unitary2(gate) {
            return Err(SimError::NonUnitary);
        }
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = gate[(0, 0)] * a0 + gate[(0, 1)] * a1;
                self.amps[i | bit] = gate[(1, 0)] * a0 + gate[(1, 1)] * a1;
            }
        }
        Ok(())
    }

    pub fn apply_two_qubit(&mut self, gate: &Matrix4<C64>, q1: usize, q2: usize) -> Result<(), SimError> {
        self.check(q1)?;
        self.check(q2)?;
        if q1 == q2 {
            return Err(SimError::RepeatedQubit { qubit: q1 });
        }
        if !gates::is_unitary4(gate) {
            return Err(SimError::NonUnitary);
        }
        let (b1, b2) = (1usize << q1, 1usize << q2);
        for i in 0..self.amps.len() {
            if i & (b1 | b2) != 0 {
                continue;
            }
            // local index 2a + b with a = bit q1, b = bit q2
            let idx = [i, i | b2, i | b1, i | b1 | b2];
            let old = idx.map(|j| self.amps[j]);
            for (r, &j) in idx.iter().enumerate() {
                self.amps[j] = (0..4).map(|c| gate[(r, c)] * old[c]).sum();
            }
        }
        Ok(())
    }

    /// Exact `⟨ψ|P|ψ⟩`.
    pub fn expectation_pauli(&self, pauli: &PauliString) -> Result<f64, SimError> {
        if pauli.len() != self.n {
            return Err(SimError::LengthMismatch { expected: self.n, got: pauli.len() });
        }
        let mut applied = self.clone();
        for (q, p) in pauli.iter().enumerate() {
            applied.apply_one_qubit(&p.matrix(), q)?;
        }
        let overlap: C64 = self.amps.iter().zip(&applied.amps).map(|(a, b)| a.conj() * b).sum();
        Ok(overlap.re)
    }

    /// `|amp|²` for every basis index.
    pub fn distribution(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Distribution keyed by bitstring (character `k` = qubit `k`), omitting
    /// zero-probability entries.
    pub fn distribution_table(&self) -> BTreeMap<String, f64> {
        self.distribution()
            .into_iter()
            .enumerate()
            .filter(|(_, p)| *p > 1e-15)
            .map(|(i, p)| (index_to_bits(i, self.n), p))
            .collect()
    }

    pub fn sample(&self, shots: usize, seed: u64) -> BTreeMap<String, u64> {
        sample_counts(&Marginals::new(self), shots, seed)
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &[C64]) -> f64 {
        let ov: C64 = self.amps.iter().zip(other).map(|(a, b)| a.conj() * b).sum();
        ov.norm_sqr()
    }
}

pub fn index_to_bits(idx: usize, n: usize) -> String {
    (0..n).map(|k| if (idx >> k) & 1 == 1 { '1' } else { '0' }).collect()
}

/// Runs `program` from `|0…0⟩`. MEASURE instructions are accepted and have no
/// effect on the amplitudes.
pub fn dense_run(program: &[Instruction], n: usize) -> Result<DenseState, SimError> {
    let mut state = DenseState::new(n)?;
    if let Some(q) = program.iter().flat_map(|i| i.qubits.iter().copied()).max() {
        state.check(q)?;
    }
    Executor::new(&mut state).run(program)?;
    Ok(state)
}

// marginals[k][p] = probability that qubits 0..k read the low k bits of p
struct Marginals {
    tables: Vec<Vec<f64>>,
}

impl Marginals {
    fn new(state: &DenseState) -> Self {
        let n = state.n;
        let mut tables = vec![Vec::new(); n + 1];
        tables[n] = state.distribution();
        for k in (0..n).rev() {
            let upper = &tables[k + 1];
            let half = 1usize << k;
            tables[k] = (0..half).map(|p| upper[p] + upper[p | half]).collect();
        }
        Marginals { tables }
    }
}

impl SequentialSampler for Marginals {
    type Cursor = usize;

    fn num_sites(&self) -> usize {
        self.tables.len() - 1
    }

    fn start(&self) -> usize {
        0
    }

    fn branches(&self, prefix: &usize, site: usize) -> [(f64, usize); 2] {
        let t = &self.tables[site + 1];
        let one = prefix | (1 << site);
        [(t[*prefix], *prefix), (t[one], one)]
    }
}

impl Simulator for DenseState {
    fn num_qubits(&self) -> usize {
        self.n
    }

    fn apply_one(&mut self, gate: &Matrix2<C64>, q: usize) -> Result<(), SimError> {
        self.apply_one_qubit(gate, q)
    }

    fn apply_two(&mut self, gate: &Matrix4<C64>, q1: usize, q2: usize) -> Result<(), SimError> {
        self.apply_two_qubit(gate, q1, q2)
    }

    fn expectation(&self, pauli: &PauliString) -> Result<f64, SimError> {
        self.expectation_pauli(pauli)
    }

    /// Full Schmidt rank bound of the middle cut.
    fn max_bond_seen(&self) -> usize {
        1 << (self.n / 2)
    }

    fn peak_memory_bytes(&self) -> u64 {
        16 * self.amps.len() as u64
    }

    fn trunc_error_sq(&self) -> f64 {
        0.0
    }
}
