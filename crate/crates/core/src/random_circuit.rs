//! Round-structured random circuits and the (qubits × rounds) memory study.
//!
//! Round 1 opens with a Hadamard on every qubit. Every round then applies a
//! random single-qubit layer followed by a nearest-neighbour CNOT layer that
//! covers each adjacent pair once: first the pairs `(0,1), (2,3), …`, then
//! `(1,2), (3,4), …`. Each cut of the chain is therefore crossed by one CNOT
//! per round, which bounds the bond dimension by `2^rounds`.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::backend::Executor;
use crate::ir::{GateKind, Instruction};
use crate::mps::{MpsState, TruncationPolicy};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("invalid circuit spec: {0}")]
    InvalidSpec(String),
}

/// Gate families drawn for the random single-qubit layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SingleQubitPool {
    /// A uniformly chosen Pauli followed by `RY(φ)` and `RZ(ψ)`, angles
    /// uniform in `[0, 2π)`.
    #[default]
    PauliRotation,
    /// One gate per qubit, uniform over `{X, Y, Z, RX(φ), RY(φ), RZ(φ)}`.
    /// Pauli and `RX` choices commute with the Hadamard layer's `|+⟩`, so some
    /// CNOTs create no entanglement and shallow bond dimensions vary by seed.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundCircuitSpec {
    pub n: usize,
    pub rounds: usize,
    pub seed: u64,
    pub pool: SingleQubitPool,
}

impl RoundCircuitSpec {
    pub fn new(n: usize, rounds: usize, seed: u64) -> Self {
        RoundCircuitSpec { n, rounds, seed, pool: SingleQubitPool::default() }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.n < 2 {
            return Err(BenchError::InvalidSpec(format!("need at least 2 qubits, got {}", self.n)));
        }
        if self.rounds < 1 {
            return Err(BenchError::InvalidSpec("need at least 1 round".into()));
        }
        Ok(())
    }
}

/// The circuit for `spec`. A spec with more rounds extends the circuit of the
/// same seed with fewer rounds.
pub fn generate_round_circuit(spec: &RoundCircuitSpec) -> Result<Vec<Instruction>, BenchError> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(n + spec.rounds * 4 * n);
    out.extend((0..n).map(|q| Instruction::gate(GateKind::H, &[q], &[])));

    for _ in 0..spec.rounds {
        for q in 0..n {
            match spec.pool {
                SingleQubitPool::PauliRotation => {
                    let pauli = [GateKind::X, GateKind::Y, GateKind::Z][rng.random_range(0..3)];
                    let (phi, psi) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
                    out.push(Instruction::gate(pauli, &[q], &[]));
                    out.push(Instruction::gate(GateKind::Ry, &[q], &[phi]));
                    out.push(Instruction::gate(GateKind::Rz, &[q], &[psi]));
                }
                SingleQubitPool::Mixed => {
                    let choice = rng.random_range(0..6);
                    let phi = rng.random_range(0.0..TAU);
                    out.push(match choice {
                        0 => Instruction::gate(GateKind::X, &[q], &[]),
                        1 => Instruction::gate(GateKind::Y, &[q], &[]),
                        2 => Instruction::gate(GateKind::Z, &[q], &[]),
                        3 => Instruction::gate(GateKind::Rx, &[q], &[phi]),
                        4 => Instruction::gate(GateKind::Ry, &[q], &[phi]),
                        _ => Instruction::gate(GateKind::Rz, &[q], &[phi]),
                    });
                }
            }
        }
        for parity in 0..2 {
            for q in (parity..n - 1).step_by(2) {
                out.push(Instruction::gate(GateKind::Cnot, &[q, q + 1], &[]));
            }
        }
    }
    Ok(out)
}

/// Per-run limits; exceeding either marks the run as skipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub max_chi: usize,
    pub time: Duration,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_chi: 4096, time: Duration::from_secs(60) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Skip {
    ChiBudget { chi: usize },
    TimeBudget { elapsed: Duration },
    Failed(String),
}

impl std::fmt::Display for Skip {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Skip::ChiBudget { chi } => write!(f, "bond dimension {chi} over budget"),
            Skip::TimeBudget { elapsed } => write!(f, "time budget exceeded after {elapsed:?}"),
            Skip::Failed(msg) => f.write_str(msg),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitRun {
    pub peak_bytes: u64,
    pub max_bond_seen: usize,
    pub trunc_error_sq: f64,
}

/// Simulates one random circuit on an MPS. `observe` sees the state after
/// every instruction.
pub fn run_round_circuit_with<F: FnMut(&MpsState)>(
    spec: &RoundCircuitSpec,
    policy: TruncationPolicy,
    budget: Budget,
    mut observe: F,
) -> Result<CircuitRun, Skip> {
    let program = generate_round_circuit(spec).map_err(|e| Skip::Failed(e.to_string()))?;
    let mut state = MpsState::with_policy(spec.n, policy).map_err(|e| Skip::Failed(e.to_string()))?;
    let start = Instant::now();
    for instr in &program {
        Executor::new(&mut state)
            .run(std::slice::from_ref(instr))
            .map_err(|e| Skip::Failed(e.to_string()))?;
        observe(&state);
        if state.max_bond() > budget.max_chi {
            return Err(Skip::ChiBudget { chi: state.max_bond() });
        }
        let elapsed = start.elapsed();
        if elapsed > budget.time {
            return Err(Skip::TimeBudget { elapsed });
        }
    }
    Ok(CircuitRun {
        peak_bytes: state.peak_memory_estimate(),
        max_bond_seen: state.max_bond_seen(),
        trunc_error_sq: state.trunc_error_sq(),
    })
}

pub fn run_round_circuit(
    spec: &RoundCircuitSpec,
    policy: TruncationPolicy,
    budget: Budget,
) -> Result<CircuitRun, Skip> {
    run_round_circuit_with(spec, policy, budget, |_| {})
}

/// The (qubits × rounds) grid to sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub qubits: Vec<usize>,
    pub rounds: Vec<usize>,
    pub seeds_per_cell: usize,
    /// Cell seeds are `base_seed, base_seed + 1, …`.
    pub base_seed: u64,
    pub pool: SingleQubitPool,
}

impl GridSpec {
    /// (n, rounds) pairs, ordered by n then rounds.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        self.qubits
            .iter()
            .flat_map(|&n| self.rounds.iter().map(move |&r| (n, r)))
            .collect()
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.seeds_per_cell as u64).map(|i| self.base_seed + i).collect()
    }
}

impl Default for GridSpec {
    /// 5 to 85 qubits in steps of 5, 2 to 10 rounds in steps of 2, ten
    /// circuits per cell.
    fn default() -> Self {
        GridSpec {
            qubits: (5..=85).step_by(5).collect(),
            rounds: (2..=10).step_by(2).collect(),
            seeds_per_cell: 10,
            base_seed: 0,
            pool: SingleQubitPool::default(),
        }
    }
}

/// Aggregated memory statistics of one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub n: usize,
    pub rounds: usize,
    pub seeds: Vec<u64>,
    pub peak_bytes: Vec<u64>,
    pub max_bonds: Vec<usize>,
    pub mean_bytes: f64,
    /// Population standard deviation.
    pub std_bytes: f64,
    pub mean_chi: f64,
    pub max_chi: usize,
    pub skipped: Option<String>,
}

impl BenchRecord {
    pub fn from_runs(n: usize, rounds: usize, seeds: Vec<u64>, runs: &[CircuitRun]) -> Self {
        let peak_bytes: Vec<u64> = runs.iter().map(|r| r.peak_bytes).collect();
        let max_bonds: Vec<usize> = runs.iter().map(|r| r.max_bond_seen).collect();
        let count = runs.len().max(1) as f64;
        let mean_bytes = peak_bytes.iter().map(|&b| b as f64).sum::<f64>() / count;
        let var = peak_bytes.iter().map(|&b| (b as f64 - mean_bytes).powi(2)).sum::<f64>() / count;
        BenchRecord {
            n,
            rounds,
            seeds,
            mean_chi: max_bonds.iter().map(|&c| c as f64).sum::<f64>() / count,
            max_chi: max_bonds.iter().copied().max().unwrap_or(0),
            peak_bytes,
            max_bonds,
            mean_bytes,
            std_bytes: var.sqrt(),
            skipped: None,
        }
    }

    pub fn skipped(n: usize, rounds: usize, seeds: Vec<u64>, reason: String) -> Self {
        BenchRecord {
            n,
            rounds,
            seeds,
            peak_bytes: Vec::new(),
            max_bonds: Vec::new(),
            mean_bytes: f64::NAN,
            std_bytes: f64::NAN,
            mean_chi: f64::NAN,
            max_chi: 0,
            skipped: Some(reason),
        }
    }

    pub fn is_skipped(&self) -> bool {
        self.skipped.is_some()
    }
}

/// Runs the grid, qubit columns and seeds in parallel, and returns records
/// in `cells()` order. A cell with any skipped seed is reported as skipped.
/// Within a column, rounds are visited in increasing order and every cell
/// after a skipped one is skipped as well: a deeper circuit extends the
/// shallower one, so it cannot fit a budget the shallower one broke.
pub fn run_grid(grid: &GridSpec, policy: TruncationPolicy, budget: Budget) -> Vec<BenchRecord> {
    let seeds = grid.seeds();
    let mut ascending: Vec<usize> = grid.rounds.clone();
    ascending.sort_unstable();
    ascending.dedup();

    let columns: Vec<Vec<(usize, BenchRecord)>> = grid
        .qubits
        .par_iter()
        .map(|&n| {
            let mut blocked: Option<usize> = None;
            ascending
                .iter()
                .map(|&rounds| {
                    if let Some(r0) = blocked {
                        let why = format!("already over budget at {r0} rounds");
                        return (rounds, BenchRecord::skipped(n, rounds, seeds.clone(), why));
                    }
                    let cancel = AtomicBool::new(false);
                    let results: Vec<Option<Result<CircuitRun, Skip>>> = seeds
                        .par_iter()
                        .map(|&seed| {
                            if cancel.load(Ordering::Relaxed) {
                                return None;
                            }
                            let spec = RoundCircuitSpec { n, rounds, seed, pool: grid.pool };
                            let r = run_round_circuit(&spec, policy, budget);
                            if r.is_err() {
                                cancel.store(true, Ordering::Relaxed);
                            }
                            Some(r)
                        })
                        .collect();
                    if let Some(skip) = results.iter().flatten().find_map(|r| r.as_ref().err()) {
                        blocked = Some(rounds);
                        return (rounds, BenchRecord::skipped(n, rounds, seeds.clone(), skip.to_string()));
                    }
                    let runs: Vec<CircuitRun> = results.into_iter().flatten().map(|r| r.unwrap()).collect();
                    (rounds, BenchRecord::from_runs(n, rounds, seeds.clone(), &runs))
                })
                .collect()
        })
        .collect();

    columns
        .iter()
        .flat_map(|column| {
            grid.rounds.iter().map(move |r| {
                column.iter().find(|(rounds, _)| rounds == r).expect("every round visited").1.clone()
            })
        })
        .collect()
}

pub const CSV_HEADER: &str = "n,rounds,mean_bytes,std_bytes,mean_chi,max_chi,skipped";

/// Summary CSV, one row per cell.
pub fn report_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        if r.is_skipped() {
            writeln!(out, "{},{},,,,,true", r.n, r.rounds).unwrap();
        } else {
            writeln!(
                out,
                "{},{},{},{},{},{},false",
                r.n, r.rounds, r.mean_bytes, r.std_bytes, r.mean_chi, r.max_chi
            )
            .unwrap();
        }
    }
    out
}

/// gnuplot `splot` data: one block per qubit count, blank-line separated,
/// skipped cells as `NaN`.
pub fn report_surface(records: &[BenchRecord]) -> String {
    let mut out = String::from("# n rounds mean_bytes std_bytes\n");
    let mut prev_n = None;
    for r in records {
        if prev_n.is_some_and(|p| p != r.n) {
            out.push('\n');
        }
        prev_n = Some(r.n);
        if r.is_skipped() {
            writeln!(out, "{} {} NaN NaN", r.n, r.rounds).unwrap();
        } else {
            writeln!(out, "{} {} {} {}", r.n, r.rounds, r.mean_bytes, r.std_bytes).unwrap();
        }
    }
    out
}

/// Per-seed detail so any cell can be replayed.
pub fn report_seeds(records: &[BenchRecord]) -> String {
    let mut out = String::from("n,rounds,seed,peak_bytes,max_chi\n");
    for r in records {
        for (i, seed) in r.seeds.iter().enumerate() {
            match (r.peak_bytes.get(i), r.max_bonds.get(i)) {
                (Some(b), Some(c)) => writeln!(out, "{},{},{},{},{}", r.n, r.rounds, seed, b, c),
                _ => writeln!(out, "{},{},{},,", r.n, r.rounds, seed),
            }
            .unwrap();
        }
    }
    out
}

/// Writes the summary CSV and the surface data file.
pub fn emit_report<W1: Write, W2: Write>(
    records: &[BenchRecord],
    csv: &mut W1,
    surface: &mut W2,
) -> io::Result<()> {
    if records.is_empty() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "no bench records to report"));
    }
    csv.write_all(report_csv(records).as_bytes())?;
    surface.write_all(report_surface(records).as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_layer_is_hadamards() {
        let c = generate_round_circuit(&RoundCircuitSpec::new(5, 1, 3)).unwrap();
        assert!(c[..5].iter().enumerate().all(|(q, i)| i.kind == GateKind::H && i.qubits == vec![q]));
        assert_eq!(c.iter().filter(|i| i.kind == GateKind::H).count(), 5);
        let cnots: Vec<_> = c.iter().filter(|i| i.kind == GateKind::Cnot).map(|i| i.qubits.clone()).collect();
        assert_eq!(cnots, vec![vec![0, 1], vec![2, 3], vec![1, 2], vec![3, 4]]);
    }

    #[test]
    fn later_rounds_have_no_hadamards() {
        let c = generate_round_circuit(&RoundCircuitSpec::new(4, 3, 0)).unwrap();
        assert_eq!(c.iter().filter(|i| i.kind == GateKind::H).count(), 4);
        assert_eq!(c.iter().filter(|i| i.kind == GateKind::Cnot).count(), 9);
    }

    #[test]
    fn generation_is_deterministic_and_prefix_stable() {
        let a = generate_round_circuit(&RoundCircuitSpec::new(2, 2, 11)).unwrap();
        let b = generate_round_circuit(&RoundCircuitSpec::new(2, 2, 11)).unwrap();
        assert_eq!(a, b);
        let longer = generate_round_circuit(&RoundCircuitSpec::new(2, 3, 11)).unwrap();
        assert_eq!(&longer[..a.len()], &a[..]);
        let other = generate_round_circuit(&RoundCircuitSpec::new(2, 2, 12)).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn mixed_pool_one_gate_per_qubit() {
        let spec = RoundCircuitSpec { pool: SingleQubitPool::Mixed, ..RoundCircuitSpec::new(3, 2, 1) };
        let c = generate_round_circuit(&spec).unwrap();
        assert_eq!(c.len(), 3 + 2 * (3 + 2));
    }

    #[test]
    fn invalid_specs() {
        assert!(generate_round_circuit(&RoundCircuitSpec::new(1, 2, 0)).is_err());
        assert!(generate_round_circuit(&RoundCircuitSpec::new(4, 0, 0)).is_err());
    }

    #[test]
    fn two_rounds_reach_bond_four() {
        let run = run_round_circuit(&RoundCircuitSpec::new(6, 2, 5), TruncationPolicy::exact(), Budget::default())
            .unwrap();
        assert_eq!(run.max_bond_seen, 4);
    }

    #[test]
    fn chi_budget_skips() {
        let budget = Budget { max_chi: 2, ..Budget::default() };
        let r = run_round_circuit(&RoundCircuitSpec::new(6, 3, 0), TruncationPolicy::exact(), budget);
        assert!(matches!(r, Err(Skip::ChiBudget { .. })));
    }

    #[test]
    fn skip_propagates_to_deeper_cells() {
        let grid = GridSpec { qubits: vec![6], rounds: vec![4, 1, 2], seeds_per_cell: 2, ..GridSpec::default() };
        let budget = Budget { max_chi: 2, ..Budget::default() };
        let recs = run_grid(&grid, TruncationPolicy::exact(), budget);
        assert_eq!(recs.iter().map(|r| r.rounds).collect::<Vec<_>>(), [4, 1, 2]);
        assert!(recs[1].skipped.is_none());
        assert!(recs[2].skipped.as_deref().unwrap().contains("bond"));
        assert_eq!(recs[0].skipped.as_deref(), Some("already over budget at 2 rounds"));
    }

    #[test]
    fn default_grid_shape() {
        let g = GridSpec::default();
        assert_eq!(g.qubits.len(), 17);
        assert_eq!(g.rounds, vec![2, 4, 6, 8, 10]);
        assert_eq!(g.cells().len(), 85);
        assert_eq!(g.seeds().len(), 10);
    }

    #[test]
    fn record_statistics() {
        let runs = [
            CircuitRun { peak_bytes: 100, max_bond_seen: 2, trunc_error_sq: 0.0 },
            CircuitRun { peak_bytes: 300, max_bond_seen: 4, trunc_error_sq: 0.0 },
        ];
        let r = BenchRecord::from_runs(5, 2, vec![0, 1], &runs);
        assert_eq!(r.mean_bytes, 200.0);
        assert_eq!(r.std_bytes, 100.0);
        assert_eq!(r.mean_chi, 3.0);
        assert_eq!(r.max_chi, 4);
    }

    #[test]
    fn csv_rows() {
        let run = CircuitRun { peak_bytes: 640, max_bond_seen: 4, trunc_error_sq: 0.0 };
        let rec = BenchRecord::from_runs(5, 2, vec![0], &[run]);
        let csv = report_csv(std::slice::from_ref(&rec));
        assert_eq!(csv, format!("{CSV_HEADER}\n5,2,640,0,4,4,false\n"));

        let skipped = BenchRecord::skipped(85, 10, vec![0], "too big".into());
        let csv = report_csv(std::slice::from_ref(&skipped));
        assert_eq!(csv.lines().nth(1), Some("85,10,,,,,true"));

        let surface = report_surface(&[rec.clone(), skipped.clone()]);
        assert!(surface.contains("5 2 640 0\n\n85 10 NaN NaN"));
        assert_eq!(report_seeds(&[rec, skipped]).lines().count(), 3);

        let mut a = Vec::new();
        let mut b = Vec::new();
        assert!(emit_report(&[], &mut a, &mut b).is_err());
    }

    #[test]
    fn full_default_grid_report_has_85_rows() {
        let g = GridSpec::default();
        let records: Vec<_> = g
            .cells()
            .into_iter()
            .map(|(n, r)| BenchRecord::skipped(n, r, g.seeds(), "not run".into()))
            .collect();
        let (mut csv, mut dat) = (Vec::new(), Vec::new());
        emit_report(&records, &mut csv, &mut dat).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 86);
    }
}
