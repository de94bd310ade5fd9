//! Single-parameter VQE: evaluate `⟨H⟩(θ)` for a parameterized kernel and
//! sweep θ over a grid.
//!
//! Energies are computed analytically from the simulated state by default.
//! [`EnergyMode::Sampled`] instead rotates each term into the Z basis and
//! estimates it from measurement counts, mimicking per-term measurement
//! kernels.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::backend::{simulate, BackendConfig, SimError, Simulator, State};
use crate::gates;
use crate::ir::{bind_parameters, flatten, CompositeInstruction, GateKind, Instruction, IrError};
use crate::pauli::{Pauli, PauliString};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HamiltonianError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: Pauli string has {got} qubit(s), expected {expected}")]
    Width { line: usize, expected: usize, got: usize },
    #[error("Hamiltonian has no terms")]
    Empty,
}

/// Weighted sum of Pauli strings over a fixed number of qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliHamiltonian {
    terms: Vec<(f64, PauliString)>,
}

impl PauliHamiltonian {
    pub fn new(terms: Vec<(f64, PauliString)>) -> Result<Self, HamiltonianError> {
        let Some((_, first)) = terms.first() else {
            return Err(HamiltonianError::Empty);
        };
        let n = first.len();
        for (i, (c, p)) in terms.iter().enumerate() {
            if p.len() != n {
                return Err(HamiltonianError::Width { line: i + 1, expected: n, got: p.len() });
            }
            if !c.is_finite() {
                return Err(HamiltonianError::Malformed {
                    line: i + 1,
                    message: format!("coefficient {c} is not finite"),
                });
            }
        }
        Ok(PauliHamiltonian { terms })
    }

    /// Reads `<coeff> <pauli-string>` lines; `#` starts a comment.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HamiltonianError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| HamiltonianError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        text.parse()
    }

    pub fn num_qubits(&self) -> usize {
        self.terms[0].1.len()
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    /// Same operator plus `c · I`.
    pub fn with_offset(&self, c: f64) -> Self {
        let mut terms = self.terms.clone();
        terms.push((c, PauliString::identity(self.num_qubits())));
        PauliHamiltonian { terms }
    }
}

impl FromStr for PauliHamiltonian {
    type Err = HamiltonianError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut terms = Vec::new();
        let mut width = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let malformed = |message: String| HamiltonianError::Malformed { line, message };
            let mut fields = body.split_whitespace();
            let (Some(c), Some(p), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(malformed(format!("expected `<coeff> <pauli-string>`, got `{body}`")));
            };
            let coeff: f64 = c.parse().map_err(|_| malformed(format!("bad coefficient `{c}`")))?;
            if !coeff.is_finite() {
                return Err(malformed(format!("coefficient `{c}` is not finite")));
            }
            let pauli: PauliString = p.parse().map_err(|e| malformed(format!("{e}")))?;
            if pauli.is_empty() {
                return Err(malformed("empty Pauli string".into()));
            }
            match width {
                None => width = Some(pauli.len()),
                Some(w) if w != pauli.len() => {
                    return Err(HamiltonianError::Width { line, expected: w, got: pauli.len() })
                }
                Some(_) => {}
            }
            terms.push((coeff, pauli));
        }
        if terms.is_empty() {
            return Err(HamiltonianError::Empty);
        }
        Ok(PauliHamiltonian { terms })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VqeError {
    #[error("kernel `{kernel}` has {got} parameters; the sweep needs exactly one")]
    ParameterCount { kernel: String, got: usize },
    #[error("kernel uses qubit {qubit} but the Hamiltonian acts on {n} qubit(s)")]
    WidthMismatch { qubit: usize, n: usize },
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnergyMode {
    #[default]
    Analytic,
    /// Per-term estimate from `shots` samples after a basis change.
    Sampled { shots: usize, seed: u64 },
}

/// Value of one Hamiltonian term at one θ.
#[derive(Debug, Clone, PartialEq)]
pub struct TermEstimate {
    pub coeff: f64,
    pub pauli: PauliString,
    pub value: f64,
    /// Binomial standard error of `value`; zero for analytic evaluation.
    pub std_err: f64,
}

/// Uniform inclusive grid of `count` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl ThetaGrid {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self, VqeError> {
        if count < 2 {
            return Err(VqeError::Grid(format!("need at least 2 points, got {count}")));
        }
        if !start.is_finite() || !stop.is_finite() {
            return Err(VqeError::Grid("bounds must be finite".into()));
        }
        Ok(ThetaGrid { start, stop, count })
    }

    pub fn points(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.stop } else { self.start + step * i as f64 })
            .collect()
    }

    pub fn step(&self) -> f64 {
        (self.stop - self.start).abs() / (self.count - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub thetas: Vec<f64>,
    pub energies: Vec<f64>,
    pub argmin_theta: f64,
    pub min_energy: f64,
}

impl SweepResult {
    fn from_points(thetas: Vec<f64>, energies: Vec<f64>) -> Self {
        let (argmin_theta, min_energy) = thetas
            .iter()
            .zip(&energies)
            .map(|(&t, &e)| (t, e))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)))
            .expect("grid has at least two points");
        SweepResult { thetas, energies, argmin_theta, min_energy }
    }

    /// `theta,energy` rows under a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,energy\n");
        for (t, e) in self.thetas.iter().zip(&self.energies) {
            out.push_str(&format!("{t},{e}\n"));
        }
        out
    }
}

fn mix_seed(base: u64, a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over the combined words
    let mut z = base ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn prepare(
    ansatz: &CompositeInstruction,
    theta: f64,
    h: &PauliHamiltonian,
    config: &BackendConfig,
) -> Result<State, VqeError> {
    if ansatz.formal_params.len() != 1 {
        return Err(VqeError::ParameterCount {
            kernel: ansatz.name.clone(),
            got: ansatz.formal_params.len(),
        });
    }
    let n = h.num_qubits();
    let program: Vec<Instruction> = flatten(&bind_parameters(ansatz, &[theta])?)?
        .into_iter()
        .filter(|i| i.kind != GateKind::Measure)
        .collect();
    if let Some(q) = program.iter().flat_map(|i| i.qubits.iter().copied()).max() {
        if q >= n {
            return Err(VqeError::WidthMismatch { qubit: q, n });
        }
    }
    Ok(simulate(&program, n, config)?.0)
}

fn sampled_term(state: &State, pauli: &PauliString, shots: usize, seed: u64) -> Result<(f64, f64), SimError> {
    let mut rotated = state.clone();
    for (q, p) in pauli.iter().enumerate() {
        match p {
            Pauli::X => rotated.apply_one(&gates::hadamard(), q)?,
            Pauli::Y => {
                rotated.apply_one(&gates::rz(-std::f64::consts::FRAC_PI_2), q)?;
                rotated.apply_one(&gates::hadamard(), q)?;
            }
            Pauli::Z | Pauli::I => {}
        }
    }
    let support: Vec<usize> = pauli.support().collect();
    let mut acc: i64 = 0;
    for (bits, &count) in &rotated.sample(shots, seed) {
        let b = bits.as_bytes();
        let parity = support.iter().filter(|&&q| b[q] == b'1').count() % 2;
        acc += if parity == 0 { count as i64 } else { -(count as i64) };
    }
    let value = acc as f64 / shots as f64;
    let std_err = ((1.0 - value * value).max(0.0) / shots as f64).sqrt();
    Ok((value, std_err))
}

fn estimate_terms(
    state: &State,
    h: &PauliHamiltonian,
    mode: EnergyMode,
    point: u64,
) -> Result<Vec<TermEstimate>, VqeError> {
    h.terms()
        .iter()
        .enumerate()
        .map(|(k, (coeff, pauli))| {
            let (value, std_err) = if pauli.is_identity() {
                (1.0, 0.0)
            } else {
                match mode {
                    EnergyMode::Analytic => (state.expectation(pauli)?, 0.0),
                    EnergyMode::Sampled { shots, seed } => {
                        sampled_term(state, pauli, shots.max(1), mix_seed(seed, point, k as u64))?
                    }
                }
            };
            Ok(TermEstimate { coeff: *coeff, pauli: pauli.clone(), value, std_err })
        })
        .collect()
}

/// Per-term values of `H` in the state prepared by `ansatz(theta)`.
/// `point` only feeds the sampling seed.
pub fn term_estimates(
    ansatz: &CompositeInstruction,
    theta: f64,
    h: &PauliHamiltonian,
    config: &BackendConfig,
    mode: EnergyMode,
    point: u64,
) -> Result<Vec<TermEstimate>, VqeError> {
    let state = prepare(ansatz, theta, h, config)?;
    estimate_terms(&state, h, mode, point)
}

/// `Σ_k c_k ⟨ψ(θ)|P_k|ψ(θ)⟩`, MEASURE instructions in the ansatz ignored.
pub fn energy(
    ansatz: &CompositeInstruction,
    theta: f64,
    h: &PauliHamiltonian,
    config: &BackendConfig,
) -> Result<f64, VqeError> {
    energy_with(ansatz, theta, h, config, EnergyMode::Analytic, 0)
}

pub fn energy_with(
    ansatz: &CompositeInstruction,
    theta: f64,
    h: &PauliHamiltonian,
    config: &BackendConfig,
    mode: EnergyMode,
    point: u64,
) -> Result<f64, VqeError> {
    let terms = term_estimates(ansatz, theta, h, config, mode, point)?;
    Ok(terms.iter().map(|t| t.coeff * t.value).sum())
}

/// Evaluates every grid point (in parallel) and reports the minimum, ties
/// going to the smaller θ.
pub fn sweep(
    ansatz: &CompositeInstruction,
    h: &PauliHamiltonian,
    grid: &ThetaGrid,
    config: &BackendConfig,
    mode: EnergyMode,
) -> Result<SweepResult, VqeError> {
    let thetas = grid.points();
    let energies = thetas
        .par_iter()
        .enumerate()
        .map(|(i, &t)| energy_with(ansatz, t, h, config, mode, i as u64))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepResult::from_points(thetas, energies))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::Param;
    use std::f64::consts::PI;

    fn rx_ansatz() -> CompositeInstruction {
        let mut k = CompositeInstruction::new("rx").with_params(["t0"]);
        k.push(Instruction::new(GateKind::Rx, vec![0], vec![Param::Named("t0".into())]).unwrap());
        k
    }

    #[test]
    fn hamiltonian_parsing() {
        let h: PauliHamiltonian = "1.0 ZZ".parse().unwrap();
        assert_eq!(h.terms().len(), 1);
        assert_eq!(h.num_qubits(), 2);

        let h: PauliHamiltonian = "# comment\n\n0.5 ZI # trailing\n-0.25 xy\n".parse().unwrap();
        assert_eq!(h.terms().len(), 2);
        assert_eq!(h.terms()[1].1.to_string(), "XY");

        assert_eq!(
            "1 Z\n1 ZZ".parse::<PauliHamiltonian>().unwrap_err(),
            HamiltonianError::Width { line: 2, expected: 1, got: 2 }
        );
        assert!(matches!(
            "1 Z\nabc Z".parse::<PauliHamiltonian>(),
            Err(HamiltonianError::Malformed { line: 2, .. })
        ));
        assert!(matches!(
            "1 Q".parse::<PauliHamiltonian>(),
            Err(HamiltonianError::Malformed { line: 1, .. })
        ));
        assert!(matches!("1 Z extra".parse::<PauliHamiltonian>(), Err(HamiltonianError::Malformed { .. })));
        assert_eq!("# none".parse::<PauliHamiltonian>().unwrap_err(), HamiltonianError::Empty);
        assert!(matches!(PauliHamiltonian::load("/no/such/file.ham"), Err(HamiltonianError::Io { .. })));
    }

    #[test]
    fn identity_term_is_constant() {
        let h: PauliHamiltonian = "-0.5 II".parse().unwrap();
        for cfg in [BackendConfig::default(), BackendConfig::dense()] {
            for t in [0.0, 1.0, 2.5] {
                assert!((energy(&rx_ansatz(), t, &h, &cfg).unwrap() + 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rx_energy_endpoints() {
        let h: PauliHamiltonian = "1.0 ZI".parse().unwrap();
        let cfg = BackendConfig::default();
        assert!((energy(&rx_ansatz(), 0.0, &h, &cfg).unwrap() - 1.0).abs() < 1e-12);
        assert!((energy(&rx_ansatz(), PI, &h, &cfg).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn rx_sweep_minimum_near_pi() {
        let h: PauliHamiltonian = "1.0 ZI".parse().unwrap();
        let grid = ThetaGrid::new(-PI, PI, 100).unwrap();
        let r = sweep(&rx_ansatz(), &h, &grid, &BackendConfig::default(), EnergyMode::Analytic).unwrap();
        assert_eq!(r.thetas.len(), 100);
        assert_eq!(r.energies.len(), 100);
        // ±π are equally good; the tie goes to -π, which is π up to periodicity
        assert!((r.argmin_theta.abs() - PI).abs() <= grid.step());
        assert_eq!(r.argmin_theta, -PI);
        assert_eq!(r.min_energy, r.energies.iter().cloned().fold(f64::INFINITY, f64::min));
    }

    #[test]
    fn grid_points() {
        let g = ThetaGrid::new(-1.0, 1.0, 5).unwrap();
        assert_eq!(g.points(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(ThetaGrid::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn driver_errors() {
        let h: PauliHamiltonian = "1.0 Z".parse().unwrap();
        let mut two = CompositeInstruction::new("two").with_params(["a", "b"]);
        two.push(Instruction::gate(GateKind::H, &[0], &[]));
        assert!(matches!(
            energy(&two, 0.0, &h, &BackendConfig::default()),
            Err(VqeError::ParameterCount { got: 2, .. })
        ));
        let mut wide = CompositeInstruction::new("wide").with_params(["t"]);
        wide.push(Instruction::gate(GateKind::H, &[3], &[]));
        assert!(matches!(
            energy(&wide, 0.0, &h, &BackendConfig::default()),
            Err(VqeError::WidthMismatch { qubit: 3, n: 1 })
        ));
    }

    #[test]
    fn sampled_y_basis_rotation() {
        // RX(-π/2)|0> is the +1 eigenstate of Y
        let h: PauliHamiltonian = "1.0 Y".parse().unwrap();
        let cfg = BackendConfig::dense();
        let mode = EnergyMode::Sampled { shots: 2000, seed: 3 };
        let e = energy_with(&rx_ansatz(), -PI / 2.0, &h, &cfg, mode, 0).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
        let e = energy_with(&rx_ansatz(), PI / 2.0, &h, &cfg, mode, 0).unwrap();
        assert!((e + 1.0).abs() < 1e-12);
    }
}
