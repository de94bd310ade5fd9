//! A matrix-product-state quantum virtual machine.
//!
//! Kernels written in the `__qpu__` language are parsed into a gate tree
//! ([`ir`]), flattened in pre-order and executed on one of two interchangeable
//! backends: a compressed MPS simulator ([`mps`]) or an exact statevector
//! ([`dense`]). On top of that sit a single-parameter VQE sweep ([`vqe`]) and
//! the random-circuit memory study ([`random_circuit`]).

pub mod backend;
pub mod dense;
pub mod gates;
pub mod ir;
pub mod mps;
pub mod parser;
pub mod pauli;

pub use backend::{execute, BackendConfig, BackendKind, RunRecord, SimError, Simulator, State};
pub use dense::{dense_run, DenseState};
pub use ir::{bind_parameters, flatten, CompositeInstruction, GateKind, Instruction, Param, QubitBuffer};
pub use mps::{CutoffMode, MpsState, TruncationPolicy};
pub use parser::{parse, unparse, ParseError, SourceUnit};
pub use pauli::{Pauli, PauliString};
pub mod random_circuit;
pub mod vqe;

pub use vqe::{EnergyMode, PauliHamiltonian, SweepResult, ThetaGrid};
