#![allow(dead_code)]

use mpsqvm::{GateKind, Instruction};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random gate list over the whole unitary alphabet, two-qubit gates on
/// arbitrary (possibly distant) pairs.
pub fn random_program(n: usize, len: usize, seed: u64) -> Vec<Instruction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unitary: Vec<GateKind> =
        GateKind::ALL.iter().copied().filter(|k| *k != GateKind::Measure).collect();
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let kind = unitary[rng.random_range(0..unitary.len())];
        if kind.num_qubits() == 2 {
            if n < 2 {
                continue;
            }
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            out.push(Instruction::gate(kind, &[a, b], &[]));
        } else {
            let q = rng.random_range(0..n);
            let angles: Vec<f64> =
                (0..kind.num_params()).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
            out.push(Instruction::gate(kind, &[q], &angles));
        }
    }
    out
}

pub fn fidelity(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm_sqr()
}

pub fn index_bits(idx: usize, n: usize) -> Vec<u8> {
    (0..n).map(|k| ((idx >> k) & 1) as u8).collect()
}
