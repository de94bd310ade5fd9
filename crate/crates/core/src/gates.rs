//! Unitary matrices for the gate alphabet.
//!
//! Two-qubit matrices act on `|a b>` with basis index `2a + b`, where `a` is
//! the first listed qubit (the control for CNOT).

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64 as C64;

pub const UNITARITY_TOL: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

pub fn identity() -> Matrix2<C64> {
    Matrix2::identity()
}

pub fn hadamard() -> Matrix2<C64> {
    let h = C64::from(std::f64::consts::FRAC_1_SQRT_2);
    Matrix2::new(h, h, h, -h)
}

pub fn pauli_x() -> Matrix2<C64> {
    Matrix2::new(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> Matrix2<C64> {
    Matrix2::new(ZERO, -I, I, ZERO)
}

pub fn pauli_z() -> Matrix2<C64> {
    Matrix2::new(ONE, ZERO, ZERO, -ONE)
}

/// `exp(-i θ X / 2)`
pub fn rx(theta: f64) -> Matrix2<C64> {
    let (s, c) = (theta / 2.0).sin_cos();
    Matrix2::new(C64::from(c), -I * s, -I * s, C64::from(c))
}

/// `exp(-i θ Y / 2)`
pub fn ry(theta: f64) -> Matrix2<C64> {
    let (s, c) = (theta / 2.0).sin_cos();
    Matrix2::new(C64::from(c), C64::from(-s), C64::from(s), C64::from(c))
}

/// `exp(-i θ Z / 2)`
pub fn rz(theta: f64) -> Matrix2<C64> {
    let half = theta / 2.0;
    Matrix2::new(C64::from_polar(1.0, -half), ZERO, ZERO, C64::from_polar(1.0, half))
}

pub fn cnot() -> Matrix4<C64> {
    let mut m = Matrix4::zeros();
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(2, 3)] = ONE;
    m[(3, 2)] = ONE;
    m
}

pub fn cz() -> Matrix4<C64> {
    Matrix4::from_diagonal(&nalgebra::Vector4::new(ONE, ONE, ONE, -ONE))
}

pub fn swap() -> Matrix4<C64> {
    let mut m = Matrix4::zeros();
    m[(0, 0)] = ONE;
    m[(1, 2)] = ONE;
    m[(2, 1)] = ONE;
    m[(3, 3)] = ONE;
    m
}

/// Same operator with the roles of its two qubits exchanged.
pub fn reverse_qubits(g: &Matrix4<C64>) -> Matrix4<C64> {
    let s = swap();
    s * g * s
}

pub fn kron(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

pub fn is_unitary2(m: &Matrix2<C64>) -> bool {
    (m.adjoint() * m - Matrix2::identity()).iter().all(|z| z.norm() <= UNITARITY_TOL)
}

pub fn is_unitary4(m: &Matrix4<C64>) -> bool {
    (m.adjoint() * m - Matrix4::identity()).iter().all(|z| z.norm() <= UNITARITY_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close2(a: &Matrix2<C64>, b: &Matrix2<C64>) -> bool {
        (a - b).iter().all(|z| z.norm() < 1e-14)
    }

    #[test]
    fn all_unitary() {
        for m in [identity(), hadamard(), pauli_x(), pauli_y(), pauli_z(), rx(0.3), ry(-1.2), rz(4.0)] {
            assert!(is_unitary2(&m));
        }
        for m in [cnot(), cz(), swap()] {
            assert!(is_unitary4(&m));
        }
        assert!(!is_unitary2(&(hadamard() * C64::from(1.001))));
    }

    #[test]
    fn rotations_at_pi_are_paulis_up_to_phase() {
        let mi = -I;
        assert!(close2(&rx(PI), &(pauli_x() * mi)));
        assert!(close2(&ry(PI), &(pauli_y() * mi)));
        assert!(close2(&rz(PI), &(pauli_z() * mi)));
    }

    #[test]
    fn reversed_cnot_targets_first_qubit() {
        let r = reverse_qubits(&cnot());
        // |a b> with b control: |01> (index 1) -> |11> (index 3)
        assert_eq!(r[(3, 1)], ONE);
        assert_eq!(r[(0, 0)], ONE);
        assert_eq!(r[(2, 2)], ONE);
        assert_eq!(reverse_qubits(&cz()), cz());
    }
}
