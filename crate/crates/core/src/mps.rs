//! Matrix product states in Vidal (Γ–Λ) form.
//!
//! ```text
//!  Γ[0] -- Λ[0] -- Γ[1] -- Λ[1] -- ... -- Λ[n-2] -- Γ[n-1]
//!   |               |                                 |
//! ```
//!
//! Each site stores one `left × right` matrix per physical index and each
//! bond stores its Schmidt coefficients, so a two-site update only touches
//! the pair being updated. Non-adjacent two-qubit gates are routed with SWAP
//! chains.
//!
//! Storage is `O(n χ²)` complex numbers, `χ` being the largest bond kept.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::svd::{self as faer_svd, ComputeSvdVectors, SvdParams};
use faer::{Mat, Par, Spec};
use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64 as C64;

use crate::backend::{SequentialSampler, SimError, Simulator};
use crate::gates;
use crate::pauli::PauliString;

/// Schmidt coefficients smaller than this fraction of the largest one are
/// numerically zero and always dropped, whatever the cutoff.
pub const SCHMIDT_FLOOR: f64 = 1e-12;

/// Bond entries below this are treated as absent when dividing them out.
const PINV_TOL: f64 = 1e-12;

pub const BYTES_PER_ENTRY: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CutoffMode {
    /// Discard `s < ε · s_max`.
    #[default]
    Relative,
    /// Discard `s < ε`.
    Absolute,
}

impl std::str::FromStr for CutoffMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relative" => Ok(CutoffMode::Relative),
            "absolute" => Ok(CutoffMode::Absolute),
            other => Err(format!("unknown cutoff mode `{other}` (expected relative or absolute)")),
        }
    }
}

/// How singular values are discarded after each two-site update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    pub cutoff: f64,
    pub mode: CutoffMode,
    /// Hard cap applied after the cutoff.
    pub max_bond: Option<usize>,
}

impl TruncationPolicy {
    pub const DEFAULT_CUTOFF: f64 = 1e-4;

    /// No truncation beyond numerically-zero Schmidt coefficients.
    pub fn exact() -> Self {
        TruncationPolicy { cutoff: 0.0, mode: CutoffMode::Relative, max_bond: None }
    }

    pub fn with_cutoff(cutoff: f64) -> Self {
        TruncationPolicy { cutoff, ..Self::exact() }
    }

    pub fn with_max_bond(mut self, max_bond: Option<usize>) -> Self {
        self.max_bond = max_bond;
        self
    }

    /// Number of leading values of a descending spectrum to keep. Never 0.
    pub fn retain(&self, sorted_desc: &[f64]) -> usize {
        let Some(&largest) = sorted_desc.first() else {
            return 0;
        };
        let threshold = match self.mode {
            CutoffMode::Relative => self.cutoff * largest,
            CutoffMode::Absolute => self.cutoff,
        }
        .max(SCHMIDT_FLOOR * largest);
        let kept = sorted_desc.iter().take_while(|&&s| s >= threshold).count().max(1);
        match self.max_bond {
            Some(cap) => kept.min(cap.max(1)),
            None => kept,
        }
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy::with_cutoff(Self::DEFAULT_CUTOFF)
    }
}

/// One site: `Γ[s]` is a `left × right` matrix for physical index `s`.
type Site = [DMatrix<C64>; 2];

#[derive(Debug, Clone)]
pub struct MpsState {
    sites: Vec<Site>,
    bonds: Vec<Vec<f64>>,
    policy: TruncationPolicy,
    trunc_error_sq: f64,
    max_bond_seen: usize,
    peak_entries: usize,
}

fn scale_rows(m: &mut DMatrix<C64>, w: &[f64]) {
    for (mut row, &x) in m.row_iter_mut().zip(w) {
        row *= C64::from(x);
    }
}

fn scale_cols(m: &mut DMatrix<C64>, w: &[f64]) {
    for (mut col, &x) in m.column_iter_mut().zip(w) {
        col *= C64::from(x);
    }
}

fn pinv(w: &[f64]) -> Vec<f64> {
    w.iter().map(|&x| if x.abs() < PINV_TOL { 0.0 } else { 1.0 / x }).collect()
}

type ThinSvd = (Mat<C64>, Vec<f64>, Mat<C64>);

fn all_finite(m: &Mat<C64>) -> bool {
    m.col_iter().all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
}

/// Thin SVD as `(U, singular values, V)`.
///
/// faer's divide-and-conquer driver can return `Ok` with NaN singular
/// vectors on some finite inputs (seen on 512×504 bond matrices). Such
/// results are recomputed with the QR-iteration driver.
fn thin_svd(theta: &Mat<C64>) -> Result<ThinSvd, SimError> {
    if let Ok(svd) = theta.thin_svd() {
        let (u, v) = (svd.U().to_owned(), svd.V().to_owned());
        if all_finite(&u) && all_finite(&v) {
            return Ok((u, svd.S().column_vector().iter().map(|s| s.re).collect(), v));
        }
    }
    qr_thin_svd(theta)
}

fn qr_thin_svd(theta: &Mat<C64>) -> Result<ThinSvd, SimError> {
    let (m, n) = theta.shape();
    let k = m.min(n);
    let params: Spec<SvdParams, C64> =
        SvdParams { recursion_threshold: usize::MAX, ..faer::Auto::<C64>::auto() }.into();
    let thin = ComputeSvdVectors::Thin;
    let mut buf = MemBuffer::new(faer_svd::svd_scratch::<C64>(m, n, thin, thin, Par::Seq, params));
    let (mut u, mut v) = (Mat::zeros(m, k), Mat::zeros(n, k));
    let mut s = faer::diag::Diag::zeros(k);
    faer_svd::svd(theta.as_ref(), s.as_mut(), Some(u.as_mut()), Some(v.as_mut()), Par::Seq, MemStack::new(&mut buf), params)
        .map_err(|_| SimError::SvdFailed)?;
    if !(all_finite(&u) && all_finite(&v)) {
        return Err(SimError::SvdFailed);
    }
    Ok((u, s.column_vector().iter().map(|s| s.re).collect(), v))
}

impl MpsState {
    /// `|0…0⟩` on `n` qubits with the default truncation policy.
    pub fn new(n: usize) -> Result<Self, SimError> {
        Self::with_policy(n, TruncationPolicy::default())
    }

    pub fn with_policy(n: usize, policy: TruncationPolicy) -> Result<Self, SimError> {
        if n == 0 {
            return Err(SimError::EmptyRegister);
        }
        let zero = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let one = DMatrix::zeros(1, 1);
        let state = MpsState {
            sites: vec![[zero, one]; n],
            bonds: vec![vec![1.0]; n - 1],
            policy,
            trunc_error_sq: 0.0,
            max_bond_seen: 1,
            peak_entries: 2 * n,
        };
        Ok(state)
    }

    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn policy(&self) -> TruncationPolicy {
        self.policy
    }

    pub fn set_policy(&mut self, policy: TruncationPolicy) {
        self.policy = policy;
    }

    /// Schmidt coefficients on the bond between sites `k` and `k + 1`.
    pub fn bond(&self, k: usize) -> &[f64] {
        &self.bonds[k]
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.bonds.iter().map(Vec::len).collect()
    }

    /// `(left, 2, right)` shape of a site tensor.
    pub fn site_shape(&self, k: usize) -> (usize, usize, usize) {
        let g = &self.sites[k][0];
        (g.nrows(), 2, g.ncols())
    }

    pub fn max_bond(&self) -> usize {
        self.bonds.iter().map(Vec::len).max().unwrap_or(1)
    }

    pub fn max_bond_seen(&self) -> usize {
        self.max_bond_seen
    }

    /// Complex entries currently held in site tensors.
    pub fn num_entries(&self) -> usize {
        self.sites.iter().map(|s| 2 * s[0].len()).sum()
    }

    pub fn memory_estimate(&self) -> u64 {
        BYTES_PER_ENTRY * self.num_entries() as u64
    }

    pub fn peak_memory_estimate(&self) -> u64 {
        BYTES_PER_ENTRY * self.peak_entries as u64
    }

    /// Accumulated squared weight of discarded Schmidt coefficients.
    pub fn trunc_error_sq(&self) -> f64 {
        self.trunc_error_sq
    }

    fn check_site(&self, q: usize) -> Result<(), SimError> {
        if q >= self.n() {
            Err(SimError::QubitOutOfRange { qubit: q, n: self.n() })
        } else {
            Ok(())
        }
    }

    fn left_weights(&self, k: usize) -> Vec<f64> {
        if k == 0 { vec![1.0] } else { self.bonds[k - 1].clone() }
    }

    fn right_weights(&self, k: usize) -> Vec<f64> {
        if k + 1 == self.n() { vec![1.0] } else { self.bonds[k].clone() }
    }

    /// `Γ[k][s] · Λ[k]`, the right-normalized site matrix.
    fn weighted(&self, k: usize, s: usize) -> DMatrix<C64> {
        let mut m = self.sites[k][s].clone();
        if k + 1 < self.n() {
            scale_cols(&mut m, &self.bonds[k]);
        }
        m
    }

    fn record_growth(&mut self) {
        self.max_bond_seen = self.max_bond_seen.max(self.max_bond());
        self.peak_entries = self.peak_entries.max(self.num_entries());
    }

    pub fn apply_one_qubit(&mut self, gate: &Matrix2<C64>, q: usize) -> Result<(), SimError> {
        self.check_site(q)?;
        if !gates::is_unitary2(gate) {
            return Err(SimError::NonUnitary);
        }
        let [g0, g1] = &self.sites[q];
        let n0 = g0 * gate[(0, 0)] + g1 * gate[(0, 1)];
        let n1 = g0 * gate[(1, 0)] + g1 * gate[(1, 1)];
        self.sites[q] = [n0, n1];
        Ok(())
    }

    /// Two-qubit gate on sites `(q, q + 1)`; the gate's first qubit is `q`.
    pub fn apply_two_qubit_adjacent(&mut self, gate: &Matrix4<C64>, q: usize) -> Result<(), SimError> {
        self.check_site(q)?;
        if q + 1 >= self.n() {
            return Err(SimError::RightBoundary { site: q });
        }
        if !gates::is_unitary4(gate) {
            return Err(SimError::NonUnitary);
        }
        self.update_pair(gate, q)
    }

    /// Two-qubit gate on arbitrary distinct sites. The higher site is swapped
    /// down next to the lower one, the gate applied, and the swaps undone, so
    /// the qubit ordering is unchanged on return.
    pub fn apply_two_qubit_routed(
        &mut self,
        gate: &Matrix4<C64>,
        q1: usize,
        q2: usize,
    ) -> Result<(), SimError> {
        self.check_site(q1)?;
        self.check_site(q2)?;
        if q1 == q2 {
            return Err(SimError::RepeatedQubit { qubit: q1 });
        }
        if !gates::is_unitary4(gate) {
            return Err(SimError::NonUnitary);
        }
        let (lo, hi, oriented) = if q1 < q2 {
            (q1, q2, *gate)
        } else {
            (q2, q1, gates::reverse_qubits(gate))
        };
        let swap = gates::swap();
        for k in (lo + 1..hi).rev() {
            self.update_pair(&swap, k)?;
        }
        self.update_pair(&oriented, lo)?;
        for k in lo + 1..hi {
            self.update_pair(&swap, k)?;
        }
        Ok(())
    }

    // Contract Λ[q-1] Γ[q] Λ[q] Γ[q+1] Λ[q+1] with the gate, split it with an
    // SVD across the q|q+1 cut, truncate, then divide the outer Λs back out.
    fn update_pair(&mut self, gate: &Matrix4<C64>, q: usize) -> Result<(), SimError> {
        let wl = self.left_weights(q);
        let wr = self.right_weights(q + 1);
        let (l, r) = (wl.len(), wr.len());

        let left: Vec<DMatrix<C64>> = (0..2)
            .map(|s| {
                let mut m = self.sites[q][s].clone();
                scale_rows(&mut m, &wl);
                scale_cols(&mut m, &self.bonds[q]);
                m
            })
            .collect();
        let right: Vec<DMatrix<C64>> = (0..2)
            .map(|s| {
                let mut m = self.sites[q + 1][s].clone();
                scale_cols(&mut m, &wr);
                m
            })
            .collect();
        let pairs: Vec<DMatrix<C64>> =
            (0..4).map(|idx| &left[idx >> 1] * &right[idx & 1]).collect();

        let mut theta = DMatrix::<C64>::zeros(2 * l, 2 * r);
        for out in 0..4 {
            let (t1, t2) = (out >> 1, out & 1);
            let mut block = theta.view_mut((t1 * l, t2 * r), (l, r));
            for (inp, p) in pairs.iter().enumerate() {
                let g = gate[(out, inp)];
                if g != C64::new(0.0, 0.0) {
                    block += p * g;
                }
            }
        }

        let theta = Mat::<C64>::from_fn(2 * l, 2 * r, |i, j| theta[(i, j)]);
        let (u, spectrum, v) = thin_svd(&theta)?;

        let keep = self.policy.retain(&spectrum);
        let total: f64 = spectrum.iter().map(|s| s * s).sum();
        let kept: f64 = spectrum[..keep].iter().map(|s| s * s).sum();
        if total > 0.0 {
            self.trunc_error_sq += (total - kept).max(0.0) / total;
        }
        let norm = kept.sqrt();
        let lambda: Vec<f64> = spectrum[..keep].iter().map(|s| s / norm).collect();

        let inv_l = pinv(&wl);
        let inv_r = pinv(&wr);
        let new_left: Site = std::array::from_fn(|t| {
            DMatrix::from_fn(l, keep, |a, j| u[(t * l + a, j)] * inv_l[a])
        });
        let new_right: Site = std::array::from_fn(|t| {
            DMatrix::from_fn(keep, r, |j, c| v[(t * r + c, j)].conj() * inv_r[c])
        });

        self.sites[q] = new_left;
        self.sites[q + 1] = new_right;
        self.bonds[q] = lambda;
        self.record_growth();
        Ok(())
    }

    /// `⟨bits|ψ⟩`; `bits[k]` is the value of qubit `k`.
    pub fn amplitude(&self, bits: &[u8]) -> Result<C64, SimError> {
        if bits.len() != self.n() {
            return Err(SimError::LengthMismatch { expected: self.n(), got: bits.len() });
        }
        let mut v = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for (k, &b) in bits.iter().enumerate() {
            v = &v * self.weighted(k, usize::from(b != 0));
        }
        Ok(v[(0, 0)])
    }

    // ⟨ψ| ⊗ops |ψ⟩ by left-to-right transfer matrices
    fn sandwich(&self, ops: &[Matrix2<C64>]) -> C64 {
        let mut env = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for (k, op) in ops.iter().enumerate() {
            let a = [self.weighted(k, 0), self.weighted(k, 1)];
            let mut next = DMatrix::zeros(a[0].ncols(), a[0].ncols());
            for s in 0..2 {
                let left = a[s].adjoint() * &env;
                for t in 0..2 {
                    let o = op[(s, t)];
                    if o != C64::new(0.0, 0.0) {
                        next += (&left * &a[t]) * o;
                    }
                }
            }
            env = next;
        }
        env[(0, 0)]
    }

    pub fn norm_sq(&self) -> f64 {
        self.sandwich(&vec![gates::identity(); self.n()]).re
    }

    /// `⟨ψ|P|ψ⟩` without touching the state.
    pub fn expectation_pauli(&self, pauli: &PauliString) -> Result<f64, SimError> {
        if pauli.len() != self.n() {
            return Err(SimError::LengthMismatch { expected: self.n(), got: pauli.len() });
        }
        let ops: Vec<_> = pauli.iter().map(|p| p.matrix()).collect();
        Ok(self.sandwich(&ops).re / self.norm_sq())
    }

    /// Dense amplitudes, index bit `k` = qubit `k`. Meant for small checks.
    pub fn to_statevector(&self) -> Vec<C64> {
        let n = self.n();
        let mut out = Vec::with_capacity(1 << n);
        for idx in 0..1usize << n {
            let bits: Vec<u8> = (0..n).map(|k| ((idx >> k) & 1) as u8).collect();
            out.push(self.amplitude(&bits).expect("length matches"));
        }
        out
    }

    /// Structural checks: boundary bonds, chained shapes, sorted unit-norm Λ.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.n();
        if self.site_shape(0).0 != 1 || self.site_shape(n - 1).2 != 1 {
            return Err("boundary bond dimension is not 1".into());
        }
        for k in 0..n - 1 {
            let chi = self.bonds[k].len();
            if self.site_shape(k).2 != chi || self.site_shape(k + 1).0 != chi {
                return Err(format!("shape chain broken at bond {k}"));
            }
            if self.bonds[k].windows(2).any(|w| w[0] < w[1]) {
                return Err(format!("bond {k} is not sorted"));
            }
            let sq: f64 = self.bonds[k].iter().map(|s| s * s).sum();
            if (sq - 1.0).abs() > 1e-10 {
                return Err(format!("bond {k} has squared norm {sq}"));
            }
        }
        Ok(())
    }
}

impl SequentialSampler for MpsState {
    type Cursor = DMatrix<C64>;

    fn num_sites(&self) -> usize {
        self.n()
    }

    fn start(&self) -> Self::Cursor {
        DMatrix::from_element(1, 1, C64::new(1.0, 0.0))
    }

    fn branches(&self, cursor: &Self::Cursor, site: usize) -> [(f64, Self::Cursor); 2] {
        std::array::from_fn(|b| {
            let next = cursor * self.weighted(site, b);
            (next.norm_squared(), next)
        })
    }
}

impl Simulator for MpsState {
    fn num_qubits(&self) -> usize {
        self.n()
    }

    fn apply_one(&mut self, gate: &Matrix2<C64>, q: usize) -> Result<(), SimError> {
        self.apply_one_qubit(gate, q)
    }

    fn apply_two(&mut self, gate: &Matrix4<C64>, q1: usize, q2: usize) -> Result<(), SimError> {
        self.apply_two_qubit_routed(gate, q1, q2)
    }

    fn expectation(&self, pauli: &PauliString) -> Result<f64, SimError> {
        self.expectation_pauli(pauli)
    }

    fn max_bond_seen(&self) -> usize {
        self.max_bond_seen
    }

    fn peak_memory_bytes(&self) -> u64 {
        self.peak_memory_estimate()
    }

    fn trunc_error_sq(&self) -> f64 {
        self.trunc_error_sq
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn close(a: C64, b: f64) -> bool {
        (a - C64::from(b)).norm() < 1e-12
    }

    fn bell() -> MpsState {
        let mut s = MpsState::new(2).unwrap();
        s.apply_one_qubit(&hadamard(), 0).unwrap();
        s.apply_two_qubit_adjacent(&cnot(), 0).unwrap();
        s
    }

    #[test]
    fn product_state() {
        let s = MpsState::new(3).unwrap();
        assert!(close(s.amplitude(&[0, 0, 0]).unwrap(), 1.0));
        assert!(close(s.amplitude(&[1, 0, 0]).unwrap(), 0.0));
        let s1 = MpsState::new(1).unwrap();
        assert_eq!(s1.site_shape(0), (1, 2, 1));
        assert_eq!(s1.max_bond(), 1);
        assert_eq!(MpsState::new(85).unwrap().memory_estimate(), 2720);
        let s10 = MpsState::new(10).unwrap();
        assert_eq!((s10.max_bond(), s10.memory_estimate()), (1, 320));
        assert!(matches!(MpsState::new(0), Err(SimError::EmptyRegister)));
    }

    #[test]
    fn one_qubit_gates() {
        let mut s = MpsState::new(1).unwrap();
        s.apply_one_qubit(&pauli_x(), 0).unwrap();
        assert!(close(s.amplitude(&[1]).unwrap(), 1.0));

        let mut s = MpsState::new(1).unwrap();
        s.apply_one_qubit(&hadamard(), 0).unwrap();
        assert!(close(s.amplitude(&[0]).unwrap(), FRAC_1_SQRT_2));
        assert!(close(s.amplitude(&[1]).unwrap(), FRAC_1_SQRT_2));

        let mut s = MpsState::new(1).unwrap();
        s.apply_one_qubit(&rz(0.7), 0).unwrap();
        assert!((s.amplitude(&[0]).unwrap().norm() - 1.0).abs() < 1e-14);

        assert!(matches!(s.apply_one_qubit(&hadamard(), 1), Err(SimError::QubitOutOfRange { .. })));
        let bad = hadamard() * C64::from(2.0);
        assert!(matches!(s.apply_one_qubit(&bad, 0), Err(SimError::NonUnitary)));
    }

    #[test]
    fn bell_pair_schmidt_values() {
        let s = bell();
        assert_eq!(s.max_bond(), 2);
        for &x in s.bond(0) {
            assert!((x - FRAC_1_SQRT_2).abs() < 1e-12);
        }
        assert!(close(s.amplitude(&[0, 0]).unwrap(), FRAC_1_SQRT_2));
        assert!(close(s.amplitude(&[1, 1]).unwrap(), FRAC_1_SQRT_2));
        s.check_invariants().unwrap();
    }

    #[test]
    fn cnot_on_product_stays_product() {
        let mut s = MpsState::new(2).unwrap();
        s.apply_one_qubit(&pauli_x(), 0).unwrap();
        s.apply_two_qubit_adjacent(&cnot(), 0).unwrap();
        assert!(close(s.amplitude(&[1, 1]).unwrap(), 1.0));
        assert_eq!(s.max_bond(), 1);
    }

    #[test]
    fn double_cnot_disentangles() {
        let mut s = bell();
        s.apply_two_qubit_adjacent(&cnot(), 0).unwrap();
        assert_eq!(s.max_bond(), 1);
        assert_eq!(s.max_bond_seen(), 2);
        assert!(close(s.amplitude(&[0, 0]).unwrap(), FRAC_1_SQRT_2));
        assert!(close(s.amplitude(&[1, 0]).unwrap(), FRAC_1_SQRT_2));
    }

    #[test]
    fn adjacent_errors() {
        let mut s = MpsState::new(2).unwrap();
        assert!(matches!(
            s.apply_two_qubit_adjacent(&cnot(), 1),
            Err(SimError::RightBoundary { site: 1 })
        ));
        assert!(matches!(
            s.apply_two_qubit_adjacent(&(cnot() * C64::from(0.5)), 0),
            Err(SimError::NonUnitary)
        ));
        assert!(matches!(
            s.apply_two_qubit_routed(&cnot(), 1, 1),
            Err(SimError::RepeatedQubit { .. })
        ));
        assert!(matches!(
            s.apply_two_qubit_routed(&cnot(), 0, 7),
            Err(SimError::QubitOutOfRange { .. })
        ));
    }

    #[test]
    fn routed_cnot() {
        let mut s = MpsState::new(3).unwrap();
        s.apply_one_qubit(&pauli_x(), 0).unwrap();
        s.apply_two_qubit_routed(&cnot(), 0, 2).unwrap();
        assert!(close(s.amplitude(&[1, 0, 1]).unwrap(), 1.0));

        let mut s = MpsState::new(3).unwrap();
        s.apply_one_qubit(&hadamard(), 0).unwrap();
        s.apply_two_qubit_routed(&cnot(), 0, 2).unwrap();
        assert!(close(s.amplitude(&[0, 0, 0]).unwrap(), FRAC_1_SQRT_2));
        assert!(close(s.amplitude(&[1, 0, 1]).unwrap(), FRAC_1_SQRT_2));
        assert!(close(s.amplitude(&[1, 1, 1]).unwrap(), 0.0));

        // reversed orientation: control is the higher qubit
        let mut s = MpsState::new(3).unwrap();
        s.apply_one_qubit(&pauli_x(), 2).unwrap();
        s.apply_two_qubit_routed(&cnot(), 2, 0).unwrap();
        assert!(close(s.amplitude(&[1, 0, 1]).unwrap(), 1.0));
    }

    #[test]
    fn ghz_amplitudes() {
        let mut s = MpsState::new(3).unwrap();
        s.apply_one_qubit(&hadamard(), 0).unwrap();
        s.apply_two_qubit_routed(&cnot(), 0, 1).unwrap();
        s.apply_two_qubit_routed(&cnot(), 1, 2).unwrap();
        assert!(close(s.amplitude(&[0, 0, 0]).unwrap(), FRAC_1_SQRT_2));
        assert!(close(s.amplitude(&[0, 1, 0]).unwrap(), 0.0));
        assert!(matches!(s.amplitude(&[0, 1]), Err(SimError::LengthMismatch { .. })));
    }

    #[test]
    fn bell_expectations() {
        let s = bell();
        let e = |p: &str| s.expectation_pauli(&p.parse().unwrap()).unwrap();
        assert!((e("ZZ") - 1.0).abs() < 1e-12);
        assert!(e("ZI").abs() < 1e-12);
        assert!((e("XX") - 1.0).abs() < 1e-12);
        assert!((e("YY") + 1.0).abs() < 1e-12);
        assert!(s.expectation_pauli(&"Z".parse().unwrap()).is_err());
    }

    #[test]
    fn one_qubit_gate_keeps_bonds() {
        let mut s = bell();
        let before = s.bond_dims();
        s.apply_one_qubit(&ry(1.1), 1).unwrap();
        s.apply_one_qubit(&rx(PI / 3.0), 0).unwrap();
        assert_eq!(s.bond_dims(), before);
    }

    #[test]
    fn qr_driver_factorizes() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for (m, n, rank) in [(8, 6, 6), (6, 8, 6), (40, 40, 40), (64, 48, 5), (16, 16, 1)] {
            let mut c = || C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let a = Mat::<C64>::from_fn(m, rank, |_, _| c());
            let b = Mat::<C64>::from_fn(rank, n, |_, _| c());
            let theta = &a * &b;
            let (u, s, v) = qr_thin_svd(&theta).unwrap();
            assert!(s.windows(2).all(|w| w[0] >= w[1]));
            let us = Mat::<C64>::from_fn(m, s.len(), |i, j| u[(i, j)] * s[j]);
            assert!((&us * v.adjoint() - &theta).norm_l2() < 1e-10 * theta.norm_l2());
            let eye = Mat::<C64>::identity(s.len(), s.len());
            assert!((u.adjoint() * &u - &eye).norm_l2() < 1e-10);
            assert!((v.adjoint() * &v - &eye).norm_l2() < 1e-10);
        }
    }

    #[test]
    fn retain_rules() {
        let p = TruncationPolicy::with_cutoff(1e-4);
        assert_eq!(p.retain(&[0.9, 0.4, 5e-5]), 2);
        assert_eq!(p.retain(&[1e-9, 1e-20]), 1);
        let abs = TruncationPolicy { cutoff: 0.5, mode: CutoffMode::Absolute, max_bond: None };
        assert_eq!(abs.retain(&[0.3, 0.2]), 1);
        assert_eq!(TruncationPolicy::exact().retain(&[1.0, 1e-13, 0.0]), 1);
        assert_eq!(TruncationPolicy::exact().with_max_bond(Some(2)).retain(&[0.5, 0.5, 0.5]), 2);
        assert_eq!(TruncationPolicy::exact().with_max_bond(Some(0)).retain(&[0.5, 0.5]), 1);
    }

    #[test]
    fn truncation_accumulates_error() {
        // Slightly entangled pair: the small Schmidt value falls under a loose cutoff.
        let mut s = MpsState::with_policy(2, TruncationPolicy::with_cutoff(0.1)).unwrap();
        s.apply_one_qubit(&ry(0.05), 0).unwrap();
        s.apply_two_qubit_adjacent(&cnot(), 0).unwrap();
        assert_eq!(s.max_bond(), 1);
        let expected = (0.025f64).sin().powi(2);
        assert!((s.trunc_error_sq() - expected).abs() < 1e-12);
        assert!((s.norm_sq() - 1.0).abs() < 1e-12);
    }
}
