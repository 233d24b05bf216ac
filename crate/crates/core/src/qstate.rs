//! Pure and mixed states of an L-qubit chain and the dense kernels acting on
//! them.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, Mat2, Mat4, SquareMatrix, C64, ZERO};
use crate::tolerances::TOL;
use crate::{Error, Result};

/// Bit position of `site` inside a basis index (site 0 is the most significant bit).
#[inline]
pub fn bit_of(site: usize, num_qubits: usize) -> usize {
    num_qubits - 1 - site
}

/// Apply `gate` to sites `(left, left + 1)` of a raw amplitude vector.
pub(crate) fn gate_kernel(amps: &mut [C64], num_qubits: usize, gate: &Mat4, left: usize) {
    let hi = 1usize << bit_of(left, num_qubits);
    let lo = hi >> 1;
    let n = amps.len();
    // Enumerate indices with both target bits cleared.
    let mut base = 0usize;
    while base < n {
        if base & hi != 0 {
            base += hi;
            continue;
        }
        if base & lo != 0 {
            base += lo;
            continue;
        }
        let idx = [base, base | lo, base | hi, base | hi | lo];
        let v = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
        for r in 0..4 {
            let g = &gate[4 * r..4 * r + 4];
            amps[idx[r]] = g[0] * v[0] + g[1] * v[1] + g[2] * v[2] + g[3] * v[3];
        }
        base += 1;
    }
}

/// Pure state of an L-qubit chain, normalized, with the log of the norm
/// factored out so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureState {
    num_qubits: usize,
    amplitudes: Vec<C64>,
    /// Σ ln‖M|ψ⟩‖ over every renormalized operator application.
    pub log_norm: f64,
}

impl PureState {
    /// Computational basis state |index⟩.
    pub fn basis(num_qubits: usize, index: usize) -> Self {
        assert!(num_qubits >= 1 && index < (1 << num_qubits));
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[index] = linalg::ONE;
        Self { num_qubits, amplitudes, log_norm: 0.0 }
    }

    /// |↑↑…↑⟩
    pub fn all_up(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0)
    }

    /// ⊗ₗ |φₗ⟩ from one 2-component vector per site.
    pub fn product(sites: &[[C64; 2]]) -> Self {
        let mut amplitudes = vec![linalg::ONE];
        for s in sites {
            let mut next = Vec::with_capacity(amplitudes.len() * 2);
            for a in &amplitudes {
                next.push(a * s[0]);
                next.push(a * s[1]);
            }
            amplitudes = next;
        }
        Self::from_amplitudes(amplitudes).expect("product of non-zero site states")
    }

    /// Normalizes the input. Fails when the length is not a power of two or
    /// the vector vanishes.
    pub fn from_amplitudes(mut amplitudes: Vec<C64>) -> Result<Self> {
        let n = amplitudes.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::DimensionMismatch { expected: n.next_power_of_two().max(2), actual: n });
        }
        let r = linalg::norm(&amplitudes);
        if r <= TOL.annihilation {
            return Err(Error::TrajectoryAnnihilated { site: 0, norm: r });
        }
        linalg::scale(&mut amplitudes, 1.0 / r);
        Ok(Self { num_qubits: n.trailing_zeros() as usize, amplitudes, log_norm: 0.0 })
    }

    /// Haar-random pure state (normalized complex Gaussian vector).
    pub fn haar_random<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Self {
        let amplitudes = (0..1usize << num_qubits)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                C64::new(re, im)
            })
            .collect();
        Self::from_amplitudes(amplitudes).expect("gaussian vector is non-zero")
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// Mutable access for kernels that renormalize themselves.
    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amplitudes)
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        linalg::dot(&self.amplitudes, &other.amplitudes)
    }

    /// |⟨self|other⟩|
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.inner(other).norm()
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.num_qubits {
            return Err(Error::SiteOutOfRange { site, num_qubits: self.num_qubits });
        }
        Ok(())
    }

    /// Apply a two-qubit gate to sites `(left, left + 1)`. Norm is preserved
    /// when `gate` is unitary; see [`Self::apply_two_qubit_gate_checked`].
    pub fn apply_two_qubit_gate(&mut self, gate: &Mat4, left: usize) -> Result<()> {
        if left + 1 >= self.num_qubits {
            return Err(Error::SiteOutOfRange { site: left + 1, num_qubits: self.num_qubits });
        }
        gate_kernel(&mut self.amplitudes, self.num_qubits, gate, left);
        Ok(())
    }

    /// Same as [`Self::apply_two_qubit_gate`] but rejects non-unitary gates.
    pub fn apply_two_qubit_gate_checked(&mut self, gate: &Mat4, left: usize) -> Result<()> {
        let deviation = linalg::unitarity_defect4(gate);
        if deviation > TOL.unitarity {
            return Err(Error::NonUnitaryGate { deviation });
        }
        self.apply_two_qubit_gate(gate, left)
    }

    /// Apply a single-site operator and renormalize. Returns ln‖op|ψ⟩‖, which
    /// is also added to `log_norm`. The state is untouched on error.
    pub fn apply_single_site_operator(&mut self, op: &Mat2, site: usize) -> Result<f64> {
        self.check_site(site)?;
        let mask = 1usize << bit_of(site, self.num_qubits);
        let diagonal = op[1] == ZERO && op[2] == ZERO;
        let mut norm_sqr = 0.0;
        if diagonal {
            let w = [op[0].norm_sqr(), op[3].norm_sqr()];
            for (i, a) in self.amplitudes.iter().enumerate() {
                norm_sqr += a.norm_sqr() * w[usize::from(i & mask != 0)];
            }
        } else {
            for i in (0..self.amplitudes.len()).filter(|i| i & mask == 0) {
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | mask]);
                norm_sqr += (op[0] * a0 + op[1] * a1).norm_sqr() + (op[2] * a0 + op[3] * a1).norm_sqr();
            }
        }
        let r = norm_sqr.sqrt();
        if !(r > TOL.annihilation) {
            return Err(Error::TrajectoryAnnihilated { site, norm: r });
        }
        let inv = 1.0 / r;
        if diagonal {
            let d = [op[0] * inv, op[3] * inv];
            for (i, a) in self.amplitudes.iter_mut().enumerate() {
                *a *= d[usize::from(i & mask != 0)];
            }
        } else {
            for i in (0..self.amplitudes.len()).filter(|i| i & mask == 0) {
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | mask]);
                self.amplitudes[i] = (op[0] * a0 + op[1] * a1) * inv;
                self.amplitudes[i | mask] = (op[2] * a0 + op[3] * a1) * inv;
            }
        }
        let log_weight = r.ln();
        self.log_norm += log_weight;
        Ok(log_weight)
    }

    /// Probability that `site` is |↑⟩ (bit 0).
    pub fn prob_up(&self, site: usize) -> f64 {
        let mask = 1usize << bit_of(site, self.num_qubits);
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// ⟨ψ|σ1ˡ|ψ⟩ computed from bit-flip pairs.
    pub fn expect_sigma_x(&self, site: usize) -> f64 {
        let mask = 1usize << bit_of(site, self.num_qubits);
        let mut acc = 0.0;
        for i in (0..self.amplitudes.len()).filter(|i| i & mask == 0) {
            acc += 2.0 * (self.amplitudes[i].conj() * self.amplitudes[i | mask]).re;
        }
        acc
    }

    /// ⟨ψ|Σₗ σ1ˡ|ψ⟩
    pub fn total_sigma_x(&self) -> f64 {
        (0..self.num_qubits).map(|s| self.expect_sigma_x(s)).sum()
    }

    /// Reduced density matrix on `keep_sites` (strictly increasing).
    pub fn partial_trace(&self, keep_sites: &[usize]) -> Result<ReducedDensityMatrix> {
        let schmidt = self.schmidt_matrix(keep_sites)?;
        let (dim_a, dim_c) = (schmidt.rows, schmidt.cols);
        let m = &schmidt.data;
        let mut rho = SquareMatrix::zeros(dim_a);
        for i in 0..dim_a {
            let ri = &m[i * dim_c..(i + 1) * dim_c];
            for j in i..dim_a {
                let rj = &m[j * dim_c..(j + 1) * dim_c];
                let v = linalg::dot(rj, ri);
                rho.set(i, j, v);
                rho.set(j, i, v.conj());
            }
        }
        Ok(ReducedDensityMatrix { sites: keep_sites.to_vec(), matrix: rho })
    }

    /// Entanglement entropy of `sites`, computed from whichever side of the
    /// bipartition is smaller.
    pub fn entanglement_entropy(&self, sites: &[usize]) -> Result<f64> {
        validate_sites(sites, self.num_qubits)?;
        if sites.len() == self.num_qubits {
            return Ok(0.0);
        }
        if 2 * sites.len() <= self.num_qubits {
            return Ok(self.partial_trace(sites)?.von_neumann_entropy());
        }
        let complement: Vec<usize> = (0..self.num_qubits).filter(|s| !sites.contains(s)).collect();
        Ok(self.partial_trace(&complement)?.von_neumann_entropy())
    }

    /// Amplitudes reshaped to (kept index) × (traced index).
    fn schmidt_matrix(&self, keep_sites: &[usize]) -> Result<SchmidtMatrix> {
        validate_sites(keep_sites, self.num_qubits)?;
        let l = self.num_qubits;
        let k = keep_sites.len();
        let traced: Vec<usize> = (0..l).filter(|s| !keep_sites.contains(s)).collect();
        let (rows, cols) = (1usize << k, 1usize << traced.len());
        let mut data = vec![ZERO; rows * cols];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let mut r = 0usize;
            for &s in keep_sites {
                r = (r << 1) | ((i >> bit_of(s, l)) & 1);
            }
            let mut c = 0usize;
            for &s in &traced {
                c = (c << 1) | ((i >> bit_of(s, l)) & 1);
            }
            data[r * cols + c] = *a;
        }
        Ok(SchmidtMatrix { rows, cols, data })
    }
}

struct SchmidtMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

fn validate_sites(sites: &[usize], num_qubits: usize) -> Result<()> {
    if sites.is_empty() {
        return Err(Error::InvalidSites("empty site list"));
    }
    if sites.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSites("sites must be strictly increasing without duplicates"));
    }
    if let Some(&last) = sites.last() {
        if last >= num_qubits {
            return Err(Error::SiteOutOfRange { site: last, num_qubits });
        }
    }
    Ok(())
}

/// −Σ λ ln λ over eigenvalues clamped to [0, 1].
pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .map(|&l| l.clamp(0.0, 1.0))
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.ln())
        .sum()
}

/// ρ^A = tr_Ā |ψ⟩⟨ψ| together with the sites it lives on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedDensityMatrix {
    pub sites: Vec<usize>,
    pub matrix: SquareMatrix,
}

impl ReducedDensityMatrix {
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.matrix)
    }

    pub fn von_neumann_entropy(&self) -> f64 {
        entropy_of_spectrum(&self.eigenvalues())
    }
}

/// Density matrix of the full chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedState {
    num_qubits: usize,
    matrix: SquareMatrix,
}

impl MixedState {
    /// I_N / N
    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let n = 1usize << num_qubits;
        let mut matrix = SquareMatrix::identity(n);
        linalg::scale(matrix.as_mut_slice(), 1.0 / n as f64);
        Self { num_qubits, matrix }
    }

    pub fn from_pure(state: &PureState) -> Self {
        Self { num_qubits: state.num_qubits(), matrix: SquareMatrix::outer(state.amplitudes()) }
    }

    /// Wraps a matrix after checking Hermiticity, unit trace and positivity.
    pub fn from_matrix(num_qubits: usize, matrix: SquareMatrix) -> Result<Self> {
        if matrix.dim() != 1 << num_qubits {
            return Err(Error::DimensionMismatch { expected: 1 << num_qubits, actual: matrix.dim() });
        }
        let state = Self { num_qubits, matrix };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        if self.matrix.hermiticity_defect() > TOL.density {
            return Err(Error::OutOfRange("density matrix is not Hermitian"));
        }
        if (self.trace() - 1.0).abs() > TOL.density {
            return Err(Error::OutOfRange("density matrix trace differs from 1"));
        }
        if self.eigenvalues().first().is_some_and(|&l| l < -TOL.density) {
            return Err(Error::OutOfRange("density matrix has a negative eigenvalue"));
        }
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.matrix
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut SquareMatrix {
        &mut self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// tr ρ²
    pub fn purity(&self) -> f64 {
        linalg::norm_sqr(self.matrix.as_slice())
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.matrix)
    }

    /// ρ ← G ρ G† on sites `(left, left + 1)`.
    pub fn apply_two_qubit_gate(&mut self, gate: &Mat4, left: usize) -> Result<()> {
        if left + 1 >= self.num_qubits {
            return Err(Error::SiteOutOfRange { site: left + 1, num_qubits: self.num_qubits });
        }
        let n = self.matrix.dim();
        let l = self.num_qubits;
        let data = self.matrix.as_mut_slice();
        // ρ G†: each row transforms with conj(G).
        let mut gate_conj = *gate;
        for g in gate_conj.iter_mut() {
            *g = g.conj();
        }
        for row in data.chunks_mut(n) {
            gate_kernel(row, l, &gate_conj, left);
        }
        // G ρ: mix whole rows.
        let hi = 1usize << bit_of(left, l);
        let lo = hi >> 1;
        let mut buf = vec![ZERO; 4 * n];
        for base in (0..n).filter(|b| b & (hi | lo) == 0) {
            let idx = [base, base | lo, base | hi, base | hi | lo];
            for (k, &r) in idx.iter().enumerate() {
                buf[k * n..(k + 1) * n].copy_from_slice(&data[r * n..(r + 1) * n]);
            }
            for (k, &r) in idx.iter().enumerate() {
                let dst = &mut data[r * n..(r + 1) * n];
                for (c, d) in dst.iter_mut().enumerate() {
                    *d = gate[4 * k] * buf[c]
                        + gate[4 * k + 1] * buf[n + c]
                        + gate[4 * k + 2] * buf[2 * n + c]
                        + gate[4 * k + 3] * buf[3 * n + c];
                }
            }
        }
        Ok(())
    }

    /// tr(M ρ M†) for a diagonal single-site operator `diag(m0, m1)` (real).
    pub fn diagonal_weight(&self, diag: [f64; 2], site: usize) -> f64 {
        let n = self.matrix.dim();
        let mask = 1usize << bit_of(site, self.num_qubits);
        let w = [diag[0] * diag[0], diag[1] * diag[1]];
        (0..n).map(|i| self.matrix.get(i, i).re * w[usize::from(i & mask != 0)]).sum()
    }

    /// ρ ← M ρ M† / tr(M ρ M†) for a real diagonal single-site operator.
    /// Returns the trace that was divided out.
    pub fn apply_diagonal_operator(&mut self, diag: [f64; 2], site: usize) -> Result<f64> {
        if site >= self.num_qubits {
            return Err(Error::SiteOutOfRange { site, num_qubits: self.num_qubits });
        }
        let p = self.diagonal_weight(diag, site);
        if !(p > TOL.annihilation) {
            return Err(Error::TrajectoryAnnihilated { site, norm: p });
        }
        let n = self.matrix.dim();
        let mask = 1usize << bit_of(site, self.num_qubits);
        let inv = 1.0 / p;
        let data = self.matrix.as_mut_slice();
        for i in 0..n {
            let di = diag[usize::from(i & mask != 0)];
            for j in 0..n {
                let dj = diag[usize::from(j & mask != 0)];
                data[i * n + j] *= di * dj * inv;
            }
        }
        Ok(p)
    }

    /// ⟨ψ|ρ|ψ⟩
    pub fn fidelity_with_pure(&self, state: &PureState) -> f64 {
        let n = self.matrix.dim();
        let a = state.amplitudes();
        let mut acc = ZERO;
        for i in 0..n {
            let row = &self.matrix.as_slice()[i * n..(i + 1) * n];
            let mut r = ZERO;
            for (m, x) in row.iter().zip(a) {
                r += m * x;
            }
            acc += a[i].conj() * r;
        }
        acc.re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity4, ONE};
    use crate::seed::rng_from_seed;
    use approx::assert_abs_diff_eq;

    fn swap() -> Mat4 {
        let mut m = [ZERO; 16];
        m[0] = ONE;
        m[4 + 2] = ONE;
        m[8 + 1] = ONE;
        m[15] = ONE;
        m
    }

    fn bell() -> PureState {
        let h = 1.0 / 2f64.sqrt();
        PureState::from_amplitudes(vec![C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)]).unwrap()
    }

    #[test]
    fn identity_gate_is_noop() {
        let mut rng = rng_from_seed(1);
        let psi = PureState::haar_random(4, &mut rng);
        let mut out = psi.clone();
        out.apply_two_qubit_gate(&identity4(), 1).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn swap_exchanges_01_and_10() {
        // |01⟩ has site 1 down: index 0b01
        let mut psi = PureState::basis(2, 0b01);
        psi.apply_two_qubit_gate(&swap(), 0).unwrap();
        assert_eq!(psi, PureState::basis(2, 0b10));
    }

    #[test]
    fn gate_site_out_of_range() {
        let mut psi = PureState::all_up(3);
        assert!(matches!(psi.apply_two_qubit_gate(&identity4(), 2), Err(Error::SiteOutOfRange { .. })));
        let mut bad = identity4();
        bad[0] = C64::new(2.0, 0.0);
        assert!(matches!(psi.apply_two_qubit_gate_checked(&bad, 0), Err(Error::NonUnitaryGate { .. })));
    }

    #[test]
    fn single_site_identity_has_zero_weight() {
        let mut rng = rng_from_seed(2);
        let psi = PureState::haar_random(3, &mut rng);
        let mut out = psi.clone();
        let w = out.apply_single_site_operator(&linalg::IDENTITY2, 1).unwrap();
        assert_abs_diff_eq!(w, 0.0, epsilon = 1e-14);
        for (a, b) in out.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn projector_on_up_branch() {
        let proj = [ONE, ZERO, ZERO, ZERO];
        let mut up = PureState::all_up(1);
        assert_abs_diff_eq!(up.apply_single_site_operator(&proj, 0).unwrap(), 0.0, epsilon = 1e-15);
        let h = 1.0 / 2f64.sqrt();
        let mut plus = PureState::product(&[[C64::new(h, 0.0), C64::new(h, 0.0)]]);
        let w = plus.apply_single_site_operator(&proj, 0).unwrap();
        assert_abs_diff_eq!(w, h.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(plus.log_norm, h.ln(), epsilon = 1e-14);
        assert!((plus.amplitudes()[0] - ONE).norm() < 1e-14);
    }

    #[test]
    fn annihilation_is_reported_and_state_kept() {
        let proj_down = [ZERO, ZERO, ZERO, ONE];
        let mut up = PureState::all_up(2);
        let before = up.clone();
        assert!(matches!(
            up.apply_single_site_operator(&proj_down, 0),
            Err(Error::TrajectoryAnnihilated { site: 0, .. })
        ));
        assert_eq!(up, before);
    }

    #[test]
    fn product_state_reduced_matrix() {
        let rho = PureState::all_up(3).partial_trace(&[1]).unwrap();
        assert!((rho.matrix.get(0, 0) - ONE).norm() < 1e-15);
        assert!(rho.matrix.get(1, 1).norm() < 1e-15);
        assert_abs_diff_eq!(rho.von_neumann_entropy(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn bell_pair_is_maximally_mixed() {
        let rho = bell().partial_trace(&[0]).unwrap();
        assert_abs_diff_eq!(rho.matrix.get(0, 0).re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.matrix.get(1, 1).re, 0.5, epsilon = 1e-15);
        assert!(rho.matrix.get(0, 1).norm() < 1e-15);
        assert_abs_diff_eq!(rho.von_neumann_entropy(), 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn ghz_half_cut_entropy_is_ln2() {
        let h = 1.0 / 2f64.sqrt();
        let mut amps = vec![ZERO; 16];
        amps[0] = C64::new(h, 0.0);
        amps[15] = C64::new(h, 0.0);
        let ghz = PureState::from_amplitudes(amps).unwrap();
        assert_abs_diff_eq!(ghz.entanglement_entropy(&[0, 1]).unwrap(), 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_site_lists() {
        let psi = PureState::all_up(3);
        assert!(matches!(psi.partial_trace(&[]), Err(Error::InvalidSites(_))));
        assert!(matches!(psi.partial_trace(&[1, 1]), Err(Error::InvalidSites(_))));
        assert!(matches!(psi.partial_trace(&[2, 1]), Err(Error::InvalidSites(_))));
        assert!(matches!(psi.partial_trace(&[3]), Err(Error::SiteOutOfRange { .. })));
    }

    #[test]
    fn sigma_x_of_plus_state() {
        let h = 1.0 / 2f64.sqrt();
        let plus = [C64::new(h, 0.0), C64::new(h, 0.0)];
        let up = [ONE, ZERO];
        let psi = PureState::product(&[plus, up, plus]);
        assert_abs_diff_eq!(psi.total_sigma_x(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn mixed_from_pure_is_valid() {
        let mut rng = rng_from_seed(3);
        let rho = MixedState::from_pure(&PureState::haar_random(3, &mut rng));
        rho.validate().unwrap();
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-12);
        let mm = MixedState::maximally_mixed(3);
        mm.validate().unwrap();
        assert_abs_diff_eq!(mm.purity(), 1.0 / 8.0, epsilon = 1e-15);
    }
}
