//! Small dense complex linear algebra: fixed 2×2/4×4 operators, row-major
//! square matrices, a Hermitian Jacobi eigensolver and compensated sums.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::tolerances::TOL;

pub type C64 = num_complex::Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major 2×2 complex matrix.
pub type Mat2 = [C64; 4];
/// Row-major 4×4 complex matrix; index `4 * row + col`.
pub type Mat4 = [C64; 16];

pub const IDENTITY2: Mat2 = [ONE, ZERO, ZERO, ONE];

pub fn pauli(i: usize) -> Mat2 {
    let im = C64::new(0.0, 1.0);
    match i {
        0 => IDENTITY2,
        1 => [ZERO, ONE, ONE, ZERO],
        2 => [ZERO, -im, im, ZERO],
        3 => [ONE, ZERO, ZERO, -ONE],
        _ => panic!("pauli index {i} out of range"),
    }
}

pub fn identity4() -> Mat4 {
    let mut m = [ZERO; 16];
    for i in 0..4 {
        m[5 * i] = ONE;
    }
    m
}

/// max |(U†U − I)_ij| for a 4×4 matrix.
pub fn adjoint4(u: &Mat4) -> Mat4 {
    let mut out = [ZERO; 16];
    for r in 0..4 {
        for c in 0..4 {
            out[4 * c + r] = u[4 * r + c].conj();
        }
    }
    out
}

pub fn unitarity_defect4(u: &Mat4) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = ZERO;
            for k in 0..4 {
                acc += u[4 * k + i].conj() * u[4 * k + j];
            }
            if i == j {
                acc -= ONE;
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    norm_sqr(a).sqrt()
}

pub fn scale(a: &mut [C64], s: f64) {
    for x in a {
        *x *= s;
    }
}

/// `y -= c * x`
pub fn sub_scaled(y: &mut [C64], c: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi -= c * xi;
    }
}

/// Neumaier compensated accumulator for long sums of small increments.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_row_major(dim: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), dim * dim, "row-major data has wrong length");
        Self { dim, data }
    }

    /// |v⟩⟨v|
    pub fn outer(v: &[C64]) -> Self {
        let dim = v.len();
        let mut data = Vec::with_capacity(dim * dim);
        for a in v {
            for b in v {
                data.push(a * b.conj());
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn matmul(&self, other: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> SquareMatrix {
        let n = self.dim;
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    /// max |A_ij − conj(A_ji)|
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// A ← (A + A†)/2
    pub fn symmetrize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            let d = self.data[i * n + i];
            self.data[i * n + i] = C64::new(d.re, 0.0);
            for j in (i + 1)..n {
                let avg = (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5;
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg.conj();
            }
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Column `k` (entries `vectors[i * n + k]`) is the eigenvector of `values[k]`.
    pub vectors: Vec<C64>,
}

/// Cyclic complex Jacobi. Only the upper triangle is trusted to be Hermitian.
fn jacobi(matrix: &SquareMatrix, want_vectors: bool) -> HermitianEigen {
    let n = matrix.dim;
    let mut a = matrix.clone();
    a.symmetrize();
    let a = &mut a.data;
    let mut v = if want_vectors { SquareMatrix::identity(n).data } else { Vec::new() };

    let scale = norm(a).max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i * n + j].norm_sqr();
            }
        }
        if off.sqrt() <= TOL.jacobi * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let g = apq.norm();
                if g <= f64::MIN_POSITIVE * 16.0 {
                    continue;
                }
                let phase = apq / g;
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let tau = (aqq - app) / (2.0 * g);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let ph_c = phase.conj();
                // columns: A ← A G with G = diag(1, e^{-iφ}) · rotation
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * c - akq * ph_c * s;
                    a[k * n + q] = akp * s + akq * ph_c * c;
                }
                // rows: A ← G† A
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = apk * c - aqk * phase * s;
                    a[q * n + k] = apk * s + aqk * phase * c;
                }
                a[p * n + q] = ZERO;
                a[q * n + p] = ZERO;
                a[p * n + p] = C64::new(a[p * n + p].re, 0.0);
                a[q * n + q] = C64::new(a[q * n + q].re, 0.0);
                if want_vectors {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = vkp * c - vkq * ph_c * s;
                        v[k * n + q] = vkp * s + vkq * ph_c * c;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].re.total_cmp(&a[j * n + j].re));
    let values = order.iter().map(|&i| a[i * n + i].re).collect();
    let vectors = if want_vectors {
        let mut sorted = vec![ZERO; n * n];
        for (new_col, &old_col) in order.iter().enumerate() {
            for row in 0..n {
                sorted[row * n + new_col] = v[row * n + old_col];
            }
        }
        sorted
    } else {
        Vec::new()
    };
    HermitianEigen { values, vectors }
}

pub fn hermitian_eigenvalues(matrix: &SquareMatrix) -> Vec<f64> {
    jacobi(matrix, false).values
}

pub fn hermitian_eigen(matrix: &SquareMatrix) -> HermitianEigen {
    jacobi(matrix, true)
}

/// In-place modified Gram-Schmidt with one reorthogonalization pass.
/// Returns the norm of the residual before normalization.
pub fn orthonormalize_against(v: &mut [C64], basis: &[&[C64]]) -> f64 {
    for _pass in 0..2 {
        for b in basis {
            let c = dot(b, v);
            sub_scaled(v, c, b);
        }
    }
    let r = norm(v);
    if r > 0.0 {
        scale(v, 1.0 / r);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn jacobi_recovers_known_spectrum() {
        // σ2 ⊗ I + 0.5 σ3 ⊗ σ1 has eigenvalues ±sqrt(1 + 0.25), each twice.
        let s2 = pauli(2);
        let s3 = pauli(3);
        let s1 = pauli(1);
        let mut m = SquareMatrix::zeros(4);
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        let id = if b == d { ONE } else { ZERO };
                        let val = s2[2 * a + c] * id + s3[2 * a + c] * s1[2 * b + d] * 0.5;
                        m.set(2 * a + b, 2 * c + d, val);
                    }
                }
            }
        }
        let eig = hermitian_eigen(&m);
        let e = 1.25f64.sqrt();
        for (got, want) in eig.values.iter().zip([-e, -e, e, e]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        // A v = λ v for every column
        for k in 0..4 {
            for i in 0..4 {
                let mut av = ZERO;
                for j in 0..4 {
                    av += m.get(i, j) * eig.vectors[j * 4 + k];
                }
                let lv = eig.vectors[i * 4 + k] * eig.values[k];
                assert!((av - lv).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut c = CompensatedSum::new();
        c.add(1.0);
        for _ in 0..1_000_000 {
            c.add(1e-16);
        }
        assert_abs_diff_eq!(c.value(), 1.0 + 1e-10, epsilon = 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn jacobi_matches_nalgebra(entries in proptest::collection::vec(-1.0f64..1.0, 128)) {
            let n = 8;
            let mut m = SquareMatrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    m.set(i, j, C64::new(entries[i * n + j], entries[64 + i * n + j]));
                }
            }
            m.symmetrize();
            let oracle = nalgebra::DMatrix::from_fn(n, n, |i, j| {
                let z = m.get(i, j);
                nalgebra::Complex::new(z.re, z.im)
            });
            let mut want: Vec<f64> = oracle.symmetric_eigenvalues().iter().copied().collect();
            want.sort_by(f64::total_cmp);
            let got = hermitian_eigenvalues(&m);
            for (g, w) in got.iter().zip(&want) {
                proptest::prop_assert!((g - w).abs() < 1e-11, "{} {}", g, w);
            }
        }
    }
}
