//! Closed-form measurement-only gap, the spectral width bound, the
//! finite-size extrapolation Δ(L) = Δ + α β^{−L} with error bars, and
//! Pauli-string weights of effective Hamiltonians.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::lyapunov::EffectiveHamiltonian;
use crate::linalg::C64;
use crate::{Error, Result};

/// p_η = (1+η)² / (2(1+η²))
pub fn p_eta(eta: f64) -> f64 {
    (1.0 + eta) * (1.0 + eta) / (2.0 * (1.0 + eta * eta))
}

/// Δ*(η) = (p_η − ½) ln(p_η / (1 − p_η)), the gap without unitaries.
pub fn measurement_only_gap(eta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::OutOfRange("eta must lie in [0, 1]"));
    }
    if eta == 1.0 {
        return Err(Error::DivergentGap);
    }
    let p = p_eta(eta);
    Ok((p - 0.5) * (p / (1.0 - p)).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthBound {
    pub width: f64,
    /// L ln((1+η)/(1−η)); +∞ at η = 1.
    pub bound: f64,
    pub satisfied: bool,
    /// η = 1: the bound is infinite and holds trivially.
    pub trivial: bool,
}

/// ε_N − ε_1 against L ln((1+η)/(1−η)).
pub fn width_bound(spectrum: &[f64], eta: f64, num_qubits: usize) -> Result<WidthBound> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::OutOfRange("eta must lie in [0, 1]"));
    }
    let lo = spectrum.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = spectrum.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if spectrum.is_empty() { 0.0 } else { hi - lo };
    if eta == 1.0 {
        return Ok(WidthBound { width, bound: f64::INFINITY, satisfied: true, trivial: true });
    }
    let bound = num_qubits as f64 * ((1.0 + eta) / (1.0 - eta)).ln();
    Ok(WidthBound { width, bound, satisfied: width <= bound + 1e-9, trivial: false })
}

pub fn hamiltonian_width_bound(ham: &EffectiveHamiltonian) -> Result<WidthBound> {
    width_bound(&ham.spectrum, ham.eta, ham.num_qubits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Gapless,
    Gapped,
}

/// One (L, Δ(η, L)) input point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub num_qubits: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// f(η, L) = d · Δ(η, L)
    pub d: f64,
    /// Grid points in b for the error-bar sweep.
    pub resolution: usize,
    /// Upper end of the β search.
    pub beta_max: f64,
    /// Grid points in ln β before golden-section refinement.
    pub beta_grid: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { d: 3e-2, resolution: 200, beta_max: 1e3, beta_grid: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapFitResult {
    pub eta: f64,
    pub gap_inf: f64,
    pub alpha: f64,
    pub beta: f64,
    pub theta_min: f64,
    pub err_lo: f64,
    pub err_hi: f64,
    pub phase: Phase,
    pub d: f64,
    pub inputs: Vec<GapPoint>,
}

impl GapFitResult {
    pub fn predict(&self, num_qubits: usize) -> f64 {
        self.gap_inf + self.alpha * self.beta.powi(-(num_qubits as i32))
    }
}

struct Weighted {
    sizes: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
    d_bound: f64,
}

impl Weighted {
    fn new(points: &[GapPoint], d: f64) -> Self {
        let sizes = points.iter().map(|p| p.num_qubits as f64).collect();
        let values: Vec<f64> = points.iter().map(|p| p.gap).collect();
        let weights = values.iter().map(|&v| 1.0 / (d * v * d * v)).collect();
        let d_bound = values.iter().copied().fold(f64::INFINITY, f64::min);
        Self { sizes, values, weights, d_bound }
    }

    fn basis(&self, beta: f64) -> Vec<f64> {
        self.sizes.iter().map(|&l| (-l * beta.ln()).exp()).collect()
    }

    fn theta(&self, d: f64, a: f64, basis: &[f64]) -> f64 {
        self.values
            .iter()
            .zip(basis)
            .zip(&self.weights)
            .map(|((&y, &g), &w)| {
                let r = y - d - a * g;
                w * r * r
            })
            .sum()
    }

    /// Weighted least squares for (D, a) at fixed β with |D| ≤ min Δ.
    fn solve(&self, beta: f64) -> (f64, f64, f64) {
        let g = self.basis(beta);
        let (mut sw, mut sg, mut sgg, mut sy, mut sgy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((&y, &gi), &w) in self.values.iter().zip(&g).zip(&self.weights) {
            sw += w;
            sg += w * gi;
            sgg += w * gi * gi;
            sy += w * y;
            sgy += w * gi * y;
        }
        // a from the component of g orthogonal to the constant.
        let gbar = sg / sw;
        let ybar = sy / sw;
        let var_g = sgg - sg * gbar;
        let cov = sgy - sg * ybar;
        let mut a = if var_g > 1e-300 { cov / var_g } else { 0.0 };
        let mut d = ybar - a * gbar;
        if d.abs() > self.d_bound {
            d = d.clamp(-self.d_bound, self.d_bound);
            a = if sgg > 1e-300 { (sgy - d * sg) / sgg } else { 0.0 };
        }
        let theta = self.theta(d, a, &g);
        (d, a, theta)
    }
}

/// Minimizes Θ[C] = Σ_L (Δ(L) − D − a b^{−L})² / (d Δ(L))² over
/// |D| ≤ min_L Δ, b ∈ (1, beta_max]. For fixed b the problem is linear in
/// (D, a); b is found by a grid in ln b and golden-section refinement.
/// Error bars are the extreme D with Θ̃[C] ≤ Θ[Γ] for a ∈ (0, 2α),
/// b ∈ (0, 2β). At fixed b, Θ̃ is quadratic in (D, a), so the extreme D is
/// found in closed form; b is scanned on a grid and refined.
pub fn fit_gap_extrapolation(eta: f64, data: &[GapPoint], config: &FitConfig) -> Result<GapFitResult> {
    if !(config.d > 0.0) {
        return Err(Error::OutOfRange("d must be positive"));
    }
    if config.resolution == 0 || config.beta_grid < 3 || !(config.beta_max > 1.0) {
        return Err(Error::OutOfRange("fit grid settings are invalid"));
    }
    let mut sizes: Vec<usize> = data.iter().map(|p| p.num_qubits).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 4 || sizes.len() != data.len() {
        return Err(Error::DegenerateFit("need at least four distinct system sizes"));
    }
    if data.iter().any(|p| !(p.gap > 0.0) || !p.gap.is_finite()) {
        return Err(Error::DegenerateFit("all gaps must be positive"));
    }
    let w = Weighted::new(data, config.d);

    let x_lo = 1e-4f64;
    let x_hi = config.beta_max.ln();
    let n = config.beta_grid;
    let xs: Vec<f64> = (0..n).map(|i| x_lo * (x_hi / x_lo).powf(i as f64 / (n - 1) as f64)).collect();
    let objective = |x: f64| w.solve(x.exp()).2;
    let mut best = 0;
    let mut best_theta = objective(xs[0]);
    for (i, &x) in xs.iter().enumerate().skip(1) {
        let th = objective(x);
        if th < best_theta * (1.0 - 1e-9) - 1e-20 {
            best = i;
            best_theta = th;
        }
    }
    let refined = golden_section(objective, xs[best.saturating_sub(1)], xs[(best + 1).min(n - 1)], 200);
    let mut x_best = xs[best];
    if objective(refined) <= best_theta {
        x_best = refined;
    }
    let beta = x_best.exp();
    let (gap_inf, alpha, theta_min) = w.solve(beta);

    let (err_lo, err_hi) = error_bars(&w, gap_inf, alpha, beta, theta_min, config.resolution);
    Ok(GapFitResult {
        eta,
        gap_inf,
        alpha,
        beta,
        theta_min,
        err_lo,
        err_hi,
        phase: if err_lo < 0.0 { Phase::Gapless } else { Phase::Gapped },
        d: config.d,
        inputs: data.to_vec(),
    })
}

/// Θ̃ as a quadratic in z = (e, a) with e = D − D_Γ at fixed b:
/// Θ̃ = zᵀHz − 2vᵀz + s.
struct Quadratic {
    h: [f64; 3],
    v: [f64; 2],
    s: f64,
}

impl Quadratic {
    fn new(w: &Weighted, alpha: f64, beta: f64, b: f64) -> Self {
        let hb = w.basis(b);
        let cb = w.basis(beta);
        let (mut h, mut v, mut s) = ([0.0; 3], [0.0; 2], 0.0);
        for ((&hl, &gl), &wl) in hb.iter().zip(&cb).zip(&w.weights) {
            let c = alpha * gl;
            h[0] += wl;
            h[1] += wl * hl;
            h[2] += wl * hl * hl;
            v[0] += wl * c;
            v[1] += wl * hl * c;
            s += wl * c * c;
        }
        Self { h, v, s }
    }

    /// Roots in e of Θ̃(e, a) = θ for fixed a.
    fn e_range_at(&self, a: f64, theta: f64) -> Option<(f64, f64)> {
        let qa = self.h[0];
        let qb = self.h[1] * a - self.v[0];
        let qc = self.h[2] * a * a - 2.0 * self.v[1] * a + self.s - theta;
        let disc = qb * qb - qa * qc;
        if !(disc >= 0.0) {
            return None;
        }
        let r = disc.sqrt();
        Some(((-qb - r) / qa, (-qb + r) / qa))
    }

    /// Extreme e (sign −1: minimum, +1: maximum) over Θ̃ ≤ θ with a in
    /// [a_lo, a_hi].
    fn extreme_e(&self, theta: f64, a_lo: f64, a_hi: f64, sign: f64) -> Option<f64> {
        let [h00, h01, h11] = self.h;
        let det = h00 * h11 - h01 * h01;
        if !(det > 1e-13 * h00 * h11) {
            // b^{−L} is indistinguishable from a constant: a only shifts D.
            let mid = 0.5 * (a_lo + a_hi);
            return self.e_range_at(mid, theta).map(|(lo, hi)| if sign < 0.0 { lo } else { hi });
        }
        let inv = [h11 / det, -h01 / det, h00 / det];
        let e0 = inv[0] * self.v[0] + inv[1] * self.v[1];
        let a0 = inv[1] * self.v[0] + inv[2] * self.v[1];
        let q_min = self.s - (self.v[0] * e0 + self.v[1] * a0);
        let rho = theta - q_min;
        if !(rho >= 0.0) {
            return None;
        }
        let step = (rho / inv[0]).sqrt();
        let a_ext = a0 + sign * step * inv[1];
        if (a_lo..=a_hi).contains(&a_ext) {
            return Some(e0 + sign * step * inv[0]);
        }
        let a_b = a_ext.clamp(a_lo, a_hi);
        self.e_range_at(a_b, theta).map(|(lo, hi)| if sign < 0.0 { lo } else { hi })
    }
}

fn error_bars(w: &Weighted, d0: f64, alpha: f64, beta: f64, theta: f64, resolution: usize) -> (f64, f64) {
    let (a_lo, a_hi) = if alpha >= 0.0 { (0.0, 2.0 * alpha) } else { (2.0 * alpha, 0.0) };
    let extreme = |b: f64, sign: f64| -> Option<f64> {
        let q = Quadratic::new(w, alpha, beta, b);
        q.extreme_e(theta, a_lo, a_hi, sign).map(|e| (d0 + e).clamp(-w.d_bound, w.d_bound))
    };
    // The admissible b form an interval around β; find its ends.
    let feasible = |b: f64| extreme(b, -1.0).is_some();
    let edge = |outside: f64| {
        if feasible(outside) {
            return outside;
        }
        let (mut inside, mut outside) = (beta, outside);
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if mid == inside || mid == outside {
                break;
            }
            if feasible(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    let b_min = edge(1e-6 * beta);
    let b_max = edge(2.0 * beta);
    let mut grid: Vec<f64> = (0..resolution).map(|k| b_min + (b_max - b_min) * k as f64 / (resolution - 1).max(1) as f64).collect();
    grid.push(beta);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut bounds = [d0, d0];
    for (slot, sign) in [(0usize, -1.0), (1usize, 1.0)] {
        // objective to minimize: sign · D
        let score = |b: f64| extreme(b, sign).map_or(f64::INFINITY, |d| -sign * d);
        let scores: Vec<f64> = grid.iter().map(|&b| score(b)).collect();
        let mut sc = scores.iter().copied().fold(f64::INFINITY, f64::min);
        // Refine around every local minimum on the grid.
        for k in 0..grid.len() {
            let left = if k == 0 { f64::INFINITY } else { scores[k - 1] };
            let right = scores.get(k + 1).copied().unwrap_or(f64::INFINITY);
            if !(scores[k].is_finite() && scores[k] <= left && scores[k] <= right) {
                continue;
            }
            let lo = grid[k.saturating_sub(1)];
            let hi = grid[(k + 1).min(grid.len() - 1)];
            if hi > lo {
                sc = sc.min(score(golden_section(score, lo, hi, 200)));
            }
        }
        if sc.is_finite() {
            let d = -sign * sc;
            bounds[slot] = if sign < 0.0 { bounds[slot].min(d) } else { bounds[slot].max(d) };
        }
    }
    (bounds[0], bounds[1])
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iterations: usize) -> f64 {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut e = a + ratio * (b - a);
    let (mut fc, mut fe) = (f(c), f(e));
    for _ in 0..iterations {
        if (b - a).abs() <= 1e-15 * b.abs().max(a.abs()) {
            break;
        }
        if fc < fe {
            b = e;
            e = c;
            fe = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + ratio * (b - a);
            fe = f(e);
        }
    }
    0.5 * (a + b)
}

/// W^r_i for i = 1, 2, 3 (rows) and r = 0..L (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliWeightProfile {
    pub eta: f64,
    pub num_qubits: usize,
    pub t: u64,
    pub block_length: u64,
    pub c: usize,
    /// `weights[i - 1][r]`
    pub weights: [Vec<f64>; 3],
}

/// P v for P = σ_i on sites 0..=r.
pub fn apply_pauli_string(v: &[C64], i: usize, r: usize, num_qubits: usize) -> Vec<C64> {
    let mask: usize = (0..=r).map(|s| 1usize << (num_qubits - 1 - s)).sum();
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    let odd = |x: usize| (x & mask).count_ones() % 2 == 1;
    let i_pow = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)][(r + 1) % 4];
    for (x, &a) in v.iter().enumerate() {
        match i {
            1 => out[x ^ mask] = a,
            2 => out[x ^ mask] = if odd(x) { -a * i_pow } else { a * i_pow },
            _ => out[x] = if odd(x) { -a } else { a },
        }
    }
    out
}

/// W^r_i = (1/c) Σ |tr(P_i^r K)| / N over the given snapshots.
pub fn pauli_weight_profile(hams: &[EffectiveHamiltonian]) -> Result<PauliWeightProfile> {
    let first = hams.first().ok_or(Error::EmptySeries("no effective Hamiltonians"))?;
    let l = first.num_qubits;
    if hams.iter().any(|h| h.num_qubits != l || h.block_length != first.block_length) {
        return Err(Error::DimensionMismatch { expected: l, actual: hams.iter().map(|h| h.num_qubits).find(|&x| x != l).unwrap_or(l) });
    }
    if hams.iter().any(|h| h.spectrum.len() != 1usize << l) {
        return Err(Error::OutOfRange("effective Hamiltonian needs the full spectrum"));
    }
    let n = (1usize << l) as f64;
    let c = hams.len() as f64;
    let mut weights = [vec![0.0; l], vec![0.0; l], vec![0.0; l]];
    for h in hams {
        for (i, row) in weights.iter_mut().enumerate() {
            for (r, w) in row.iter_mut().enumerate() {
                let tr = h.trace_with(|v| apply_pauli_string(v, i + 1, r, l));
                *w += tr.norm() / n / c;
            }
        }
    }
    Ok(PauliWeightProfile {
        eta: first.eta,
        num_qubits: l,
        t: hams.last().map_or(0, |h| h.time),
        block_length: first.block_length,
        c: hams.len(),
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli, SquareMatrix};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn synthetic(gap: f64, alpha: f64, beta: f64) -> Vec<GapPoint> {
        (10..=22)
            .step_by(2)
            .map(|l| GapPoint { num_qubits: l, gap: gap + alpha * beta.powi(-(l as i32)) })
            .collect()
    }

    fn noisy(points: Vec<GapPoint>) -> Vec<GapPoint> {
        points
            .into_iter()
            .enumerate()
            .map(|(i, p)| GapPoint { gap: p.gap * (1.0 + 0.01 * ((i * 7 % 5) as f64 - 2.0)), ..p })
            .collect()
    }

    #[test]
    fn closed_form_values() {
        assert_abs_diff_eq!(measurement_only_gap(0.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(measurement_only_gap(0.5).unwrap(), 0.4 * 9f64.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(measurement_only_gap(0.5).unwrap(), 0.878_890, epsilon = 1e-6);
        assert!(matches!(measurement_only_gap(1.0), Err(Error::DivergentGap)));
        assert!(measurement_only_gap(-0.1).is_err());
    }

    #[test]
    fn width_bound_values() {
        let wb = width_bound(&[0.0, 0.0], 0.0, 4).unwrap();
        assert_eq!((wb.width, wb.bound), (0.0, 0.0));
        assert!(wb.satisfied);
        assert_abs_diff_eq!(width_bound(&[0.0], 0.5, 4).unwrap().bound, 4.0 * 3f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(width_bound(&[0.0], 0.5, 4).unwrap().bound, 4.394_449, epsilon = 1e-6);
        let wb = width_bound(&[0.0, 100.0], 1.0, 4).unwrap();
        assert!(wb.satisfied && wb.trivial);
        assert!(!width_bound(&[0.0, 5.0], 0.5, 4).unwrap().satisfied);
    }

    #[test]
    fn synthetic_fit_recovery() {
        let fit = fit_gap_extrapolation(0.3, &synthetic(0.05, 1.2, 3.0), &FitConfig::default()).unwrap();
        assert_abs_diff_eq!(fit.gap_inf, 0.05, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.alpha, 1.2, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.beta, 3.0, epsilon = 1e-6);
        assert!(fit.err_lo <= fit.gap_inf && fit.gap_inf <= fit.err_hi);
        assert_eq!(fit.phase, Phase::Gapped);
    }

    #[test]
    fn constant_data_fit() {
        let data: Vec<GapPoint> = (10..=22).step_by(2).map(|l| GapPoint { num_qubits: l, gap: 0.07 }).collect();
        let fit = fit_gap_extrapolation(0.5, &data, &FitConfig::default()).unwrap();
        assert_abs_diff_eq!(fit.gap_inf, 0.07, epsilon = 1e-9);
        assert!(fit.alpha.abs() < 1e-9, "{}", fit.alpha);
        assert_eq!(fit.phase, Phase::Gapped);
    }

    #[test]
    fn straddling_fit_is_gapless() {
        // slow decay towards ~0 with ±d/2 scatter
        let data: Vec<GapPoint> = (10..=22)
            .step_by(2)
            .enumerate()
            .map(|(k, l)| {
                let clean = 0.5 * 1.25f64.powi(-(l as i32));
                let noise = if k % 2 == 0 { 1.015 } else { 0.985 };
                GapPoint { num_qubits: l, gap: clean * noise }
            })
            .collect();
        let fit = fit_gap_extrapolation(0.1, &data, &FitConfig::default()).unwrap();
        assert!(fit.err_lo < 0.0, "{fit:?}");
        assert_eq!(fit.phase, Phase::Gapless);
        assert!(fit.err_lo <= fit.gap_inf && fit.gap_inf <= fit.err_hi);
    }

    #[test]
    fn fit_input_validation() {
        let few = &synthetic(0.05, 1.2, 3.0)[..3];
        assert!(matches!(fit_gap_extrapolation(0.3, few, &FitConfig::default()), Err(Error::DegenerateFit(_))));
        let mut bad = synthetic(0.05, 1.2, 3.0);
        bad[2].gap = -1.0;
        assert!(matches!(fit_gap_extrapolation(0.3, &bad, &FitConfig::default()), Err(Error::DegenerateFit(_))));
    }

    fn ham_from_matrix(l: usize, k: &SquareMatrix) -> EffectiveHamiltonian {
        let eig = crate::linalg::hermitian_eigen(k);
        let n = 1usize << l;
        let vectors = (0..n).map(|c| (0..n).map(|r| eig.vectors[r * n + c]).collect()).collect();
        EffectiveHamiltonian::from_unsorted(0.0, l, 1, 1, eig.values, vectors, false)
    }

    fn sigma3_on_first(l: usize) -> SquareMatrix {
        let n = 1usize << l;
        let mut k = SquareMatrix::zeros(n);
        for x in 0..n {
            let s = if x >> (l - 1) & 1 == 0 { 1.0 } else { -1.0 };
            k.set(x, x, C64::new(s, 0.0));
        }
        k
    }

    #[test]
    fn pauli_weights_of_single_sigma3() {
        let l = 3;
        let p = pauli_weight_profile(&[ham_from_matrix(l, &sigma3_on_first(l))]).unwrap();
        for i in 0..3 {
            for r in 0..l {
                let expect = if i == 2 && r == 0 { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(p.weights[i][r], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn pauli_weights_of_identity_vanish() {
        let l = 3;
        let mut k = SquareMatrix::identity(8);
        crate::linalg::scale(k.as_mut_slice(), 2.5);
        let p = pauli_weight_profile(&[ham_from_matrix(l, &k)]).unwrap();
        assert!(p.weights.iter().flatten().all(|&w| w < 1e-12));
    }

    #[test]
    fn pauli_string_matches_kronecker_product() {
        let l = 3;
        let n = 8;
        let v: Vec<C64> = (0..n).map(|x| C64::new(x as f64 + 1.0, 0.5 * x as f64)).collect();
        for i in 1..=3 {
            for r in 0..l {
                let mut dense = vec![C64::new(1.0, 0.0)];
                let mut dim = 1;
                for site in 0..l {
                    let m = if site <= r { pauli(i) } else { pauli(0) };
                    let mut next = vec![C64::new(0.0, 0.0); dim * dim * 4];
                    for a in 0..dim {
                        for b in 0..dim {
                            for c in 0..2 {
                                for d in 0..2 {
                                    next[(2 * a + c) * 2 * dim + 2 * b + d] = dense[a * dim + b] * m[2 * c + d];
                                }
                            }
                        }
                    }
                    dense = next;
                    dim *= 2;
                }
                let got = apply_pauli_string(&v, i, r, l);
                for x in 0..n {
                    let expect: C64 = (0..n).map(|y| dense[x * n + y] * v[y]).sum();
                    assert!((got[x] - expect).norm() < 1e-12);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn measurement_only_gap_is_monotone(a in 0.0f64..0.99, b in 0.0f64..0.99) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-6);
            prop_assert!(measurement_only_gap(lo).unwrap() < measurement_only_gap(hi).unwrap());
        }

        #[test]
        fn fit_is_exactly_covariant_under_binary_scaling(n in -20i32..20, gap in 0.01f64..0.2, alpha in 0.2f64..2.0, beta in 1.3f64..4.0) {
            let k = 2f64.powi(n);
            let config = FitConfig { resolution: 40, ..FitConfig::default() };
            let data = noisy(synthetic(gap, alpha, beta));
            let scaled: Vec<GapPoint> = data.iter().map(|p| GapPoint { gap: p.gap * k, ..*p }).collect();
            let f1 = fit_gap_extrapolation(0.3, &data, &config).unwrap();
            let f2 = fit_gap_extrapolation(0.3, &scaled, &config).unwrap();
            prop_assert_eq!(f2.gap_inf, k * f1.gap_inf);
            prop_assert_eq!(f2.alpha, k * f1.alpha);
            prop_assert_eq!(f2.err_lo, k * f1.err_lo);
            prop_assert_eq!(f2.err_hi, k * f1.err_hi);
            prop_assert_eq!(f2.beta, f1.beta);
            prop_assert_eq!(f2.theta_min, f1.theta_min);
            prop_assert_eq!(f1.phase, f2.phase);
        }

        #[test]
        fn fit_is_scale_consistent(k in 0.01f64..100.0, gap in 0.01f64..0.2, alpha in 200.0f64..2000.0, beta in 1.3f64..1.8) {
            let config = FitConfig { resolution: 40, ..FitConfig::default() };
            let data = noisy(synthetic(gap, alpha, beta));
            let scaled: Vec<GapPoint> = data.iter().map(|p| GapPoint { gap: p.gap * k, ..*p }).collect();
            let f1 = fit_gap_extrapolation(0.3, &data, &config).unwrap();
            let f2 = fit_gap_extrapolation(0.3, &scaled, &config).unwrap();
            let unit = scaled.iter().map(|p| p.gap).fold(f64::INFINITY, f64::min);
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-6 * x.abs().max(y.abs()).max(unit);
            prop_assert!(close(f2.gap_inf, k * f1.gap_inf), "{} {}", f2.gap_inf, k * f1.gap_inf);
            prop_assert!(close(f2.alpha, k * f1.alpha), "{} {}", f2.alpha, k * f1.alpha);
            prop_assert!(close(f2.err_lo, k * f1.err_lo), "{} {}", f2.err_lo, k * f1.err_lo);
            prop_assert!(close(f2.err_hi, k * f1.err_hi), "{} {}", f2.err_hi, k * f1.err_hi);
            prop_assert!((f2.beta - f1.beta).abs() <= 1e-6 * f1.beta);
            prop_assert_eq!(f1.phase, f2.phase);
        }

        #[test]
        fn pauli_weights_ignore_identity_shift(shift in -5.0f64..5.0, seed in 0u64..1000) {
            let l = 3;
            let c = crate::channel::MonitoredCircuit::new(0.3, l, seed).unwrap();
            let ham = crate::lyapunov::run_full_spectrum(c, &crate::lyapunov::SpectrumConfig { steps: 8, ..Default::default() }).unwrap().pop().unwrap();
            let mut shifted = ham.clone();
            for e in &mut shifted.spectrum {
                *e += shift;
            }
            let a = pauli_weight_profile(&[ham]).unwrap();
            let b = pauli_weight_profile(&[shifted]).unwrap();
            for (x, y) in a.weights.iter().flatten().zip(b.weights.iter().flatten()) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }
    }
}
