//! Mixed-state trajectories started from the maximally mixed state.
//!
//! Two representations are provided. [`evolve_mixed_step`] updates a dense
//! density matrix and serves small chains. [`FactoredMixedState`] keeps
//! ρ ∝ Σ_i e^{2 s_i} |c_i⟩⟨c_i| with unit columns and log scales, so that
//! eigenvalue ratios far below machine precision remain resolvable.
//!
//! The factored state starts as the explicit square root A = V_t, one column
//! per initial basis state. Once ln(λ1/λ2) passes `switch_log_ratio` the
//! leading directions are extracted by subspace iteration and, from then on,
//! the columns are kept orthonormal by graded one-sided Jacobi rotations,
//! each pair rotated at its own scale. Directions weaker than λ2 by more than
//! `truncation` (natural log) are dropped.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{MonitoredCircuit, Outcome, StepOperator};
use crate::linalg::{self, dot, norm, scale, sub_scaled, SquareMatrix, C64, ZERO};
use crate::qstate::{bit_of, gate_kernel, MixedState};
use crate::seed::Domain;
use crate::tolerances::TOL;
use crate::{Error, Result};

/// One step of the dense mixed trajectory: ρ ← U ρ U†, then each site in
/// order is measured with p(ω) = tr(M_ω ρ M_ω†) and ρ is renormalized.
/// Outcomes come from the same uniform draws as the pure-state step.
pub fn evolve_mixed_step(rho: &mut MixedState, circuit: &MonitoredCircuit, t: u64) -> Result<Vec<Outcome>> {
    if t == 0 {
        return Err(Error::OutOfRange("time steps are counted from 1"));
    }
    let l = circuit.num_qubits();
    if rho.num_qubits() != l {
        return Err(Error::DimensionMismatch { expected: l, actual: rho.num_qubits() });
    }
    for g in circuit.unitary_layer(t) {
        rho.apply_two_qubit_gate(&g.gate, g.left)?;
    }
    let kraus = circuit.kraus;
    let mut outcomes = Vec::with_capacity(l);
    for site in 0..l {
        let plus = rho.diagonal_weight(kraus.plus, site);
        let minus = rho.diagonal_weight(kraus.minus, site);
        let outcome = circuit.decide(t, site, plus / (plus + minus));
        rho.apply_diagonal_operator(kraus.diagonal(outcome), site)?;
        outcomes.push(outcome);
    }
    rho.matrix_mut().symmetrize();
    Ok(outcomes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurificationConfig {
    /// First step included in the Δ_t average.
    pub window_start: u64,
    /// Last step included (and simulated).
    pub window_end: u64,
    /// Directions with ln(λ2/λ_i) above this are discarded.
    pub truncation: f64,
    /// ln(λ1/λ2) at which the explicit square root is replaced by the
    /// orthonormal factorization.
    pub switch_log_ratio: f64,
    /// Block size of the subspace iteration that tracks λ1, λ2.
    pub tracked: usize,
}

impl Default for PurificationConfig {
    fn default() -> Self {
        Self { window_start: 20, window_end: 300, truncation: 30.0, switch_log_ratio: 16.0, tracked: 4 }
    }
}

impl PurificationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_start == 0 || self.window_end < self.window_start {
            return Err(Error::OutOfRange("purification window must satisfy 1 <= start <= end"));
        }
        if !(self.truncation > 0.0) || !(self.switch_log_ratio >= 0.0) {
            return Err(Error::OutOfRange("truncation and switch ratio must be positive"));
        }
        if self.tracked < 2 {
            return Err(Error::OutOfRange("at least two tracked directions are needed"));
        }
        Ok(())
    }
}

const ORTHO_TOL: f64 = 1e-13;
const GRADED_CUTOFF: f64 = 20.0;
const MAX_SWEEPS: usize = 80;
const RITZ_TOL_LOOSE: f64 = 1e-6;
const RITZ_TOL_TIGHT: f64 = 1e-12;
const MAX_RITZ_ITER: usize = 400;

/// ρ ∝ Σ_i e^{2 s_i} |c_i⟩⟨c_i| with unit columns `c_i`.
#[derive(Debug, Clone)]
pub struct FactoredMixedState {
    num_qubits: usize,
    columns: Vec<Vec<C64>>,
    log_scales: Vec<f64>,
    orthonormal: bool,
    /// Ritz vectors tracking the top of the spectrum in the explicit phase.
    tracked: Vec<Vec<C64>>,
    /// Unnormalized ln λ of `tracked`, descending.
    tracked_log: Vec<f64>,
    tracked_tol: f64,
}

impl FactoredMixedState {
    /// I / N, stored as the identity square root.
    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let n = 1usize << num_qubits;
        let columns = (0..n)
            .map(|i| {
                let mut c = vec![ZERO; n];
                c[i] = linalg::ONE;
                c
            })
            .collect();
        Self {
            num_qubits,
            columns,
            log_scales: vec![0.0; n],
            orthonormal: n == 1,
            tracked: Vec::new(),
            tracked_log: Vec::new(),
            tracked_tol: f64::INFINITY,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Number of stored columns.
    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    /// True once the columns are kept as an orthonormal eigenbasis.
    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }

    /// ln tr of the unnormalized ρ.
    pub fn log_trace(&self) -> f64 {
        log_sum_exp(self.log_scales.iter().map(|&s| 2.0 * s))
    }

    /// One step with ρ-Born sampling, then re-orthogonalization or, in the
    /// explicit phase, the switch test.
    pub fn step(&mut self, circuit: &MonitoredCircuit, t: u64, config: &PurificationConfig) -> Result<Vec<Outcome>> {
        if t == 0 {
            return Err(Error::OutOfRange("time steps are counted from 1"));
        }
        let l = self.num_qubits;
        if circuit.num_qubits() != l {
            return Err(Error::DimensionMismatch { expected: l, actual: circuit.num_qubits() });
        }
        let gates = circuit.unitary_layer(t);
        for col in &mut self.columns {
            for g in &gates {
                gate_kernel(col, l, &g.gate, g.left);
            }
        }

        let n = 1usize << l;
        let s_max = self.log_scales.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut weights = vec![0.0; n];
        for (col, &s) in self.columns.iter().zip(&self.log_scales) {
            let w = (2.0 * (s - s_max)).exp();
            for (acc, a) in weights.iter_mut().zip(col) {
                *acc += w * a.norm_sqr();
            }
        }
        let kraus = circuit.kraus;
        let mut outcomes = Vec::with_capacity(l);
        for site in 0..l {
            let mask = 1usize << bit_of(site, l);
            let (mut up, mut down) = (0.0, 0.0);
            for (x, &w) in weights.iter().enumerate() {
                if x & mask == 0 {
                    up += w;
                } else {
                    down += w;
                }
            }
            let weight = |d: [f64; 2]| up * d[0] * d[0] + down * d[1] * d[1];
            let (plus, minus) = (weight(kraus.plus), weight(kraus.minus));
            let outcome = circuit.decide(t, site, plus / (plus + minus));
            let d = kraus.diagonal(outcome);
            let kept = weight(d);
            if !(kept > TOL.annihilation * (up + down)) {
                return Err(Error::TrajectoryAnnihilated { site, norm: kept / (up + down) });
            }
            let inv = 1.0 / kept;
            for (x, w) in weights.iter_mut().enumerate() {
                let di = d[usize::from(x & mask != 0)];
                *w *= di * di * inv;
            }
            outcomes.push(outcome);
        }

        let op = StepOperator::new(l, gates, &kraus, &outcomes);
        let diagonal = op.diagonal();
        for (col, s) in self.columns.iter_mut().zip(self.log_scales.iter_mut()) {
            for (a, &d) in col.iter_mut().zip(diagonal) {
                *a *= d;
            }
            *s += normalize(col);
        }
        self.drop_dead_columns();
        if self.columns.is_empty() {
            return Err(Error::TrajectoryAnnihilated { site: 0, norm: 0.0 });
        }

        if self.orthonormal {
            graded_jacobi(&mut self.columns, &mut self.log_scales);
            self.drop_dead_columns();
            self.sort_and_truncate(config.truncation);
        } else {
            for y in &mut self.tracked {
                op.apply_normalized(y);
            }
            self.tracked_tol = f64::INFINITY;
            self.refresh_tracked(circuit, t, config.tracked, RITZ_TOL_LOOSE);
            if self.tracked_log.len() >= 2 && self.tracked_log[0] - self.tracked_log[1] > config.switch_log_ratio {
                self.factorize(circuit, t, config);
            }
        }
        Ok(outcomes)
    }

    /// Normalized (ln λ1, ln λ2). ln λ2 is −∞ for a pure state.
    pub fn log_top_two(&mut self) -> [f64; 2] {
        let log_tr = self.log_trace();
        if self.orthonormal {
            let second = self.log_scales.get(1).map_or(f64::NEG_INFINITY, |&s| 2.0 * s);
            return [2.0 * self.log_scales[0] - log_tr, second - log_tr];
        }
        if self.tracked_tol > RITZ_TOL_TIGHT {
            let p = self.tracked.len().max(2);
            self.refine_tracked(p, RITZ_TOL_TIGHT);
        }
        let second = self.tracked_log.get(1).copied().unwrap_or(f64::NEG_INFINITY);
        [self.tracked_log[0] - log_tr, second - log_tr]
    }

    /// Fidelity of ρ with the projector on its leading eigenvector, λ1.
    pub fn rank_one_fidelity(&mut self) -> f64 {
        self.log_top_two()[0].exp()
    }

    /// Dense normalized density matrix.
    pub fn to_mixed_state(&self) -> MixedState {
        let n = 1usize << self.num_qubits;
        let s_max = self.log_scales.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut m = SquareMatrix::zeros(n);
        let data = m.as_mut_slice();
        for (col, &s) in self.columns.iter().zip(&self.log_scales) {
            let w = (2.0 * (s - s_max)).exp();
            for i in 0..n {
                let ci = col[i] * w;
                for j in 0..n {
                    data[i * n + j] += ci * col[j].conj();
                }
            }
        }
        let tr = m.trace().re;
        scale(m.as_mut_slice(), 1.0 / tr);
        m.symmetrize();
        MixedState::from_matrix(self.num_qubits, m.clone()).unwrap_or_else(|_| {
            let mut rho = MixedState::maximally_mixed(self.num_qubits);
            *rho.matrix_mut() = m;
            rho
        })
    }

    fn drop_dead_columns(&mut self) {
        let mut i = 0;
        while i < self.columns.len() {
            if self.log_scales[i].is_finite() {
                i += 1;
            } else {
                self.columns.swap_remove(i);
                self.log_scales.swap_remove(i);
            }
        }
    }

    fn sort_and_truncate(&mut self, truncation: f64) {
        let mut order: Vec<usize> = (0..self.columns.len()).collect();
        order.sort_by(|&a, &b| self.log_scales[b].total_cmp(&self.log_scales[a]));
        let cutoff = order.get(1).map_or(f64::NEG_INFINITY, |&i| self.log_scales[i] - 0.5 * truncation);
        let mut columns = Vec::with_capacity(order.len());
        let mut scales = Vec::with_capacity(order.len());
        for (rank, &i) in order.iter().enumerate() {
            if rank < 2 || self.log_scales[i] >= cutoff {
                columns.push(core::mem::take(&mut self.columns[i]));
                scales.push(self.log_scales[i]);
            }
        }
        self.columns = columns;
        self.log_scales = scales;
    }

    fn start_vectors(&self, circuit: &MonitoredCircuit, t: u64, p: usize) -> Vec<Vec<C64>> {
        let n = 1usize << self.num_qubits;
        let mut rng = circuit.seeds.rng(Domain::Mixed, t, p as u64);
        let mut start: Vec<Vec<C64>> = self.tracked.iter().take(p).cloned().collect();
        while start.len() < p {
            start.push(
                (0..n)
                    .map(|_| C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)))
                    .collect(),
            );
        }
        start
    }

    fn refresh_tracked(&mut self, circuit: &MonitoredCircuit, t: u64, p: usize, tol: f64) {
        let p = p.min(self.columns.len());
        if self.tracked.len() < p {
            self.tracked = self.start_vectors(circuit, t, p);
        }
        self.refine_tracked(p, tol);
    }

    fn refine_tracked(&mut self, p: usize, tol: f64) {
        let mut start = core::mem::take(&mut self.tracked);
        if start.is_empty() {
            start = self.columns.iter().take(p).cloned().collect();
        }
        let ritz = subspace_iteration(&self.columns, &self.log_scales, start, 2, tol, 1);
        self.tracked = ritz.vectors;
        self.tracked_log = ritz.log_values;
        self.tracked_tol = tol;
    }

    /// Explicit square root → orthonormal leading directions.
    fn factorize(&mut self, circuit: &MonitoredCircuit, t: u64, config: &PurificationConfig) {
        let k = self.columns.len();
        let mut p = config.tracked.max(16).min(k);
        loop {
            let start = self.start_vectors(circuit, t, p);
            let ritz = subspace_iteration(&self.columns, &self.log_scales, start, 2, RITZ_TOL_TIGHT, 8);
            let floor = ritz.log_values.get(1).copied().unwrap_or(f64::NEG_INFINITY) - config.truncation;
            let kept = ritz.log_values.iter().filter(|&&v| v >= floor).count();
            if kept < p || p == k {
                let mut columns = ritz.vectors;
                let mut scales: Vec<f64> = ritz.log_values.iter().map(|&v| 0.5 * v).collect();
                columns.truncate(kept.max(2).min(columns.len()));
                scales.truncate(columns.len());
                self.columns = columns;
                self.log_scales = scales;
                self.drop_dead_columns();
                break;
            }
            p = (2 * p).min(k);
        }
        self.orthonormal = true;
        self.tracked.clear();
        self.tracked_log.clear();
        self.sort_and_truncate(config.truncation);
    }
}

/// Normalizes `v` and returns ln of its former norm (−∞ for zero).
fn normalize(v: &mut [C64]) -> f64 {
    let r = norm(v);
    if r > 0.0 {
        scale(v, 1.0 / r);
    }
    r.ln()
}

fn log_sum_exp<I: Iterator<Item = f64> + Clone>(values: I) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + values.map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn pair_mut<T>(v: &mut [T], a: usize, b: usize) -> (&mut T, &mut T) {
    if a < b {
        let (lo, hi) = v.split_at_mut(b);
        (&mut lo[a], &mut hi[0])
    } else {
        let (lo, hi) = v.split_at_mut(a);
        (&mut hi[0], &mut lo[b])
    }
}

/// One-sided Jacobi on columns e^{s_i} c_i until they are mutually
/// orthogonal. Pairs whose scales differ by more than e^{GRADED_CUTOFF}
/// reduce to projecting the weaker column. Returns the sweep count.
fn graded_jacobi(columns: &mut [Vec<C64>], log_scales: &mut [f64]) -> usize {
    let k = columns.len();
    for sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for a in 0..k {
            for b in (a + 1)..k {
                if !log_scales[a].is_finite() || !log_scales[b].is_finite() {
                    continue;
                }
                let (hi, lo) = if log_scales[a] >= log_scales[b] { (a, b) } else { (b, a) };
                let (x, y) = pair_mut(columns, hi, lo);
                let g = dot(x, y);
                let gn = g.norm();
                if gn <= ORTHO_TOL {
                    continue;
                }
                rotated = true;
                let delta = log_scales[lo] - log_scales[hi];
                if delta < -GRADED_CUTOFF {
                    sub_scaled(y, g, x);
                    log_scales[lo] += normalize(y);
                    continue;
                }
                let e = delta.exp();
                let c = e * gn;
                let zeta = (e * e - 1.0) / (2.0 * c);
                let tan = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let cs = 1.0 / (1.0 + tan * tan).sqrt();
                let sn = cs * tan;
                let phase = (g / gn).conj() * e;
                for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
                    let yv = *yi * phase;
                    let xv = *xi;
                    *xi = xv * cs - yv * sn;
                    *yi = xv * sn + yv * cs;
                }
                let base = log_scales[hi];
                log_scales[hi] = base + normalize(x);
                log_scales[lo] = base + normalize(y);
            }
        }
        if !rotated {
            return sweep;
        }
    }
    MAX_SWEEPS
}

struct Ritz {
    /// ln of Ritz values of A A†, descending.
    log_values: Vec<f64>,
    vectors: Vec<Vec<C64>>,
}

/// Block subspace iteration on A A† with A = Σ_i e^{s_i} c_i e_i†.
/// Stops once the leading `watch` Ritz values change by less than `tol`
/// (relative) and at least `min_iter` iterations have run.
fn subspace_iteration(
    columns: &[Vec<C64>],
    log_scales: &[f64],
    mut block: Vec<Vec<C64>>,
    watch: usize,
    tol: f64,
    min_iter: usize,
) -> Ritz {
    let s_max = log_scales.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_scales.iter().map(|&s| (s - s_max).exp()).collect();
    let mut previous: Vec<f64> = Vec::new();
    for iter in 0..MAX_RITZ_ITER {
        orthonormalize_block(&mut block, columns);
        let p = block.len();
        let z: Vec<Vec<C64>> = block
            .iter()
            .map(|y| columns.iter().zip(&weights).map(|(c, &w)| dot(c, y) * w).collect())
            .collect();
        let mut h = SquareMatrix::zeros(p);
        for a in 0..p {
            for b in a..p {
                let v = dot(&z[a], &z[b]);
                h.set(a, b, v);
                h.set(b, a, v.conj());
            }
        }
        let eig = linalg::hermitian_eigen(&h);
        let order: Vec<usize> = (0..p).rev().collect();
        let values: Vec<f64> = order.iter().map(|&j| eig.values[j]).collect();
        let rotate = |vs: &[Vec<C64>]| -> Vec<Vec<C64>> {
            order
                .iter()
                .map(|&j| {
                    let mut out = vec![ZERO; vs[0].len()];
                    for (a, v) in vs.iter().enumerate() {
                        let coef = eig.vectors[a * p + j];
                        for (o, x) in out.iter_mut().zip(v) {
                            *o += x * coef;
                        }
                    }
                    out
                })
                .collect()
        };
        let ritz_vectors = rotate(&block);
        let w = watch.min(p);
        let converged = previous.len() >= w
            && (0..w).all(|j| (values[j] - previous[j]).abs() <= tol * values[j].abs().max(f64::MIN_POSITIVE));
        if (converged && iter + 1 >= min_iter) || iter + 1 == MAX_RITZ_ITER {
            return Ritz {
                log_values: values.iter().map(|&v| 2.0 * s_max + v.max(0.0).ln()).collect(),
                vectors: ritz_vectors,
            };
        }
        previous = values;
        let z_rot = rotate(&z);
        block = z_rot
            .iter()
            .map(|zj| {
                let mut y = vec![ZERO; columns[0].len()];
                for ((c, &w), &coef) in columns.iter().zip(&weights).zip(zj) {
                    sub_scaled(&mut y, -coef * w, c);
                }
                y
            })
            .collect();
    }
    unreachable!("loop returns on its last iteration")
}

/// Two-pass MGS of the block; collapsed vectors are replaced by columns of A.
fn orthonormalize_block(block: &mut Vec<Vec<C64>>, fallback: &[Vec<C64>]) {
    let mut done: Vec<Vec<C64>> = Vec::with_capacity(block.len());
    let mut spare = fallback.iter();
    for mut v in block.drain(..) {
        loop {
            let basis: Vec<&[C64]> = done.iter().map(|d| d.as_slice()).collect();
            let original = norm(&v);
            let r = linalg::orthonormalize_against(&mut v, &basis);
            if r > 1e-12 * original && r > 0.0 {
                done.push(v);
                break;
            }
            match spare.next() {
                Some(c) => v = c.clone(),
                None => break,
            }
        }
    }
    *block = done;
}

/// Δ_t readout at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurificationSample {
    pub t: u64,
    pub log_lambda1: f64,
    pub log_lambda2: f64,
    /// (1/2t) ln(λ1/λ2)
    pub gap: f64,
}

impl PurificationSample {
    pub fn lambda1(&self) -> f64 {
        self.log_lambda1.exp()
    }

    pub fn lambda2(&self) -> f64 {
        self.log_lambda2.exp()
    }
}

/// Purification readouts of one trajectory inside the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurificationTrajectory {
    pub seed: u64,
    pub eta: f64,
    pub num_qubits: usize,
    pub samples: Vec<PurificationSample>,
}

impl PurificationTrajectory {
    /// Mean of Δ_t over the recorded steps.
    pub fn mean_gap(&self) -> Result<f64> {
        if self.samples.is_empty() {
            return Err(Error::EmptySeries("purification trajectory has no samples"));
        }
        Ok(self.samples.iter().map(|s| s.gap).sum::<f64>() / self.samples.len() as f64)
    }
}

/// Runs one trajectory from I/N through `window_end` steps.
pub fn run_purification(circuit: &MonitoredCircuit, config: &PurificationConfig) -> Result<PurificationTrajectory> {
    config.validate()?;
    let mut state = FactoredMixedState::maximally_mixed(circuit.num_qubits());
    let mut samples = Vec::new();
    for t in 1..=config.window_end {
        state.step(circuit, t, config)?;
        if t >= config.window_start {
            let [l1, l2] = state.log_top_two();
            samples.push(PurificationSample { t, log_lambda1: l1, log_lambda2: l2, gap: (l1 - l2) / (2.0 * t as f64) });
        }
    }
    Ok(PurificationTrajectory { seed: circuit.seeds.master(), eta: circuit.eta(), num_qubits: circuit.num_qubits(), samples })
}

/// Ensemble average of per-trajectory window means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurificationSummary {
    pub eta: f64,
    pub num_qubits: usize,
    pub trajectories: usize,
    pub mean_gap: f64,
    pub stderr: f64,
    pub per_trajectory: Vec<f64>,
}

pub fn summarize_purification(runs: &[PurificationTrajectory]) -> Result<PurificationSummary> {
    let first = runs.first().ok_or(Error::EmptySeries("no purification trajectories"))?;
    let per_trajectory = runs.iter().map(PurificationTrajectory::mean_gap).collect::<Result<Vec<_>>>()?;
    let n = per_trajectory.len() as f64;
    let mean = per_trajectory.iter().sum::<f64>() / n;
    let stderr = if per_trajectory.len() > 1 {
        (per_trajectory.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };
    Ok(PurificationSummary {
        eta: first.eta,
        num_qubits: first.num_qubits,
        trajectories: runs.len(),
        mean_gap: mean,
        stderr,
        per_trajectory,
    })
}
