//! Lyapunov spectrum of V_t(η) by block Gram-Schmidt propagation.
//!
//! Exponents are reported for the rescaled Kraus operators √2·M±, which
//! reduce to the identity at η = 0. This shifts every exponent by the same
//! constant (L/2)·ln 2 relative to V_t built from M± themselves; gaps,
//! spectral widths and Lyapunov vectors are unchanged. The unshifted values
//! are available as `raw` exponents.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::channel::{MonitoredCircuit, StepOperator, TrajectoryRecord};
use crate::linalg::{dot, orthonormalize_against, CompensatedSum, SquareMatrix, C64};
use crate::qstate::PureState;
use crate::seed::Domain;
use crate::tolerances::TOL;
use crate::{Error, Result};

/// Offset between raw and reported exponents, per unit time.
pub fn exponent_offset(num_qubits: usize) -> f64 {
    num_qubits as f64 * LN_2 / 2.0
}

trait Amplitudes {
    fn amps(&self) -> &[C64];
    fn amps_mut(&mut self) -> &mut [C64];
}

impl Amplitudes for PureState {
    fn amps(&self) -> &[C64] {
        self.amplitudes()
    }
    fn amps_mut(&mut self) -> &mut [C64] {
        self.amplitudes_mut()
    }
}

impl Amplitudes for Vec<C64> {
    fn amps(&self) -> &[C64] {
        self
    }
    fn amps_mut(&mut self) -> &mut [C64] {
        self
    }
}

/// Orthonormalize in index order. Returns ln of each residual norm.
fn gram_schmidt<V: Amplitudes>(vectors: &mut [V]) -> Result<Vec<f64>> {
    let mut logs = Vec::with_capacity(vectors.len());
    for i in 0..vectors.len() {
        let (head, tail) = vectors.split_at_mut(i);
        let basis: Vec<&[C64]> = head.iter().map(|v| v.amps()).collect();
        let scale = crate::linalg::norm(tail[0].amps());
        let r = orthonormalize_against(tail[0].amps_mut(), &basis);
        if !(r > TOL.rank_collapse * scale) || !scale.is_finite() {
            return Err(Error::RankCollapse { index: i });
        }
        logs.push(r.ln());
    }
    Ok(logs)
}

fn max_orthonormality_defect<V: Amplitudes>(vectors: &[V]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in vectors.iter().enumerate() {
        for (j, b) in vectors.iter().enumerate().skip(i) {
            let g = dot(a.amps(), b.amps());
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// n tracked vectors pushed through one shared V_t(η). Vector 0 is the
/// physical trajectory: its Born probabilities decide every outcome.
#[derive(Debug, Clone)]
pub struct LyapunovEngine {
    circuit: MonitoredCircuit,
    vectors: Vec<PureState>,
    block_log: Vec<f64>,
    totals: Vec<CompensatedSum>,
    last_residuals: Vec<f64>,
    steps: u64,
    block_length: u64,
    blocks: u64,
    record: Option<TrajectoryRecord>,
}

impl LyapunovEngine {
    /// Start from `num_vectors` Haar-random states drawn from the circuit's
    /// seed stream, orthonormalized.
    pub fn new(circuit: MonitoredCircuit, num_vectors: usize, block_length: u64) -> Result<Self> {
        let l = circuit.num_qubits();
        if num_vectors == 0 || num_vectors > 1usize << l {
            return Err(Error::OutOfRange("number of tracked vectors must lie in 1..=2^L"));
        }
        let mut rng = circuit.seeds.rng(Domain::InitialState, 0, 0);
        let vectors = (0..num_vectors).map(|_| PureState::haar_random(l, &mut rng)).collect();
        Self::with_vectors(circuit, vectors, block_length)
    }

    /// Start from explicit vectors; they are orthonormalized in order.
    pub fn with_vectors(circuit: MonitoredCircuit, mut vectors: Vec<PureState>, block_length: u64) -> Result<Self> {
        if block_length == 0 {
            return Err(Error::OutOfRange("block length must be positive"));
        }
        if vectors.is_empty() {
            return Err(Error::OutOfRange("need at least one tracked vector"));
        }
        let l = circuit.num_qubits();
        for v in &vectors {
            if v.num_qubits() != l {
                return Err(Error::DimensionMismatch { expected: l, actual: v.num_qubits() });
            }
        }
        gram_schmidt(&mut vectors)?;
        let n = vectors.len();
        Ok(Self {
            circuit,
            vectors,
            block_log: vec![0.0; n],
            totals: vec![CompensatedSum::new(); n],
            last_residuals: vec![0.0; n],
            steps: 0,
            block_length,
            blocks: 0,
            record: None,
        })
    }

    /// Keep a [`TrajectoryRecord`] of every step from now on.
    pub fn enable_record(&mut self) {
        if self.record.is_none() {
            self.record = Some(TrajectoryRecord::new(&self.circuit));
        }
    }

    pub fn record(&self) -> Option<&TrajectoryRecord> {
        self.record.as_ref()
    }

    pub fn circuit(&self) -> &MonitoredCircuit {
        &self.circuit
    }

    pub fn num_tracked(&self) -> usize {
        self.vectors.len()
    }

    pub fn block_length(&self) -> u64 {
        self.block_length
    }

    pub fn blocks_done(&self) -> u64 {
        self.blocks
    }

    /// Time at the last completed block.
    pub fn time(&self) -> u64 {
        self.blocks * self.block_length
    }

    pub fn vectors(&self) -> &[PureState] {
        &self.vectors
    }

    /// The physical trajectory |ψ_t⟩, which is also the dominant vector.
    pub fn physical_state(&self) -> &PureState {
        &self.vectors[0]
    }

    /// ln‖χ‖ of each vector over the last block, including the per-step
    /// renormalizations.
    pub fn last_residual_log_norms(&self) -> &[f64] {
        &self.last_residuals
    }

    pub fn accumulated_log_norms(&self) -> Vec<f64> {
        self.totals.iter().map(CompensatedSum::value).collect()
    }

    fn step(&mut self) -> Result<()> {
        self.steps += 1;
        let t = self.steps;
        let offset = exponent_offset(self.circuit.num_qubits());
        let (first, rest) = self.vectors.split_first_mut().expect("at least one vector");
        let saved = first.log_norm;
        first.log_norm = 0.0;
        let op = self.circuit.evolve_one_step(first, t, self.record.as_mut());
        let increment = first.log_norm;
        first.log_norm = saved + increment;
        let op = op?;
        self.block_log[0] += increment + offset;
        for (k, (v, log)) in rest.iter_mut().zip(&mut self.block_log[1..]).enumerate() {
            let r = op.apply_normalized(v.amplitudes_mut());
            if !r.is_finite() {
                return Err(Error::RankCollapse { index: k + 1 });
            }
            *log += r + offset;
        }
        Ok(())
    }

    /// Evolve b steps, then Gram-Schmidt. Returns the block residual logs.
    pub fn run_block(&mut self) -> Result<&[f64]> {
        for _ in 0..self.block_length {
            self.step()?;
        }
        let logs = gram_schmidt(&mut self.vectors)?;
        for i in 0..self.vectors.len() {
            let r = self.block_log[i] + logs[i];
            self.totals[i].add(r);
            self.last_residuals[i] = r;
            self.block_log[i] = 0.0;
        }
        self.blocks += 1;
        Ok(&self.last_residuals)
    }

    /// ε_{t,i} in tracking order (ascending once converged).
    pub fn exponents(&self) -> Vec<f64> {
        let t = self.time().max(1) as f64;
        self.totals.iter().map(|s| -s.value() / t).collect()
    }

    pub fn sorted_exponents(&self) -> Vec<f64> {
        let mut e = self.exponents();
        e.sort_by(f64::total_cmp);
        e
    }

    pub fn raw_exponents(&self) -> Vec<f64> {
        let offset = exponent_offset(self.circuit.num_qubits());
        self.exponents().into_iter().map(|e| e + offset).collect()
    }

    pub fn orthonormality_defect(&self) -> f64 {
        max_orthonormality_defect(&self.vectors)
    }

    /// Snapshot of the current spectrum with Gram-Schmidt vectors.
    pub fn effective_hamiltonian(&self) -> EffectiveHamiltonian {
        EffectiveHamiltonian::from_unsorted(
            self.circuit.eta(),
            self.circuit.num_qubits(),
            self.time(),
            self.block_length,
            self.exponents(),
            self.vectors.iter().map(|v| v.amplitudes().to_vec()).collect(),
            false,
        )
    }
}

/// K_t = Σ ε_i |φ_i⟩⟨φ_i| in spectral form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveHamiltonian {
    pub eta: f64,
    pub num_qubits: usize,
    pub time: u64,
    pub block_length: u64,
    /// Ascending.
    pub spectrum: Vec<f64>,
    /// `vectors[i]` belongs to `spectrum[i]`.
    pub vectors: Vec<Vec<C64>>,
    /// Whether the frame was iterated to the finite-time singular vectors.
    pub refined: bool,
}

impl EffectiveHamiltonian {
    pub fn from_unsorted(
        eta: f64,
        num_qubits: usize,
        time: u64,
        block_length: u64,
        spectrum: Vec<f64>,
        vectors: Vec<Vec<C64>>,
        refined: bool,
    ) -> Self {
        let mut pairs: Vec<(f64, Vec<C64>)> = spectrum.into_iter().zip(vectors).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (spectrum, vectors) = pairs.into_iter().unzip();
        Self { eta, num_qubits, time, block_length, spectrum, vectors, refined }
    }

    pub fn dim(&self) -> usize {
        1usize << self.num_qubits
    }

    pub fn width(&self) -> f64 {
        match (self.spectrum.first(), self.spectrum.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn gap(&self) -> Option<f64> {
        (self.spectrum.len() >= 2).then(|| self.spectrum[1] - self.spectrum[0])
    }

    pub fn orthonormality_defect(&self) -> f64 {
        max_orthonormality_defect(&self.vectors)
    }

    /// Dense K. Costs O(N³); meant for small L.
    pub fn matrix(&self) -> SquareMatrix {
        let n = self.dim();
        let mut k = SquareMatrix::zeros(n);
        for (e, v) in self.spectrum.iter().zip(&self.vectors) {
            let m = k.as_mut_slice();
            for r in 0..n {
                let vr = v[r] * *e;
                for c in 0..n {
                    m[r * n + c] += vr * v[c].conj();
                }
            }
        }
        k
    }

    /// tr(P K) = Σ ε_i ⟨φ_i|P|φ_i⟩ with P given by its action on a vector.
    pub fn trace_with<F: Fn(&[C64]) -> Vec<C64>>(&self, op: F) -> C64 {
        self.spectrum
            .iter()
            .zip(&self.vectors)
            .map(|(e, v)| dot(v, &op(v)) * *e)
            .fold(C64::new(0.0, 0.0), |a, b| a + b)
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count().max(1) as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Running statistics over the last c block readouts.
#[derive(Debug, Clone)]
struct Window {
    capacity: usize,
    rows: VecDeque<Vec<f64>>,
}

impl Window {
    fn new(capacity: usize) -> Self {
        Self { capacity, rows: VecDeque::with_capacity(capacity + 1) }
    }

    fn push(&mut self, row: Vec<f64>) {
        if self.rows.len() == self.capacity {
            self.rows.pop_front();
        }
        self.rows.push_back(row);
    }

    fn is_full(&self) -> bool {
        self.rows.len() == self.capacity
    }

    fn column(&self, i: usize) -> (f64, f64) {
        mean_std(self.rows.iter().map(move |r| r[i]))
    }
}

/// Stopping rule and budget for [`run_gap_estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapConfig {
    pub num_vectors: usize,
    pub block_length: u64,
    /// c: number of block readouts in the convergence window.
    pub window: usize,
    /// d: bound on window_std / window_mean.
    pub tolerance: f64,
    /// Absolute floor added to the gap criterion so an exactly vanishing
    /// gap can converge.
    pub gap_floor: f64,
    /// Also require the gap itself to satisfy the relative criterion.
    pub require_gap_convergence: bool,
    pub min_steps: u64,
    pub max_steps: u64,
}

impl Default for GapConfig {
    fn default() -> Self {
        Self {
            num_vectors: 2,
            block_length: 16,
            window: 1000,
            tolerance: 3e-2,
            gap_floor: 1e-12,
            require_gap_convergence: true,
            min_steps: 0,
            max_steps: 1_000_000,
        }
    }
}

impl GapConfig {
    /// Run exactly `steps` steps (rounded up to whole blocks).
    pub fn fixed_steps(steps: u64, block_length: u64) -> Self {
        Self { block_length, min_steps: steps, max_steps: steps, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_vectors < 2 {
            return Err(Error::OutOfRange("a gap needs at least two tracked vectors"));
        }
        if self.block_length == 0 || self.window == 0 {
            return Err(Error::OutOfRange("block length and window must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::OutOfRange("tolerance d must be positive"));
        }
        if self.max_steps < self.min_steps {
            return Err(Error::OutOfRange("max_steps below min_steps"));
        }
        Ok(())
    }
}

/// One line of the per-block log.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockReport<'a> {
    pub block_index: u64,
    pub t: u64,
    /// Sorted ascending.
    pub exponents: &'a [f64],
    /// Window standard deviations, once the window is full.
    pub window_std: Option<&'a [f64]>,
}

/// Δ(η, L) with its time-fluctuation statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub eta: f64,
    pub num_qubits: usize,
    pub seed: u64,
    pub unitaries_enabled: bool,
    pub gap: f64,
    pub std: f64,
    /// Window means, ascending.
    pub exponents: Vec<f64>,
    pub exponent_std: Vec<f64>,
    pub blocks_used: u64,
    pub steps: u64,
    pub block_length: u64,
    pub window: usize,
    pub tolerance: f64,
    pub converged: bool,
}

/// Track `num_vectors` vectors until every exponent (and optionally the
/// gap) has window_std / window_mean below d, or the step budget runs out.
/// The relative criterion for exponents uses the raw exponents, which are
/// strictly positive.
pub fn run_gap_estimate<F: FnMut(&BlockReport)>(
    circuit: MonitoredCircuit,
    config: &GapConfig,
    mut observer: F,
) -> Result<GapEstimate> {
    config.validate()?;
    let n = config.num_vectors;
    let offset = exponent_offset(circuit.num_qubits());
    let mut engine = LyapunovEngine::new(circuit, n, config.block_length)?;
    let mut window = Window::new(config.window);
    let mut stds = vec![0.0; n + 1];
    let mut means = vec![0.0; n + 1];
    let mut converged = false;
    loop {
        engine.run_block()?;
        let mut row = engine.sorted_exponents();
        row.push(row[1] - row[0]);
        window.push(row.clone());
        let full = window.is_full();
        if full {
            for i in 0..=n {
                let (m, s) = window.column(i);
                means[i] = m;
                stds[i] = s;
            }
        }
        observer(&BlockReport {
            block_index: engine.blocks_done(),
            t: engine.time(),
            exponents: &row[..n],
            window_std: full.then_some(&stds[..n]),
        });
        let t = engine.time();
        if full && t >= config.min_steps {
            let exps_ok = (0..n).all(|i| stds[i] < config.tolerance * (means[i] + offset).abs());
            let gap_ok = !config.require_gap_convergence
                || stds[n] <= config.tolerance * means[n].abs() + config.gap_floor;
            if exps_ok && gap_ok {
                converged = true;
                break;
            }
        }
        if t + config.block_length > config.max_steps && t >= config.min_steps {
            break;
        }
    }
    if !window.is_full() {
        for i in 0..=n {
            let (m, s) = window.column(i);
            means[i] = m;
            stds[i] = s;
        }
    }
    Ok(GapEstimate {
        eta: circuit.eta(),
        num_qubits: circuit.num_qubits(),
        seed: circuit.seeds.master(),
        unitaries_enabled: circuit.schedule.unitaries_enabled,
        gap: means[n],
        std: stds[n],
        exponents: means[..n].to_vec(),
        exponent_std: stds[..n].to_vec(),
        blocks_used: engine.blocks_done(),
        steps: engine.time(),
        block_length: config.block_length,
        window: config.window,
        tolerance: config.tolerance,
        converged,
    })
}

/// Outcome of the block-length calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockCalibration {
    pub block_length: u64,
    /// (b, window-mean exponents) for every b tried.
    pub trials: Vec<(u64, Vec<f64>)>,
    pub settled: bool,
}

/// Double b from 2 until the exponents of consecutive trials differ by less
/// than 2d relative; returns the smaller b of the first matching pair.
pub fn select_block_length(circuit: MonitoredCircuit, config: &GapConfig, max_block_length: u64) -> Result<BlockCalibration> {
    let offset = exponent_offset(circuit.num_qubits());
    let mut trials: Vec<(u64, Vec<f64>)> = Vec::new();
    let mut b = 2;
    while b <= max_block_length {
        let est = run_gap_estimate(circuit, &GapConfig { block_length: b, ..*config }, |_| {})?;
        if let Some((prev_b, prev)) = trials.last() {
            let settled = prev
                .iter()
                .zip(&est.exponents)
                .all(|(a, c)| (a - c).abs() < 2.0 * config.tolerance * (a + offset).abs());
            if settled {
                let chosen = *prev_b;
                trials.push((b, est.exponents));
                return Ok(BlockCalibration { block_length: chosen, trials, settled: true });
            }
        }
        trials.push((b, est.exponents));
        b *= 2;
    }
    let last = trials.last().map_or(2, |t| t.0);
    Ok(BlockCalibration { block_length: last, trials, settled: false })
}

/// τ_δ = |ln δ| / Δ.
pub fn relaxation_time(gap: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::OutOfRange("delta must lie in (0, 1]"));
    }
    if !(gap > 0.0) {
        return Err(Error::NoRelaxationTime);
    }
    Ok(delta.ln().abs() / gap)
}

/// Settings for the finite-time singular-vector iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for Refinement {
    fn default() -> Self {
        Self { tolerance: 1e-12, max_sweeps: 500 }
    }
}

/// Finite-time spectrum obtained by alternating forward passes through V_t
/// and backward passes through V_t†, each with block Gram-Schmidt. The
/// initial frame converges to the right singular vectors of V_t, at which
/// point the forward residuals are exactly the singular values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteTimeSpectrum {
    /// In frame order, ascending once converged.
    pub exponents: Vec<f64>,
    /// Left singular vectors (Lyapunov vectors at time t), frame order.
    pub left_vectors: Vec<Vec<C64>>,
    pub sweeps: usize,
    pub converged: bool,
}

fn pass(
    ops: &[StepOperator],
    frame: &mut [Vec<C64>],
    block_length: usize,
    offset: f64,
    adjoint: bool,
) -> Result<Vec<CompensatedSum>> {
    let n = frame.len();
    let mut totals = vec![CompensatedSum::new(); n];
    let mut block = vec![0.0; n];
    let apply = |op: &StepOperator, frame: &mut [Vec<C64>], block: &mut [f64]| -> Result<()> {
        for (k, (v, log)) in frame.iter_mut().zip(block.iter_mut()).enumerate() {
            let r = if adjoint { op.apply_adjoint_normalized(v) } else { op.apply_normalized(v) };
            if !r.is_finite() {
                return Err(Error::RankCollapse { index: k });
            }
            *log += r + offset;
        }
        Ok(())
    };
    let len = ops.len();
    for (count, idx) in (0..len).enumerate() {
        let op = if adjoint { &ops[len - 1 - idx] } else { &ops[idx] };
        apply(op, frame, &mut block)?;
        if (count + 1) % block_length == 0 || count + 1 == len {
            let logs = gram_schmidt(frame)?;
            for i in 0..n {
                totals[i].add(block[i] + logs[i]);
                block[i] = 0.0;
            }
        }
    }
    Ok(totals)
}

/// Iterate the frame `initial` through the recorded V_t until the forward
/// exponents change by less than `refinement.tolerance` between sweeps.
pub fn finite_time_spectrum(
    record: &TrajectoryRecord,
    initial: Vec<Vec<C64>>,
    block_length: u64,
    refinement: Refinement,
) -> Result<FiniteTimeSpectrum> {
    let kraus = crate::channel::KrausPair::new(record.eta)?;
    let l = record.num_qubits;
    let ops: Vec<StepOperator> = record.steps.iter().map(|s| StepOperator::from_record(l, &kraus, s)).collect();
    if ops.is_empty() {
        return Err(Error::EmptySeries("trajectory record has no steps"));
    }
    let dim = 1usize << l;
    if let Some(v) = initial.iter().find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, actual: v.len() });
    }
    let b = block_length.max(1) as usize;
    let offset = exponent_offset(l);
    let t = ops.len() as f64;
    let mut frame = initial;
    gram_schmidt(&mut frame)?;
    let mut previous: Option<Vec<f64>> = None;
    let mut sweeps = 0;
    loop {
        let mut forward = frame.clone();
        let totals = pass(&ops, &mut forward, b, offset, false)?;
        let exponents: Vec<f64> = totals.iter().map(|s| -s.value() / t).collect();
        let change = previous
            .as_ref()
            .map(|p| p.iter().zip(&exponents).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max));
        let done = change.is_some_and(|c| c < refinement.tolerance);
        if done || sweeps >= refinement.max_sweeps {
            return Ok(FiniteTimeSpectrum { exponents, left_vectors: forward, sweeps, converged: done });
        }
        previous = Some(exponents);
        pass(&ops, &mut forward, b, offset, true)?;
        frame = forward;
        sweeps += 1;
    }
}

/// Settings for [`run_full_spectrum`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumConfig {
    pub block_length: u64,
    /// Total steps, rounded up to whole blocks.
    pub steps: u64,
    /// Number of snapshots taken at the last block ends.
    pub snapshots: usize,
    pub refinement: Option<Refinement>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { block_length: 1, steps: 64, snapshots: 1, refinement: None }
    }
}

/// Track all N vectors; return K_t at the last `snapshots` block ends
/// (oldest first).
pub fn run_full_spectrum(circuit: MonitoredCircuit, config: &SpectrumConfig) -> Result<Vec<EffectiveHamiltonian>> {
    let l = circuit.num_qubits();
    let dim = 1usize << l;
    if config.snapshots == 0 {
        return Err(Error::OutOfRange("need at least one snapshot"));
    }
    let mut engine = LyapunovEngine::new(circuit, dim, config.block_length)?;
    let initial: Vec<Vec<C64>> = engine.vectors().iter().map(|v| v.amplitudes().to_vec()).collect();
    if config.refinement.is_some() {
        engine.enable_record();
    }
    let blocks = config.steps.div_ceil(config.block_length).max(1);
    let first_snapshot = blocks.saturating_sub(config.snapshots as u64);
    let mut out = Vec::with_capacity(config.snapshots);
    for s in 0..blocks {
        engine.run_block()?;
        if s + 1 > first_snapshot {
            let ham = match (config.refinement, engine.record()) {
                (Some(r), Some(record)) => {
                    let fts = finite_time_spectrum(record, initial.clone(), config.block_length, r)?;
                    EffectiveHamiltonian::from_unsorted(
                        circuit.eta(),
                        l,
                        engine.time(),
                        config.block_length,
                        fts.exponents,
                        fts.left_vectors,
                        true,
                    )
                }
                _ => engine.effective_hamiltonian(),
            };
            out.push(ham);
        }
    }
    Ok(out)
}
