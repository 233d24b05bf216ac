//! Weak σ3 measurements, Haar-random two-qubit gates on a brick-wall
//! schedule, Born-rule sampling and replayable trajectory records.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::{adjoint4, Mat2, Mat4, C64, ZERO};
use crate::qstate::{bit_of, gate_kernel, PureState};
use crate::seed::{rng_from_seed, Domain, SeedStream};
use crate::{Error, Result};

/// Name of the layer-parity convention stored in trajectory headers.
pub const SCHEDULE_CONVENTION: &str = "brickwall-open:bonds(0,1),(2,3),..@odd-t;bonds(1,2),(3,4),..@even-t";

/// Measurement outcome ω ∈ {+, −}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Outcome::Plus => '+',
            Outcome::Minus => '-',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            '+' => Some(Outcome::Plus),
            '-' => Some(Outcome::Minus),
            _ => None,
        }
    }
}

/// M±(η) = (σ0 ± η σ3) / sqrt(2(1 + η²)). Both operators are diagonal, so
/// they are stored as their diagonals `[⟨↑|M|↑⟩, ⟨↓|M|↓⟩]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrausPair {
    pub eta: f64,
    pub plus: [f64; 2],
    pub minus: [f64; 2],
}

impl KrausPair {
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::OutOfRange("eta must lie in [0, 1]"));
        }
        let c = 1.0 / (2.0 * (1.0 + eta * eta)).sqrt();
        Ok(Self { eta, plus: [(1.0 + eta) * c, (1.0 - eta) * c], minus: [(1.0 - eta) * c, (1.0 + eta) * c] })
    }

    pub fn diagonal(&self, outcome: Outcome) -> [f64; 2] {
        match outcome {
            Outcome::Plus => self.plus,
            Outcome::Minus => self.minus,
        }
    }

    pub fn matrix(&self, outcome: Outcome) -> Mat2 {
        let d = self.diagonal(outcome);
        [C64::new(d[0], 0.0), ZERO, ZERO, C64::new(d[1], 0.0)]
    }

    /// max |(M₊†M₊ + M₋†M₋ − I)_ij|
    pub fn completeness_defect(&self) -> f64 {
        let up = self.plus[0] * self.plus[0] + self.minus[0] * self.minus[0] - 1.0;
        let down = self.plus[1] * self.plus[1] + self.minus[1] * self.minus[1] - 1.0;
        up.abs().max(down.abs())
    }

    /// Born probability of + on a site that is |↑⟩: (1 + η)² / (2(1 + η²)).
    pub fn p_eta(&self) -> f64 {
        self.plus[0] * self.plus[0]
    }
}

/// Sample a 4×4 Haar unitary: QR of a complex Ginibre matrix with the phases
/// of R's diagonal pushed into Q.
pub fn sample_haar_unitary<R: Rng + ?Sized>(rng: &mut R) -> Mat4 {
    let mut z = [ZERO; 16];
    for entry in z.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *entry = C64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2;
    }
    // Householder QR on columns.
    let mut q = crate::linalg::identity4();
    let mut r = z;
    let mut diag_phase = [C64::new(1.0, 0.0); 4];
    for k in 0..4 {
        let mut x = [ZERO; 4];
        for i in k..4 {
            x[i] = r[4 * i + k];
        }
        let alpha_norm = (k..4).map(|i| x[i].norm_sqr()).sum::<f64>().sqrt();
        let phase = if x[k].norm() > 0.0 { x[k] / x[k].norm() } else { C64::new(1.0, 0.0) };
        // v = x + phase·‖x‖ e_k, reflect so that R_kk = -phase·‖x‖
        let mut v = x;
        v[k] += phase * alpha_norm;
        let vnorm2: f64 = (k..4).map(|i| v[i].norm_sqr()).sum();
        if vnorm2 > 0.0 {
            // R ← (I − 2vv†/v†v) R
            for col in 0..4 {
                let mut s = ZERO;
                for i in k..4 {
                    s += v[i].conj() * r[4 * i + col];
                }
                let s = s * (2.0 / vnorm2);
                for i in k..4 {
                    r[4 * i + col] -= v[i] * s;
                }
            }
            // Q ← Q (I − 2vv†/v†v)
            for row in 0..4 {
                let mut s = ZERO;
                for i in k..4 {
                    s += q[4 * row + i] * v[i];
                }
                let s = s * (2.0 / vnorm2);
                for i in k..4 {
                    q[4 * row + i] -= s * v[i].conj();
                }
            }
        }
        let rkk = r[4 * k + k];
        diag_phase[k] = if rkk.norm() > 0.0 { rkk / rkk.norm() } else { C64::new(1.0, 0.0) };
    }
    // Q Λ with Λ = diag(R_kk/|R_kk|) makes the factorization unique.
    for row in 0..4 {
        for col in 0..4 {
            q[4 * row + col] *= diag_phase[col];
        }
    }
    q
}

/// Brick-wall arrangement of nearest-neighbour gates on an open chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitSchedule {
    pub num_qubits: usize,
    /// `false` gives measurement-only dynamics.
    pub unitaries_enabled: bool,
}

impl CircuitSchedule {
    pub fn brick_wall(num_qubits: usize) -> Self {
        Self { num_qubits, unitaries_enabled: true }
    }

    pub fn measurement_only(num_qubits: usize) -> Self {
        Self { num_qubits, unitaries_enabled: false }
    }

    /// Left sites of the bonds acting at step `t` (counted from 1). Odd
    /// steps start at bond (0, 1), even steps at bond (1, 2); an unpaired end
    /// qubit gets no gate.
    pub fn bonds(&self, t: u64) -> impl Iterator<Item = usize> {
        let start = if t % 2 == 1 { 0 } else { 1 };
        let l = self.num_qubits;
        let enabled = self.unitaries_enabled;
        (start..l.saturating_sub(1)).step_by(2).filter(move |_| enabled)
    }
}

/// One gate of a unitary layer together with the seed it was drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerGate {
    pub left: usize,
    pub seed: u64,
    pub gate: Mat4,
}

pub fn gate_from_seed(seed: u64) -> Mat4 {
    sample_haar_unitary(&mut rng_from_seed(seed))
}

/// Outcomes and gate seeds of one time step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    /// `(left site, seed)` per gate, in application order.
    pub unitary_seeds: Vec<(usize, u64)>,
    pub outcomes: Vec<Outcome>,
}

impl StepRecord {
    pub fn outcome_string(&self) -> String {
        self.outcomes.iter().map(|o| o.as_char()).collect()
    }
}

/// Everything needed to rebuild V_t(η) without resampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub eta: f64,
    pub num_qubits: usize,
    pub unitaries_enabled: bool,
    pub schedule: String,
    pub steps: Vec<StepRecord>,
}

impl TrajectoryRecord {
    pub fn new(circuit: &MonitoredCircuit) -> Self {
        Self {
            seed: circuit.seeds.master(),
            eta: circuit.kraus.eta,
            num_qubits: circuit.schedule.num_qubits,
            unitaries_enabled: circuit.schedule.unitaries_enabled,
            schedule: String::from(SCHEDULE_CONVENTION),
            steps: Vec::new(),
        }
    }
}

/// M_t U_t for one step, ready to be applied to any number of vectors.
#[derive(Debug, Clone)]
pub struct StepOperator {
    num_qubits: usize,
    pub gates: Vec<LayerGate>,
    /// Diagonal of M_t over the whole basis.
    diagonal: Vec<f64>,
}

impl StepOperator {
    pub fn new(num_qubits: usize, gates: Vec<LayerGate>, kraus: &KrausPair, outcomes: &[Outcome]) -> Self {
        let mut diagonal = vec![1.0];
        for &o in outcomes {
            let d = kraus.diagonal(o);
            diagonal = diagonal.iter().flat_map(|&x| [x * d[0], x * d[1]]).collect();
        }
        Self { num_qubits, gates, diagonal }
    }

    /// Rebuild the operator of a recorded step.
    pub fn from_record(num_qubits: usize, kraus: &KrausPair, step: &StepRecord) -> Self {
        let gates = step
            .unitary_seeds
            .iter()
            .map(|&(left, seed)| LayerGate { left, seed, gate: gate_from_seed(seed) })
            .collect();
        Self::new(num_qubits, gates, kraus, &step.outcomes)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// v ← M_t U_t v, renormalized. Returns ln‖M_t U_t v‖.
    pub fn apply_normalized(&self, v: &mut [C64]) -> f64 {
        for g in &self.gates {
            gate_kernel(v, self.num_qubits, &g.gate, g.left);
        }
        let mut norm_sqr = 0.0;
        for (a, &d) in v.iter_mut().zip(&self.diagonal) {
            *a *= d;
            norm_sqr += a.norm_sqr();
        }
        let r = norm_sqr.sqrt();
        if r > 0.0 {
            crate::linalg::scale(v, 1.0 / r);
        }
        r.ln()
    }

    /// v ← U_t† M_t v, renormalized. Returns ln‖U_t† M_t v‖.
    pub fn apply_adjoint_normalized(&self, v: &mut [C64]) -> f64 {
        let mut norm_sqr = 0.0;
        for (a, &d) in v.iter_mut().zip(&self.diagonal) {
            *a *= d;
            norm_sqr += a.norm_sqr();
        }
        for g in self.gates.iter().rev() {
            gate_kernel(v, self.num_qubits, &adjoint4(&g.gate), g.left);
        }
        let r = norm_sqr.sqrt();
        if r > 0.0 {
            crate::linalg::scale(v, 1.0 / r);
        }
        r.ln()
    }
}

/// A monitored brick-wall circuit: Kraus pair, schedule and seed stream.
/// Given these, every gate and every Born draw is fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitoredCircuit {
    pub kraus: KrausPair,
    pub schedule: CircuitSchedule,
    pub seeds: SeedStream,
}

impl MonitoredCircuit {
    pub fn new(eta: f64, num_qubits: usize, seed: u64) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::OutOfRange("need at least one qubit"));
        }
        Ok(Self {
            kraus: KrausPair::new(eta)?,
            schedule: CircuitSchedule::brick_wall(num_qubits),
            seeds: SeedStream::new(seed),
        })
    }

    pub fn measurement_only(eta: f64, num_qubits: usize, seed: u64) -> Result<Self> {
        let mut c = Self::new(eta, num_qubits, seed)?;
        c.schedule.unitaries_enabled = false;
        Ok(c)
    }

    pub fn num_qubits(&self) -> usize {
        self.schedule.num_qubits
    }

    pub fn eta(&self) -> f64 {
        self.kraus.eta
    }

    pub fn unitary_layer(&self, t: u64) -> Vec<LayerGate> {
        self.schedule
            .bonds(t)
            .map(|left| {
                let seed = self.seeds.derive(Domain::Gate, t, left as u64);
                LayerGate { left, seed, gate: gate_from_seed(seed) }
            })
            .collect()
    }

    /// Uniform draw deciding ω_{t,site}.
    pub fn outcome_draw(&self, t: u64, site: usize) -> f64 {
        self.seeds.uniform(Domain::Outcome, t, site as u64)
    }

    /// Born-rule outcome given p(+).
    pub fn decide(&self, t: u64, site: usize, p_plus: f64) -> Outcome {
        if self.outcome_draw(t, site) < p_plus {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    /// One step: the unitary layer of step `t`, then σ3 measurements on
    /// sites 0..L in order, each sampled with its conditional Born
    /// probability and applied with renormalization.
    pub fn evolve_one_step(
        &self,
        state: &mut PureState,
        t: u64,
        record: Option<&mut TrajectoryRecord>,
    ) -> Result<StepOperator> {
        if t == 0 {
            return Err(Error::OutOfRange("time steps are counted from 1"));
        }
        let l = self.num_qubits();
        if state.num_qubits() != l {
            return Err(Error::DimensionMismatch { expected: l, actual: state.num_qubits() });
        }
        let gates = self.unitary_layer(t);
        for g in &gates {
            state.apply_two_qubit_gate(&g.gate, g.left)?;
        }
        let mut outcomes = Vec::with_capacity(l);
        for site in 0..l {
            let p_plus = self.born_plus(state, site);
            let outcome = self.decide(t, site, p_plus);
            state.apply_single_site_operator(&self.kraus.matrix(outcome), site)?;
            outcomes.push(outcome);
        }
        if let Some(rec) = record {
            rec.steps.push(StepRecord {
                t,
                unitary_seeds: gates.iter().map(|g| (g.left, g.seed)).collect(),
                outcomes: outcomes.clone(),
            });
        }
        Ok(StepOperator::new(l, gates, &self.kraus, &outcomes))
    }

    /// ⟨ψ|M₊†M₊|ψ⟩ at `site`.
    pub fn born_plus(&self, state: &PureState, site: usize) -> f64 {
        born_probabilities(&self.kraus, state, site)[0]
    }
}

/// (p(+), p(−)) at `site`, normalized by ⟨ψ|ψ⟩.
pub fn born_probabilities(kraus: &KrausPair, state: &PureState, site: usize) -> [f64; 2] {
    let l = state.num_qubits();
    let mask = 1usize << bit_of(site, l);
    let (mut up, mut down) = (0.0, 0.0);
    for (i, a) in state.amplitudes().iter().enumerate() {
        if i & mask == 0 {
            up += a.norm_sqr();
        } else {
            down += a.norm_sqr();
        }
    }
    let total = up + down;
    let p = |d: [f64; 2]| (up * d[0] * d[0] + down * d[1] * d[1]) / total;
    [p(kraus.plus), p(kraus.minus)]
}

/// Push `initial` through the recorded V_t(η): recorded gates and recorded
/// outcomes, renormalizing after every Kraus operator.
pub fn replay(record: &TrajectoryRecord, initial: &PureState) -> Result<PureState> {
    let mut state = initial.clone();
    replay_steps(record, &mut state, |_, _| {})?;
    Ok(state)
}

/// Like [`replay`], calling `observe(t, state)` after every step.
pub fn replay_steps<F: FnMut(u64, &PureState)>(
    record: &TrajectoryRecord,
    state: &mut PureState,
    mut observe: F,
) -> Result<()> {
    if state.num_qubits() != record.num_qubits {
        return Err(Error::DimensionMismatch { expected: record.num_qubits, actual: state.num_qubits() });
    }
    let kraus = KrausPair::new(record.eta)?;
    for step in &record.steps {
        for &(left, seed) in &step.unitary_seeds {
            state.apply_two_qubit_gate(&gate_from_seed(seed), left)?;
        }
        for (site, &o) in step.outcomes.iter().enumerate() {
            state.apply_single_site_operator(&kraus.matrix(o), site)?;
        }
        observe(step.t, state);
    }
    Ok(())
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_defect4;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kraus_diagonals() {
        let k = KrausPair::new(0.5).unwrap();
        assert_abs_diff_eq!(k.p_eta(), 0.9, epsilon = 1e-15);
        assert!(k.completeness_defect() < 1e-15);
        let k0 = KrausPair::new(0.0).unwrap();
        assert_abs_diff_eq!(k0.plus[0], core::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert!(KrausPair::new(1.1).is_err());
        assert!(KrausPair::new(-0.1).is_err());
    }

    #[test]
    fn haar_gate_is_unitary_and_deterministic() {
        for seed in 0..50 {
            let u = gate_from_seed(seed);
            assert!(unitarity_defect4(&u) < 1e-12);
        }
        assert_eq!(gate_from_seed(9), gate_from_seed(9));
        assert_ne!(gate_from_seed(9), gate_from_seed(10));
    }

    #[test]
    fn brick_wall_layers() {
        let s = CircuitSchedule::brick_wall(6);
        assert_eq!(s.bonds(1).collect::<Vec<_>>(), vec![0, 2, 4]);
        assert_eq!(s.bonds(2).collect::<Vec<_>>(), vec![1, 3]);
        let odd = CircuitSchedule::brick_wall(5);
        assert_eq!(odd.bonds(1).collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(odd.bonds(2).collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(CircuitSchedule::measurement_only(6).bonds(1).count(), 0);
    }

    #[test]
    fn eta_zero_step_is_unitary_layer_only() {
        let c = MonitoredCircuit::new(0.0, 4, 11).unwrap();
        let mut rng = rng_from_seed(5);
        let psi0 = PureState::haar_random(4, &mut rng);
        let mut measured = psi0.clone();
        c.evolve_one_step(&mut measured, 1, None).unwrap();
        let mut unitary = psi0.clone();
        for g in c.unitary_layer(1) {
            unitary.apply_two_qubit_gate(&g.gate, g.left).unwrap();
        }
        assert_abs_diff_eq!(measured.fidelity(&unitary), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn projective_fixed_point() {
        let c = MonitoredCircuit::measurement_only(1.0, 3, 2).unwrap();
        let mut psi = PureState::all_up(3);
        let mut rec = TrajectoryRecord::new(&c);
        for t in 1..=20 {
            c.evolve_one_step(&mut psi, t, Some(&mut rec)).unwrap();
        }
        assert!(rec.steps.iter().all(|s| s.outcomes.iter().all(|&o| o == Outcome::Plus)));
        assert_eq!(psi, {
            let mut up = PureState::all_up(3);
            up.log_norm = psi.log_norm;
            up
        });
    }

    #[test]
    fn single_up_site_born_probability() {
        for eta in [0.0, 0.2, 0.5, 0.9] {
            let k = KrausPair::new(eta).unwrap();
            let p = born_probabilities(&k, &PureState::all_up(1), 0);
            let expected = (1.0 + eta) * (1.0 + eta) / (2.0 * (1.0 + eta * eta));
            assert_abs_diff_eq!(p[0], expected, epsilon = 1e-14);
            assert_abs_diff_eq!(p[0] + p[1], 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn replay_reproduces_sampled_run() {
        let c = MonitoredCircuit::new(0.4, 5, 99).unwrap();
        let mut rng = rng_from_seed(1);
        let psi0 = PureState::haar_random(5, &mut rng);
        let mut psi = psi0.clone();
        let mut rec = TrajectoryRecord::new(&c);
        for t in 1..=30 {
            c.evolve_one_step(&mut psi, t, Some(&mut rec)).unwrap();
        }
        let replayed = replay(&rec, &psi0).unwrap();
        assert_eq!(replayed.amplitudes(), psi.amplitudes());
    }

    #[test]
    fn eta_zero_replay_is_the_same_unitary_map() {
        let c = MonitoredCircuit::new(0.0, 3, 4).unwrap();
        let mut rng = rng_from_seed(8);
        let a0 = PureState::haar_random(3, &mut rng);
        let b0 = PureState::haar_random(3, &mut rng);
        let mut a = a0.clone();
        let mut rec = TrajectoryRecord::new(&c);
        for t in 1..=10 {
            c.evolve_one_step(&mut a, t, Some(&mut rec)).unwrap();
        }
        let b = replay(&rec, &b0).unwrap();
        // a unitary map preserves overlaps
        assert_abs_diff_eq!(a.inner(&b).norm(), a0.inner(&b0).norm(), epsilon = 1e-12);
    }

    #[test]
    fn replay_rejects_wrong_size() {
        let c = MonitoredCircuit::new(0.3, 3, 1).unwrap();
        let rec = TrajectoryRecord::new(&c);
        assert!(matches!(replay(&rec, &PureState::all_up(4)), Err(Error::DimensionMismatch { .. })));
    }
}
