//! Entanglement entropy and mutual information of the dominant Lyapunov
//! vector, i.e. the physical trajectory state, averaged over time after a
//! burn-in of τ_δ steps.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::channel::MonitoredCircuit;
use crate::lyapunov::{relaxation_time, LyapunovEngine};
use crate::qstate::PureState;
use crate::{Error, Result};

/// Number of discarded steps before sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurnIn {
    pub steps: u64,
    /// τ_δ = |ln δ| / Δ when a positive gap was supplied.
    pub tau_delta: Option<f64>,
    /// τ_δ exceeded the cap, or no finite τ_δ exists.
    pub capped: bool,
}

impl BurnIn {
    pub fn fixed(steps: u64) -> Self {
        Self { steps, tau_delta: None, capped: false }
    }

    /// τ = ⌈τ_δ⌉, limited to `cap`.
    pub fn from_gap(gap: f64, delta: f64, cap: u64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::OutOfRange("delta must lie in (0, 1]"));
        }
        match relaxation_time(gap, delta) {
            Ok(tau) if tau <= cap as f64 => Ok(Self { steps: tau.ceil() as u64, tau_delta: Some(tau), capped: false }),
            Ok(tau) => Ok(Self { steps: cap, tau_delta: Some(tau), capped: true }),
            Err(Error::NoRelaxationTime) => Ok(Self { steps: cap, tau_delta: None, capped: true }),
            Err(e) => Err(e),
        }
    }
}

/// Entropies of one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropySample {
    pub step: u64,
    pub s_a: f64,
    pub s_b: f64,
    pub s_ab: f64,
    /// I = S_A + S_B − S_AB
    pub mutual_information: f64,
}

/// S_A, S_B, S_AB and I for disjoint site sets `a`, `b`.
pub fn entropy_snapshot(state: &PureState, a: &[usize], b: &[usize]) -> Result<EntropySample> {
    if a.iter().any(|s| b.contains(s)) {
        return Err(Error::InvalidSites("subsystems A and B overlap"));
    }
    let mut ab: Vec<usize> = a.iter().chain(b).copied().collect();
    ab.sort_unstable();
    let s_a = state.entanglement_entropy(&sorted(a))?;
    let s_b = state.entanglement_entropy(&sorted(b))?;
    let s_ab = state.entanglement_entropy(&ab)?;
    Ok(EntropySample { step: 0, s_a, s_b, s_ab, mutual_information: s_a + s_b - s_ab })
}

fn sorted(sites: &[usize]) -> Vec<usize> {
    let mut v = sites.to_vec();
    v.sort_unstable();
    v
}

/// Time series of entropies after burn-in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropySeries {
    pub eta: f64,
    pub num_qubits: usize,
    pub seed: u64,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub burn_in: BurnIn,
    pub samples: Vec<EntropySample>,
}

impl EntropySeries {
    /// Mean of S_A.
    pub fn mean(&self) -> Result<f64> {
        mean_stderr(self.samples.iter().map(|s| s.s_a)).map(|m| m.0)
    }

    /// Standard error of S_A from the sample standard deviation.
    pub fn stderr(&self) -> Result<f64> {
        mean_stderr(self.samples.iter().map(|s| s.s_a)).map(|m| m.1)
    }

    pub fn mean_mutual_information(&self) -> Result<f64> {
        mean_stderr(self.samples.iter().map(|s| s.mutual_information)).map(|m| m.0)
    }

    pub fn stderr_mutual_information(&self) -> Result<f64> {
        mean_stderr(self.samples.iter().map(|s| s.mutual_information)).map(|m| m.1)
    }
}

fn mean_stderr<I: ExactSizeIterator<Item = f64> + Clone>(values: I) -> Result<(f64, f64)> {
    let n = values.len();
    if n == 0 {
        return Err(Error::EmptySeries("no entropy samples"));
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return Ok((mean, 0.0));
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    Ok((mean, (var / n as f64).sqrt()))
}

/// Evolves `initial` along one Born-rule trajectory, discards
/// `burn_in.steps` steps and samples `steps` consecutive snapshots of the
/// entropies of `a`, `b` and `a ∪ b`. The sampled state is the first
/// tracked vector of a one-vector [`LyapunovEngine`].
pub fn sample_entropies(
    circuit: MonitoredCircuit,
    initial: PureState,
    a: &[usize],
    b: &[usize],
    burn_in: BurnIn,
    steps: u64,
) -> Result<EntropySeries> {
    if steps == 0 {
        return Err(Error::EmptySeries("T = 0 leaves no samples"));
    }
    entropy_snapshot(&initial, a, b)?;
    let mut engine = LyapunovEngine::with_vectors(circuit, alloc::vec![initial], 1)?;
    for _ in 0..burn_in.steps {
        engine.run_block()?;
    }
    let mut samples = Vec::with_capacity(steps as usize);
    for _ in 0..steps {
        engine.run_block()?;
        let mut s = entropy_snapshot(engine.physical_state(), a, b)?;
        s.step = engine.time();
        samples.push(s);
    }
    Ok(EntropySeries {
        eta: circuit.eta(),
        num_qubits: circuit.num_qubits(),
        seed: circuit.seeds.master(),
        a: sorted(a),
        b: sorted(b),
        burn_in,
        samples,
    })
}

/// Entropy of `cut` against its complement.
pub fn measure_entropy_series(
    circuit: MonitoredCircuit,
    initial: PureState,
    cut: &[usize],
    burn_in: BurnIn,
    steps: u64,
) -> Result<EntropySeries> {
    let complement: Vec<usize> = (0..circuit.num_qubits()).filter(|s| !cut.contains(s)).collect();
    sample_entropies(circuit, initial, cut, &complement, burn_in, steps)
}

/// I^{A,B} between disjoint `a` and `b`.
pub fn mutual_information_series(
    circuit: MonitoredCircuit,
    initial: PureState,
    a: &[usize],
    b: &[usize],
    burn_in: BurnIn,
    steps: u64,
) -> Result<EntropySeries> {
    sample_entropies(circuit, initial, a, b, burn_in, steps)
}

/// Sites 0..L/2.
pub fn half_chain(num_qubits: usize) -> Vec<usize> {
    (0..num_qubits / 2).collect()
}
