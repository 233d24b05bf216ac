//! Memory loss: one sampled V_t pushed through several initial states.

use monitored_core::channel::{replay_steps, MonitoredCircuit, TrajectoryRecord};
use monitored_core::lyapunov::{relaxation_time, run_gap_estimate, GapConfig, LyapunovEngine};
use monitored_core::qstate::PureState;
use monitored_core::seed::Domain;
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};
use crate::formats::ObservableRow;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryLossConfig {
    pub num_initial_states: usize,
    /// Horizon T.
    pub steps: u64,
    /// δ for τ_δ.
    pub delta: f64,
    /// Pairwise ⟨X⟩ band defining convergence.
    pub band: f64,
    /// Gap run that supplies τ_δ; `None` skips it.
    pub gap: Option<GapConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryLossReport {
    pub eta: f64,
    pub num_qubits: usize,
    pub seed: u64,
    pub steps: u64,
    pub band: f64,
    pub delta: f64,
    pub initial_states: usize,
    pub gap: Option<f64>,
    pub gap_converged: Option<bool>,
    pub tau_delta: Option<f64>,
    /// Why τ_δ is missing or unreliable.
    pub tau_flag: Option<String>,
    /// First t after which every pairwise |Δ⟨X⟩| stays below the band.
    pub convergence_time: Option<u64>,
    /// max over t ≥ 2τ_δ of the largest pairwise |Δ⟨X⟩|.
    pub max_difference_after_two_tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryLossRun {
    pub report: MemoryLossReport,
    /// t = 0..=T.
    pub observables: Vec<ObservableRow>,
    pub record: TrajectoryRecord,
}

/// ⟨X⟩ = Σ_ℓ ⟨σ_1^ℓ⟩ for every state at t = 0 and after every recorded step.
pub fn observables_under_record(record: &TrajectoryRecord, initial: &[PureState]) -> SimResult<Vec<ObservableRow>> {
    let steps = record.steps.len();
    let mut values = vec![Vec::with_capacity(initial.len()); steps + 1];
    for psi in initial {
        let mut state = psi.clone();
        values[0].push(state.total_sigma_x());
        let mut k = 1;
        replay_steps(record, &mut state, |_, s| {
            values[k].push(s.total_sigma_x());
            k += 1;
        })?;
    }
    Ok(values
        .into_iter()
        .enumerate()
        .map(|(t, v)| {
            let mut max_difference: f64 = 0.0;
            for i in 0..v.len() {
                for j in i + 1..v.len() {
                    max_difference = max_difference.max((v[i] - v[j]).abs());
                }
            }
            ObservableRow { t: t as u64, values: v, max_difference }
        })
        .collect())
}

/// First t from which every later row stays below `band`.
pub fn convergence_time(rows: &[ObservableRow], band: f64) -> Option<u64> {
    let last_bad = rows.iter().rposition(|r| !(r.max_difference < band));
    match last_bad {
        None => rows.first().map(|r| r.t),
        Some(k) => rows.get(k + 1).map(|r| r.t),
    }
}

/// Haar-random initial states from the circuit's initial-state substream.
pub fn initial_states(circuit: &MonitoredCircuit, count: usize) -> Vec<PureState> {
    (0..count)
        .map(|k| PureState::haar_random(circuit.num_qubits(), &mut circuit.seeds.rng(Domain::InitialState, 1, k as u64)))
        .collect()
}

pub fn memory_loss_experiment(circuit: MonitoredCircuit, config: &MemoryLossConfig) -> SimResult<MemoryLossRun> {
    if config.num_initial_states == 0 || config.steps == 0 || !(config.band > 0.0) {
        return Err(SimError::Config("memory loss needs initial states, steps and a positive band".into()));
    }
    let states = initial_states(&circuit, config.num_initial_states);
    let mut engine = LyapunovEngine::with_vectors(circuit, vec![states[0].clone()], 1)?;
    engine.enable_record();
    for _ in 0..config.steps {
        engine.run_block()?;
    }
    let record = engine.record().expect("record enabled").clone();
    let observables = observables_under_record(&record, &states)?;

    let (mut gap, mut gap_converged, mut tau_delta, mut tau_flag) = (None, None, None, None);
    if let Some(gc) = &config.gap {
        let est = run_gap_estimate(circuit, gc, |_| {})?;
        gap = Some(est.gap);
        gap_converged = Some(est.converged);
        match relaxation_time(est.gap, config.delta) {
            Ok(tau) => {
                tau_delta = Some(tau);
                if !est.converged {
                    tau_flag = Some("gap estimate did not converge".to_string());
                }
            }
            Err(monitored_core::Error::NoRelaxationTime) => tau_flag = Some("gap unavailable: estimate is not positive".to_string()),
            Err(e) => return Err(e.into()),
        }
    } else {
        tau_flag = Some("gap not estimated".to_string());
    }
    let max_difference_after_two_tau = tau_delta.and_then(|tau| {
        observables.iter().filter(|r| r.t as f64 >= 2.0 * tau).map(|r| r.max_difference).reduce(f64::max)
    });
    let report = MemoryLossReport {
        eta: circuit.eta(),
        num_qubits: circuit.num_qubits(),
        seed: circuit.seeds.master(),
        steps: config.steps,
        band: config.band,
        delta: config.delta,
        initial_states: config.num_initial_states,
        gap,
        gap_converged,
        tau_delta,
        tau_flag,
        convergence_time: convergence_time(&observables, config.band),
        max_difference_after_two_tau,
    };
    Ok(MemoryLossRun { report, observables, record })
}
