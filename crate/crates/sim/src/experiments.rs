//! Experiment drivers: one per [`ExperimentKind`].

use std::collections::BTreeMap;

use monitored_core::analysis::{
    fit_gap_extrapolation, hamiltonian_width_bound, measurement_only_gap, p_eta, pauli_weight_profile, GapFitResult, GapPoint,
    WidthBound,
};
use monitored_core::channel::MonitoredCircuit;
use monitored_core::entanglement::{half_chain, measure_entropy_series, mutual_information_series, BurnIn, EntropySeries};
use monitored_core::lyapunov::{
    run_full_spectrum, run_gap_estimate, select_block_length, BlockCalibration, GapConfig, GapEstimate, Refinement, SpectrumConfig,
};
use monitored_core::mixedsim::{run_purification, summarize_purification, PurificationSummary};
use monitored_core::qstate::PureState;
use monitored_core::seed::{Domain, SeedStream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{BlockPolicy, BurnInPolicy, ExperimentConfig, ExperimentKind};
use crate::error::{SimError, SimResult};
use crate::formats::{
    block_header, block_record, entropy_summary_table, entropy_table, fmt_f64, gap_summary_table, observable_table,
    oracle_table, pauli_table, purification_rows, purification_table, read_gap_summary, to_json, trajectory_jsonl, BlockRow,
    CsvTable, EntropyRow, GapRow, OracleRow,
};
use crate::manifest::{Manifest, OutputDir};
use crate::memory_loss::{memory_loss_experiment, MemoryLossConfig};

pub const FIT_SUMMARY_COLUMNS: [&str; 8] = ["eta", "gap_inf", "alpha", "beta", "theta_min", "err_lo", "err_hi", "phase"];

/// Outcome of [`run_experiment`] once the output directory exists.
#[derive(Debug)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub error: Option<SimError>,
}

/// Validate, run and write the manifest. Configuration errors return
/// before anything is written; simulation errors leave a partial manifest.
pub fn run_experiment(config: &ExperimentConfig) -> SimResult<RunOutcome> {
    config.validate()?;
    let out = OutputDir::create(config.resolved_output_dir())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| SimError::Config(format!("thread pool: {e}")))?;
    let result = pool.install(|| dispatch(config, &out));
    let error = result.err();
    let manifest = out.finish(config, error.as_ref())?;
    Ok(RunOutcome { manifest, error })
}

fn dispatch(config: &ExperimentConfig, out: &OutputDir) -> SimResult<()> {
    match config.kind {
        ExperimentKind::Gap => gap(config, out),
        ExperimentKind::Spectrum => spectrum(config, out),
        ExperimentKind::Entropy | ExperimentKind::MutualInfo => entropy(config, out),
        ExperimentKind::MemoryLoss => memory_loss(config, out),
        ExperimentKind::Purification => purification(config, out),
        ExperimentKind::Fit => fit(config, out),
        ExperimentKind::PauliWeights => pauli(config, out),
        ExperimentKind::OracleCheck => oracle(config, out),
    }
}

/// `eta0.3_L8_seed1`
pub fn cell_tag(eta: f64, num_qubits: usize, seed: u64) -> String {
    format!("eta{eta}_L{num_qubits}_seed{seed}")
}

fn cells(config: &ExperimentConfig) -> Vec<(f64, usize, u64)> {
    let mut v = Vec::new();
    for &eta in &config.etas {
        for &l in &config.sizes {
            for &seed in &config.seeds {
                v.push((eta, l, seed));
            }
        }
    }
    v
}

pub fn circuit(config: &ExperimentConfig, eta: f64, num_qubits: usize, seed: u64) -> SimResult<MonitoredCircuit> {
    Ok(if config.measurement_only {
        MonitoredCircuit::measurement_only(eta, num_qubits, seed)?
    } else {
        MonitoredCircuit::new(eta, num_qubits, seed)?
    })
}

pub fn gap_config(config: &ExperimentConfig, block_length: u64) -> GapConfig {
    GapConfig {
        num_vectors: config.num_vectors,
        block_length,
        window: config.window,
        tolerance: config.tolerance,
        min_steps: config.min_steps,
        max_steps: config.max_steps,
        ..GapConfig::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub estimate: GapEstimate,
    pub calibration: Option<BlockCalibration>,
}

/// Block length per (η, L), calibrated on the first seed when automatic.
fn block_lengths(config: &ExperimentConfig) -> SimResult<BTreeMap<(u64, usize), (u64, Option<BlockCalibration>)>> {
    let keys: Vec<(f64, usize)> = config.etas.iter().flat_map(|&e| config.sizes.iter().map(move |&l| (e, l))).collect();
    let entries = keys
        .par_iter()
        .map(|&(eta, l)| {
            let v = match config.block_length {
                BlockPolicy::Fixed(b) => (b, None),
                BlockPolicy::Auto => {
                    let c = circuit(config, eta, l, config.seeds[0])?;
                    let cal = select_block_length(c, &gap_config(config, 2), config.max_block_length)?;
                    (cal.block_length, Some(cal))
                }
            };
            Ok(((eta.to_bits(), l), v))
        })
        .collect::<SimResult<Vec<_>>>()?;
    Ok(entries.into_iter().collect())
}

fn gap(config: &ExperimentConfig, out: &OutputDir) -> SimResult<()> {
    let blocks = block_lengths(config)?;
    let rows = cells(config)
        .par_iter()
        .map(|&(eta, l, seed)| {
            let (b, cal) = blocks[&(eta.to_bits(), l)].clone();
            let c = circuit(config, eta, l, seed)?;
            let mut log = Vec::new();
            let estimate = run_gap_estimate(c, &gap_config(config, b), |r| {
                if config.block_log {
                    log.push(BlockRow {
                        block_index: r.block_index,
                        t: r.t,
                        exponents: r.exponents.to_vec(),
                        window_std: r.window_std.map(<[f64]>::to_vec),
                    });
                }
            })?;
            let tag = cell_tag(eta, l, seed);
            if config.block_log {
                let mut t = CsvTable { header: block_header(config.num_vectors), ..CsvTable::default() }
                    .meta("eta", fmt_f64(eta))
                    .meta("L", l)
                    .meta("seed", seed)
                    .meta("block_length", b);
                t.rows = log.iter().map(block_record).collect();
                out.write(&format!("blocks_{tag}.csv"), &t.to_bytes()?)?;
            }
            let row = GapRow {
                eta,
                num_qubits: l,
                seed,
                gap: estimate.gap,
                std: estimate.std,
                steps: estimate.steps,
                blocks_used: estimate.blocks_used,
                block_length: estimate.block_length,
                converged: estimate.converged,
            };
            let report = GapReport { estimate, calibration: cal };
            out.write(&format!("gap_{tag}.json"), to_json(&report)?.as_bytes())?;
            Ok(row)
        })
        .collect::<SimResult<Vec<_>>>()?;
    out.write("gaps.csv", &gap_summary_table(&rows).to_bytes()?)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub eta: f64,
    pub num_qubits: usize,
    pub seed: u64,
    pub t: u64,
    pub block_length: u64,
    pub refined: bool,
    /// ε_1 ≤ … ≤ ε_N.
    pub spectrum: Vec<f64>,
    pub width_bound: WidthBound,
}

fn spectrum_config(config: &ExperimentConfig, snapshots: usize) -> SpectrumConfig {
    SpectrumConfig {
        block_length: config.spectrum_block_length,
        steps: config.steps,
        snapshots,
        refinement: config.refine.then(Refinement::default),
    }
}

fn check_width(ham: &monitored_core::lyapunov::EffectiveHamiltonian) -> SimResult<WidthBound> {
    let w = hamiltonian_width_bound(ham)?;
    if !w.satisfied {
        return Err(SimError::Invariant(format!(
            "spectral width {} exceeds L ln((1+η)/(1−η)) = {} at η = {}, L = {}",
            w.width, w.bound, ham.eta, ham.num_qubits
        )));
    }
    Ok(w)
}

fn spectrum(config: &ExperimentConfig, out: &OutputDir) -> SimResult<()> {
    cells(config).par_iter().try_for_each(|&(eta, l, seed)| {
        let hams = run_full_spectrum(circuit(config, eta, l, seed)?, &spectrum_config(config, 1))?;
        let ham = hams.last().expect("one snapshot");
        let width_bound = check_width(ham)?;
        let report = SpectrumReport {
            eta,
            num_qubits: l,
            seed,
            t: ham.time,
            block_length: ham.block_length,
            refined: ham.refined,
            spectrum: ham.spectrum.clone(),
            width_bound,
        };
        out.write(&format!("spectrum_{}.json", cell_tag(eta, l, seed)), to_json(&report)?.as_bytes())?;
        Ok(())
    })
}

fn check_sites(sites: &[usize], l: usize, name: &str) -> SimResult<()> {
    if sites.is_empty() || sites.iter().any(|&s| s >= l) {
        return Err(SimError::Config(format!("{name} must be a non-empty set of sites below L = {l}")));
    }
    Ok(())
}

fn burn_in(config: &ExperimentConfig, c: MonitoredCircuit) -> SimResult<BurnIn> {
    Ok(match config.burn_in {
        BurnInPolicy::Fixed(n) => BurnIn::fixed(n),
        BurnInPolicy::Auto => {
            let b = match config.block_length {
                BlockPolicy::Fixed(b) => b,
                BlockPolicy::Auto => select_block_length(c, &gap_config(config, 2), config.max_block_length)?.block_length,
            };
            let est = run_gap_estimate(c, &gap_config(config, b), |_| {})?;
            BurnIn::from_gap(est.gap, config.delta, config.burn_in_cap)?
        }
    })
}

fn entropy(config: &ExperimentConfig, out: &OutputDir) -> SimResult<()> {
    let mutual = config.kind == ExperimentKind::MutualInfo;
    for &l in &config.sizes {
        if mutual {
            let a = config.subsystem_a.as_deref().ok_or_else(|| SimError::Config("mutual information needs subsystem_a".into()))?;
            let b = config.subsystem_b.as_deref().ok_or_else(|| SimError::Config("mutual information needs subsystem_b".into()))?;
            check_sites(a, l, "subsystem_a")?;
            check_sites(b, l, "subsystem_b")?;
            if a.iter().any(|s| b.contains(s)) {
                return Err(SimError::Config("subsystems A and B overlap".into()));
            }
        } else if let Some(cut) = &config.cut {
            check_sites(cut, l, "cut")?;
        }
    }
    let rows = cells(config)
        .par_iter()
        .map(|&(eta, l, seed)| {
            let c = circuit(config, eta, l, seed)?;
            let tau = burn_in(config, c)?;
            let initial = PureState::haar_random(l, &mut c.seeds.rng(Domain::InitialState, 2, 0));
            let series: EntropySeries = if mutual {
                let a = config.subsystem_a.as_deref().unwrap_or_default();
                let b = config.subsystem_b.as_deref().unwrap_or_default();
                mutual_information_series(c, initial, a, b, tau, config.steps)?
            } else {
                let cut = config.cut.clone().unwrap_or_else(|| half_chain(l));
                measure_entropy_series(c, initial, &cut, tau, config.steps)?
            };
            let prefix = if mutual { "mutual_info" } else { "entropy" };
            out.write(&format!("{prefix}_{}.csv", cell_tag(eta, l, seed)), &entropy_table(&series).to_bytes()?)?;
            let (mean, stderr) = if mutual {
                (series.mean_mutual_information()?, series.stderr_mutual_information()?)
            } else {
                (series.mean()?, series.stderr()?)
            };
            Ok(EntropyRow {
                eta,
                num_qubits: l,
                seed,
                mean,
                stderr,
                tau: tau.steps,
                tau_delta: tau.tau_delta,
                tau_capped: tau.capped,
            })
        })
        .collect::<SimResult<Vec<_>>>()?;
    let name = if mutual { "mutual_info_summary.csv" } else { "entropy_summary.csv" };
    out.write(name, &entropy_summary_table(&rows).to_bytes()?)?;
    Ok(())
}

fn memory_loss(config: &ExperimentConfig, out: &OutputDir) -> SimResult<()> {
    cells(config).par_iter().try_for_each(|&(eta, l, seed)| {
        let c = circuit(config, eta, l, seed)?;
        let b = match config.block_length {
            BlockPolicy::Fixed(b) => b,
            BlockPolicy::Auto => select_block_length(c, &gap_config(config, 2), config.max_block_length)?.block_length,
        };
        let ml = MemoryLossConfig {
            num_initial_states: config.initial_states,
            steps: config.steps,
            delta: config.delta,
            band: config.band,
            gap: Some(gap_config(config, b)),
        };
        let run = memory_loss_experiment(c, &ml)?;
        let tag = cell_tag(eta, l, seed);
        out.write(&format!("observables_{tag}.csv"), &observable_table(eta, l, seed, &run.observables).to_bytes()?)?;
        out.write(&format!("record_{tag}.jsonl"), trajectory_jsonl(&run.record)?.as_bytes())?;
        out.write(&format!("memory_loss_{tag}.json"), to_json(&run.report)?.as_bytes())?;
        Ok(())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurificationReport {
    pub seed: u64,
    /// Circuit seed of trajectory k, in order.
    pub trajectory_seeds: Vec<u64>,
    pub window_start: u64,
    pub window_end: u64,
    pub summary: PurificationSummary,
}

/// Circuit seed of trajectory `k` in a purification cell.
pub fn trajectory_seed(seed: u64, k: usize) -> u64 {
    SeedStream::new(seed).child(k as u64).master()
}

fn purification(config: &ExperimentConfig, out: &OutputDir) -> SimResult<()> {
    cells(config).iter().try_for_each(|&(eta, l, seed)| {
        let seeds: Vec<u64> = (0..config.trajectories).map(|k| trajectory_seed(seed, k)).collect();
        let runs = seeds
            .par_iter()
            .map(|&s| Ok(run_purification(&circuit(config, eta, l, s)?, &config.purification)?))
            .collect::<SimResult<Vec<_>>>()?;
        let tag = cell_tag(eta, l, seed);
        let rows = purification_rows(&runs);
        out.write(&format!("purification_{tag}.csv"), &purification_table(eta, l, &rows).to_bytes()?)?;
        let report = PurificationReport {
            seed,
            trajectory_seeds: seeds,
            window_start: config.purification.window_start,
            window_end: config.purification.window_end,
            summary: summarize_purification(&runs)?,
        };
        out.write(&format!("purification_{tag}.json"), to_json(&report)?.as_bytes())?;
        Ok(())
    })
}

/// Inputs grouped by η: seed-averaged gaps from `fit_input` plus inline rows.
pub fn fit_inputs(config: &ExperimentConfig) -> SimResult<Vec<(f64, Vec<GapPoint>)>> {
    let mut acc: BTreeMap<(u64, usize), (f64, usize)> = BTreeMap::new();
    let mut add = |eta: f64, l: usize, gap: f64| {
        let e = acc.entry((eta.to_bits(), l)).or_insert((0.0, 0));
        e.0 += gap;
        e.1 += 1;
    };
    if let Some(path) = &config.fit_input {
        for r in read_gap_summary(path)? {
            add(r.eta, r.num_qubits, r.gap);
        }
    }
    for r in &config.fit_data {
        add(r.eta, r.num_qubits, r.gap);
    }
    let mut by_eta: BTreeMap<u64, Vec<GapPoint>> = BTreeMap::new();
    for ((eta, l), (sum, n)) in acc {
        by_eta.entry(eta).or_default().push(GapPoint { num_qubits: l, gap: sum / n as f64 });
    }
    let mut v: Vec<(f64, Vec<GapPoint>)> = by_eta.into_iter().map(|(e, p)| (f64::from_bits(e), p)).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(v)
}

pub fn fit_summary_table(fits: &[GapFitResult]) -> CsvTable {
    let mut t = CsvTable::new(&FIT_SUMMARY_COLUMNS);
    t.rows = fits
        .iter()
        .map(|f| {
            let phase = serde_json::to_value(f.phase).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
            vec![
                fmt_f64(f.eta),
                fmt_f64(f.gap_inf),
                fmt_f64(f.alpha),
                fmt_f64(f.beta),
                fmt_f64(f.theta_min),
                fmt_f64(f.err_lo),
                fmt_f64(f.err_hi),
                phase,
            ]
        })
        .collect();
    t
}

fn fit(config: &ExperimentConfig, out: &OutputDir) -> SimResult<()> {
    let inputs = fit_inputs(config)?;
    if inputs.is_empty() {
        return Err(SimError::Config("fit input holds no gaps".into()));
    }
    let mut fits = Vec::new();
    for (eta, points) in inputs {
        let f = fit_gap_extrapolation(eta, &points, &config.fit)?;
        out.write(&format!("fit_eta{eta}.json"), to_json(&f)?.as_bytes())?;
        fits.push(f);
    }
    out.write("fits.csv", &fit_summary_table(&fits).to_bytes()?)?;
    Ok(())
}

fn pauli(config: &ExperimentConfig, out: &OutputDir) -> SimResult<()> {
    cells(config).par_iter().try_for_each(|&(eta, l, seed)| {
        let hams = run_full_spectrum(circuit(config, eta, l, seed)?, &spectrum_config(config, config.snapshots))?;
        for h in &hams {
            check_width(h)?;
        }
        let profile = pauli_weight_profile(&hams)?;
        let tag = cell_tag(eta, l, seed);
        out.write(&format!("pauli_{tag}.csv"), &pauli_table(&profile).to_bytes()?)?;
        out.write(&format!("pauli_{tag}.json"), to_json(&profile)?.as_bytes())?;
        Ok(())
    })
}

fn oracle(config: &ExperimentConfig, out: &OutputDir) -> SimResult<()> {
    let rows = config
        .etas
        .iter()
        .map(|&eta| {
            let gap = match measurement_only_gap(eta) {
                Ok(g) => g,
                Err(monitored_core::Error::DivergentGap) => f64::INFINITY,
                Err(e) => return Err(e.into()),
            };
            Ok(OracleRow { eta, p_eta: p_eta(eta), gap })
        })
        .collect::<SimResult<Vec<_>>>()?;
    out.write("oracle.csv", &oracle_table(&rows).to_bytes()?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::RunStatus;

    fn base(kind: ExperimentKind, dir: &std::path::Path) -> ExperimentConfig {
        ExperimentConfig { kind, output_dir: Some(dir.to_path_buf()), threads: 1, ..ExperimentConfig::default() }
    }

    #[test]
    fn cell_tags_are_distinct() {
        assert_eq!(cell_tag(0.3, 8, 1), "eta0.3_L8_seed1");
        assert_ne!(cell_tag(0.3, 8, 1), cell_tag(0.3, 8, 2));
    }

    #[test]
    fn oracle_writes_infinity_at_eta_one() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig { etas: vec![0.5, 1.0], ..base(ExperimentKind::OracleCheck, dir.path()) };
        let run = run_experiment(&cfg).unwrap();
        assert!(run.error.is_none());
        let rows = crate::formats::read_oracle(&dir.path().join("oracle.csv")).unwrap();
        assert!((rows[0].gap - 0.878890).abs() < 1e-6);
        assert!(rows[1].gap.is_infinite());
    }

    #[test]
    fn config_errors_write_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("never");
        let cfg = ExperimentConfig { etas: vec![1.0], ..base(ExperimentKind::Gap, &target) };
        let err = run_experiment(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(!target.exists());
    }

    #[test]
    fn small_gap_run_lists_every_cell() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            etas: vec![0.5],
            sizes: vec![4],
            seeds: vec![1, 2],
            window: 50,
            max_steps: 20_000,
            ..base(ExperimentKind::Gap, dir.path())
        };
        let run = run_experiment(&cfg).unwrap();
        assert_eq!(run.manifest.status, RunStatus::Complete);
        let names: Vec<&str> = run.manifest.artifacts.iter().map(|a| a.path.as_str()).collect();
        assert_eq!(
            names,
            [
                "blocks_eta0.5_L4_seed1.csv",
                "blocks_eta0.5_L4_seed2.csv",
                "gap_eta0.5_L4_seed1.json",
                "gap_eta0.5_L4_seed2.json",
                "gaps.csv"
            ]
        );
        let rows = read_gap_summary(&dir.path().join("gaps.csv")).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.gap > 0.0));
    }

    #[test]
    fn fit_averages_seeds() {
        let cfg = ExperimentConfig {
            kind: ExperimentKind::Fit,
            fit_data: vec![
                crate::config::FitRow { eta: 0.5, num_qubits: 4, gap: 1.0 },
                crate::config::FitRow { eta: 0.5, num_qubits: 4, gap: 3.0 },
                crate::config::FitRow { eta: 0.2, num_qubits: 6, gap: 0.5 },
            ],
            ..ExperimentConfig::default()
        };
        let inputs = fit_inputs(&cfg).unwrap();
        assert_eq!(inputs.len(), 2);
        assert_eq!(inputs[0].0, 0.2);
        assert_eq!(inputs[1].1, vec![GapPoint { num_qubits: 4, gap: 2.0 }]);
    }

    #[test]
    fn trajectory_seeds_differ() {
        assert_ne!(trajectory_seed(1, 0), trajectory_seed(1, 1));
        assert_ne!(trajectory_seed(1, 0), trajectory_seed(2, 0));
        assert_eq!(trajectory_seed(5, 3), trajectory_seed(5, 3));
    }
}
