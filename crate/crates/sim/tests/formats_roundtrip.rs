use std::path::Path;

use monitored_core::analysis::PauliWeightProfile;
use monitored_core::channel::{replay, MonitoredCircuit};
use monitored_core::entanglement::{BurnIn, EntropySample, EntropySeries};
use monitored_core::lyapunov::LyapunovEngine;
use monitored_core::qstate::PureState;
use monitored_core::seed::rng_from_seed;
use monitored_sim::formats::*;
use proptest::prelude::*;

fn write_read<T>(bytes: &[u8], read: impl Fn(&Path) -> monitored_sim::SimResult<T>) -> T {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x");
    std::fs::write(&path, bytes).unwrap();
    read(&path).unwrap()
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e300..1e300f64, -1.0..1.0f64, Just(0.0), Just(1e-310)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gap_summary_round_trips(rows in prop::collection::vec(
        (0.0..1.0f64, 2usize..15, any::<u64>(), finite(), 0.0..1.0f64, any::<u64>(), any::<u64>(), 1u64..64, any::<bool>()),
        0..20,
    )) {
        let rows: Vec<GapRow> = rows
            .into_iter()
            .map(|(eta, num_qubits, seed, gap, std, steps, blocks_used, block_length, converged)| GapRow {
                eta, num_qubits, seed, gap, std, steps, blocks_used, block_length, converged,
            })
            .collect();
        let back = write_read(&gap_summary_table(&rows).to_bytes().unwrap(), read_gap_summary);
        prop_assert_eq!(back, rows);
    }

    #[test]
    fn entropy_series_round_trips(
        samples in prop::collection::vec((any::<u64>(), finite(), finite(), finite(), finite()), 1..30),
        tau in any::<u64>(),
        tau_delta in prop::option::of(0.0..1e6f64),
        capped in any::<bool>(),
        cut in prop::collection::btree_set(0usize..10, 1..5),
    ) {
        let a: Vec<usize> = cut.into_iter().collect();
        let series = EntropySeries {
            eta: 0.25,
            num_qubits: 10,
            seed: 9,
            b: (0..10).filter(|s| !a.contains(s)).collect(),
            a,
            burn_in: BurnIn { steps: tau, tau_delta, capped },
            samples: samples
                .into_iter()
                .map(|(step, s_a, s_b, s_ab, mutual_information)| EntropySample { step, s_a, s_b, s_ab, mutual_information })
                .collect(),
        };
        let back = write_read(&entropy_table(&series).to_bytes().unwrap(), read_entropy);
        prop_assert_eq!(back, series);
    }

    #[test]
    fn observables_round_trip(rows in prop::collection::vec(prop::collection::vec(finite(), 3), 1..40)) {
        let rows: Vec<ObservableRow> = rows
            .into_iter()
            .enumerate()
            .map(|(t, values)| ObservableRow { t: t as u64, max_difference: values[0].abs(), values })
            .collect();
        let back = write_read(&observable_table(0.3, 10, 1, &rows).to_bytes().unwrap(), read_observables);
        prop_assert_eq!(back, rows);
    }

    #[test]
    fn pauli_profile_round_trips(w in prop::collection::vec(0.0..10.0f64, 18)) {
        let p = PauliWeightProfile {
            eta: 0.4,
            num_qubits: 6,
            t: 2000,
            block_length: 2,
            c: 100,
            weights: [w[0..6].to_vec(), w[6..12].to_vec(), w[12..18].to_vec()],
        };
        let back = write_read(&pauli_table(&p).to_bytes().unwrap(), read_pauli);
        prop_assert_eq!(back, p);
    }

    #[test]
    fn oracle_rows_round_trip(etas in prop::collection::vec(0.0..=1.0f64, 1..10)) {
        let rows: Vec<OracleRow> = etas
            .into_iter()
            .map(|eta| OracleRow { eta, p_eta: monitored_core::analysis::p_eta(eta), gap: monitored_core::analysis::measurement_only_gap(eta).unwrap_or(f64::INFINITY) })
            .collect();
        let back = write_read(&oracle_table(&rows).to_bytes().unwrap(), read_oracle);
        prop_assert_eq!(back, rows);
    }

    #[test]
    fn trajectory_record_round_trips_and_replays(eta in 0.0..0.95f64, l in 2usize..7, seed in any::<u64>(), steps in 1u64..40) {
        let circuit = MonitoredCircuit::new(eta, l, seed).unwrap();
        let mut engine = LyapunovEngine::new(circuit, 1, 1).unwrap();
        engine.enable_record();
        for _ in 0..steps {
            engine.run_block().unwrap();
        }
        let record = engine.record().unwrap().clone();
        let back = write_read(trajectory_jsonl(&record).unwrap().as_bytes(), read_trajectory_jsonl);
        prop_assert_eq!(&back, &record);
        let psi = PureState::haar_random(l, &mut rng_from_seed(seed ^ 1));
        let a = replay(&record, &psi).unwrap();
        let b = replay(&back, &psi).unwrap();
        prop_assert_eq!(a.amplitudes(), b.amplitudes());
    }
}

#[test]
fn purification_rows_round_trip() {
    let rows: Vec<PurificationRow> = (0..5)
        .map(|k| PurificationRow {
            trajectory_id: k / 2,
            t: 20 + k as u64,
            lambda_1: 0.9,
            lambda_2: 1e-30,
            delta_t: 0.5,
            ln_lambda_1: 0.9f64.ln(),
            ln_lambda_2: -69.0,
        })
        .collect();
    let back = write_read(&purification_table(0.5, 8, &rows).to_bytes().unwrap(), read_purification);
    assert_eq!(back, rows);
}

#[test]
fn corrupted_schema_is_rejected_by_name() {
    let bytes = b"eta,L,seed,gap\n0.1,6,1,0.5\n";
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gaps.csv");
    std::fs::write(&path, bytes).unwrap();
    let err = read_gap_summary(&path).unwrap_err().to_string();
    assert!(err.contains("gaps.csv") && err.contains("std"), "{err}");
}
