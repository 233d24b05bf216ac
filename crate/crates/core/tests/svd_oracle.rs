mod common;

use common::svd_oracle::log_singular_values;
use monitored_core::channel::MonitoredCircuit;
use monitored_core::linalg::C64;
use monitored_core::lyapunov::{exponent_offset, finite_time_spectrum, LyapunovEngine, Refinement};

/// Engine exponents after `steps` steps at block length `b`, refined to the
/// finite-time singular values, and the oracle exponents of the same V_t.
fn compare(eta: f64, l: usize, b: u64, steps: u64, seed: u64, precision: usize) -> (Vec<f64>, Vec<f64>) {
    let circuit = MonitoredCircuit::new(eta, l, seed).unwrap();
    let mut engine = LyapunovEngine::new(circuit, 1 << l, b).unwrap();
    let initial: Vec<Vec<C64>> = engine.vectors().iter().map(|v| v.amplitudes().to_vec()).collect();
    engine.enable_record();
    while engine.time() < steps {
        engine.run_block().unwrap();
    }
    let record = engine.record().unwrap();
    let fts = finite_time_spectrum(record, initial, b, Refinement::default()).unwrap();
    assert!(fts.converged);
    let mut got = fts.exponents;
    got.sort_by(f64::total_cmp);
    let t = engine.time() as f64;
    let offset = exponent_offset(l);
    let mut want: Vec<f64> = log_singular_values(record, precision).iter().map(|s| -s / t - offset).collect();
    want.sort_by(f64::total_cmp);
    (got, want)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn refined_spectrum_matches_high_precision_svd() {
    for l in 2..=4 {
        for eta in [0.0, 0.3, 0.7] {
            for steps in [1, 7, 20, 32] {
                let (got, want) = compare(eta, l, 1, steps, 11 + l as u64, 512);
                let err = max_diff(&got, &want);
                assert!(err < 1e-8, "L {l} eta {eta} t {steps}: {err:e}");
            }
        }
    }
}

#[test]
fn long_run_matches_high_precision_svd() {
    let (got, want) = compare(0.1, 4, 8, 2048, 5, 400);
    let err = max_diff(&got, &want);
    assert!(err < 1e-6, "{err:e}");
}

