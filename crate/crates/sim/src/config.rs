//! Experiment configuration: one JSON document, overridable from the CLI.

use std::path::{Path, PathBuf};

use monitored_core::analysis::FitConfig;
use monitored_core::mixedsim::PurificationConfig;
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};

/// Environment variable holding the default output root.
pub const OUTPUT_ENV: &str = "MONITORED_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Gap,
    Spectrum,
    Entropy,
    MutualInfo,
    MemoryLoss,
    Purification,
    Fit,
    PauliWeights,
    OracleCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gap => "gap",
            Self::Spectrum => "spectrum",
            Self::Entropy => "entropy",
            Self::MutualInfo => "mutual_info",
            Self::MemoryLoss => "memory_loss",
            Self::Purification => "purification",
            Self::Fit => "fit",
            Self::PauliWeights => "pauli_weights",
            Self::OracleCheck => "oracle_check",
        }
    }
}

/// Block length b for the gap engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockPolicy {
    /// Double b from 2 until the exponents settle, once per (η, L).
    Auto,
    Fixed(u64),
}

/// Steps discarded before entropy sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BurnInPolicy {
    /// τ = τ_δ from a gap estimate of the same circuit, capped.
    Auto,
    Fixed(u64),
}

/// One inline fit input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub eta: f64,
    pub num_qubits: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub etas: Vec<f64>,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Disable the unitary layers.
    pub measurement_only: bool,
    pub block_length: BlockPolicy,
    /// Largest b tried by the auto policy.
    pub max_block_length: u64,
    /// c: convergence window in blocks.
    pub window: usize,
    /// d: relative convergence threshold.
    pub tolerance: f64,
    pub num_vectors: usize,
    pub min_steps: u64,
    pub max_steps: u64,
    /// T: sampled steps (entropy), horizon (memory loss), total steps
    /// (spectrum, Pauli weights).
    pub steps: u64,
    pub burn_in: BurnInPolicy,
    /// Cap on τ.
    pub burn_in_cap: u64,
    /// δ in τ_δ = |ln δ| / Δ.
    pub delta: f64,
    /// b for full spectra.
    pub spectrum_block_length: u64,
    /// Finite-time refinement of full spectra.
    pub refine: bool,
    /// c: snapshots averaged in the Pauli weights.
    pub snapshots: usize,
    /// Entropy cut; half chain when absent.
    pub cut: Option<Vec<usize>>,
    /// Mutual-information subsystems; first and last site when absent.
    pub subsystem_a: Option<Vec<usize>>,
    pub subsystem_b: Option<Vec<usize>>,
    pub initial_states: usize,
    /// Band for the memory-loss convergence time.
    pub band: f64,
    pub trajectories: usize,
    pub purification: PurificationConfig,
    pub fit: FitConfig,
    /// Gap summary CSV written by a gap run.
    pub fit_input: Option<PathBuf>,
    pub fit_data: Vec<FitRow>,
    /// Per-block CSV for gap runs.
    pub block_log: bool,
    pub output_dir: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Gap,
            etas: vec![0.3],
            sizes: vec![8],
            seeds: vec![1],
            measurement_only: false,
            block_length: BlockPolicy::Fixed(16),
            max_block_length: 64,
            window: 1000,
            tolerance: 3e-2,
            num_vectors: 2,
            min_steps: 0,
            max_steps: 1_000_000,
            steps: 1000,
            burn_in: BurnInPolicy::Auto,
            burn_in_cap: 10_000,
            delta: 1e-2,
            spectrum_block_length: 1,
            refine: false,
            snapshots: 100,
            cut: None,
            subsystem_a: None,
            subsystem_b: None,
            initial_states: 3,
            band: 0.5,
            trajectories: 100,
            purification: PurificationConfig::default(),
            fit: FitConfig::default(),
            fit_input: None,
            fit_data: Vec::new(),
            block_log: true,
            output_dir: None,
            threads: 0,
        }
    }
}

/// Flags that override fields of the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub etas: Option<Vec<f64>>,
    pub sizes: Option<Vec<usize>>,
    pub steps: Option<u64>,
    pub block_length: Option<u64>,
    pub trajectories: Option<usize>,
    pub fit_input: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> SimResult<Self> {
        serde_json::from_str(text).map_err(|e| SimError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> SimResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Precedence: CLI flag, then config file, then default.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(d) = &o.output_dir {
            self.output_dir = Some(d.clone());
        }
        if let Some(s) = o.seed {
            self.seeds = vec![s];
        }
        if let Some(t) = o.threads {
            self.threads = t;
        }
        if let Some(e) = &o.etas {
            self.etas = e.clone();
        }
        if let Some(l) = &o.sizes {
            self.sizes = l.clone();
        }
        if let Some(t) = o.steps {
            self.steps = t;
        }
        if let Some(b) = o.block_length {
            self.block_length = BlockPolicy::Fixed(b);
        }
        if let Some(n) = o.trajectories {
            self.trajectories = n;
        }
        if let Some(p) = &o.fit_input {
            self.fit_input = Some(p.clone());
        }
    }

    /// Output directory: `output_dir`, else `$MONITORED_OUT/<kind>`, else
    /// `out/<kind>`.
    pub fn resolved_output_dir(&self) -> PathBuf {
        if let Some(d) = &self.output_dir {
            return d.clone();
        }
        let root = std::env::var_os(OUTPUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"));
        root.join(self.kind.name())
    }

    /// The config as recorded in the manifest: no paths or thread counts.
    pub fn canonical(&self) -> Self {
        Self { output_dir: None, threads: 0, ..self.clone() }
    }

    pub fn validate(&self) -> SimResult<()> {
        let bad = |m: String| Err(SimError::Config(m));
        let uses_grid = !matches!(self.kind, ExperimentKind::Fit);
        if uses_grid && self.etas.is_empty() {
            return bad("eta grid is empty".into());
        }
        for &eta in &self.etas {
            if !(0.0..=1.0).contains(&eta) {
                return bad(format!("eta = {eta} outside [0, 1]"));
            }
            let simulates = !matches!(self.kind, ExperimentKind::OracleCheck | ExperimentKind::Fit);
            if simulates && eta >= 1.0 {
                return bad("eta = 1 has no finite gap; use eta < 1".into());
            }
        }
        let needs_sizes = !matches!(self.kind, ExperimentKind::OracleCheck | ExperimentKind::Fit);
        if needs_sizes {
            if self.sizes.is_empty() {
                return bad("L grid is empty".into());
            }
            let cap = match self.kind {
                ExperimentKind::Spectrum | ExperimentKind::PauliWeights | ExperimentKind::Purification => 10,
                _ => 14,
            };
            if let Some(&l) = self.sizes.iter().find(|&&l| l < 2 || l > cap) {
                return bad(format!("L = {l} outside [2, {cap}] for {}", self.kind.name()));
            }
            if self.seeds.is_empty() {
                return bad("seed list is empty".into());
            }
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return bad(format!("delta = {} outside (0, 1]", self.delta));
        }
        if !(self.tolerance > 0.0) {
            return bad(format!("d = {} must be positive", self.tolerance));
        }
        if !(self.fit.d > 0.0) {
            return bad(format!("fit d = {} must be positive", self.fit.d));
        }
        if self.window == 0 || self.num_vectors < 2 {
            return bad("window must be positive and at least two vectors are tracked".into());
        }
        if self.max_steps < self.min_steps {
            return bad("max_steps below min_steps".into());
        }
        if let BlockPolicy::Fixed(0) = self.block_length {
            return bad("block length must be positive".into());
        }
        if self.max_block_length < 2 {
            return bad("max_block_length must be at least 2".into());
        }
        if self.spectrum_block_length == 0 || self.snapshots == 0 {
            return bad("spectrum block length and snapshots must be positive".into());
        }
        if self.steps == 0 {
            return bad("steps must be positive".into());
        }
        if self.initial_states == 0 || !(self.band > 0.0) {
            return bad("memory loss needs initial states and a positive band".into());
        }
        if self.trajectories == 0 {
            return bad("trajectories must be positive".into());
        }
        self.purification.validate().map_err(|e| SimError::Config(format!("purification: {e}")))?;
        if self.kind == ExperimentKind::Fit && self.fit_input.is_none() && self.fit_data.is_empty() {
            return bad("fit needs fit_input or fit_data".into());
        }
        Ok(())
    }
}

/// Parse "0.1,0.2" or "0.1:0.5:0.1" (inclusive range).
pub fn parse_eta_list(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        let (start, stop, step) = (v[0], v[1], v[2]);
        if !(step > 0.0) {
            return Err("range step must be positive".into());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|k| start + step * k as f64).collect());
    }
    s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string())).collect()
}

pub fn parse_size_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',').map(|p| p.trim().parse::<usize>().map_err(|e| e.to_string())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn json_fields_and_unknown_keys() {
        let c = ExperimentConfig::from_json(r#"{"kind": "mutual_info", "etas": [0.1, 0.2], "block_length": {"fixed": 8}, "burn_in": "auto"}"#).unwrap();
        assert_eq!(c.kind, ExperimentKind::MutualInfo);
        assert_eq!(c.block_length, BlockPolicy::Fixed(8));
        assert_eq!(c.window, 1000);
        assert!(ExperimentConfig::from_json(r#"{"etaz": [0.1]}"#).is_err());
    }

    #[test]
    fn ranges_are_validated() {
        let base = ExperimentConfig::default();
        for c in [
            ExperimentConfig { etas: vec![1.2], ..base.clone() },
            ExperimentConfig { etas: vec![-0.1], ..base.clone() },
            ExperimentConfig { sizes: vec![1], ..base.clone() },
            ExperimentConfig { delta: 0.0, ..base.clone() },
            ExperimentConfig { delta: 1.5, ..base.clone() },
            ExperimentConfig { tolerance: 0.0, ..base.clone() },
            ExperimentConfig { kind: ExperimentKind::Spectrum, sizes: vec![12], ..base.clone() },
            ExperimentConfig { kind: ExperimentKind::Fit, ..base.clone() },
        ] {
            assert!(matches!(c.validate(), Err(SimError::Config(_))), "{c:?}");
        }
        let oracle = ExperimentConfig { kind: ExperimentKind::OracleCheck, etas: vec![0.0, 1.0], ..base };
        oracle.validate().unwrap();
    }

    #[test]
    fn overrides_take_precedence() {
        let mut c = ExperimentConfig::from_json(r#"{"seeds": [4, 5], "etas": [0.2]}"#).unwrap();
        c.apply(&Overrides { seed: Some(9), etas: Some(vec![0.7]), block_length: Some(4), ..Overrides::default() });
        assert_eq!(c.seeds, vec![9]);
        assert_eq!(c.etas, vec![0.7]);
        assert_eq!(c.block_length, BlockPolicy::Fixed(4));
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_eta_list("0.1,0.3").unwrap(), vec![0.1, 0.3]);
        let r = parse_eta_list("0.1:0.5:0.1").unwrap();
        assert_eq!(r.len(), 5);
        assert!((r[4] - 0.5).abs() < 1e-12);
        assert_eq!(parse_size_list("6, 8").unwrap(), vec![6, 8]);
        assert!(parse_size_list("x").is_err());
    }
}
