//! Artifact formats. CSV floats use 17 significant digits; JSON floats use
//! the shortest representation that parses back to the same value. Every
//! writer has a reader with `read(write(x)) == x`.

use std::path::Path;

use monitored_core::analysis::PauliWeightProfile;
use monitored_core::channel::{Outcome, StepRecord, TrajectoryRecord};
use monitored_core::entanglement::{BurnIn, EntropySample, EntropySeries};
use monitored_core::mixedsim::PurificationTrajectory;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn to_json<T: Serialize>(value: &T) -> SimResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| SimError::format("<json>", e))?;
    s.push('\n');
    Ok(s)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> SimResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| SimError::format(path, e))
}

/// A CSV body preceded by `# key=value` metadata lines.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), ..Self::default() }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    pub fn to_bytes(&self) -> SimResult<Vec<u8>> {
        let mut out = Vec::new();
        for (k, v) in &self.metadata {
            out.extend_from_slice(format!("# {k}={v}\n").as_bytes());
        }
        let mut w = csv::Writer::from_writer(out);
        let fail = |e: csv::Error| SimError::format("<csv>", e);
        w.write_record(&self.header).map_err(fail)?;
        for r in &self.rows {
            w.write_record(r).map_err(fail)?;
        }
        w.into_inner().map_err(|e| SimError::format("<csv>", e.error()))
    }

    pub fn parse(path: &Path, bytes: &[u8]) -> SimResult<Self> {
        let text = std::str::from_utf8(bytes).map_err(|e| SimError::format(path, e))?;
        let mut metadata = Vec::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let body = line.trim_start_matches('#').trim();
            let (k, v) = body.split_once('=').ok_or_else(|| SimError::format(path, format!("bad metadata line {line:?}")))?;
            metadata.push((k.to_string(), v.to_string()));
        }
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes);
        let header: Vec<String> = r.headers().map_err(|e| SimError::format(path, e))?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec.map_err(|e| SimError::format(path, e))?.iter().map(String::from).collect());
        }
        Ok(Self { metadata, header, rows })
    }

    pub fn read(path: &Path) -> SimResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| SimError::io(path, e))?;
        Self::parse(path, &bytes)
    }

    pub fn get_meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Fails unless the header starts with `expected`.
    pub fn expect_columns(&self, path: &Path, expected: &[&str]) -> SimResult<()> {
        if self.header.len() < expected.len() || self.header.iter().zip(expected).any(|(a, b)| a != b) {
            return Err(SimError::format(path, format!("expected columns {expected:?}, found {:?}", self.header)));
        }
        Ok(())
    }
}

fn field<T: std::str::FromStr>(path: &Path, s: &str) -> SimResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| SimError::format(path, format!("{s:?}: {e}")))
}

fn opt_field(path: &Path, s: &str) -> SimResult<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        field(path, s).map(Some)
    }
}

fn meta_field<T: std::str::FromStr>(t: &CsvTable, path: &Path, key: &str) -> SimResult<T>
where
    T::Err: std::fmt::Display,
{
    let v = t.get_meta(key).ok_or_else(|| SimError::format(path, format!("missing metadata {key}")))?;
    field(path, v)
}

fn sites_to_string(sites: &[usize]) -> String {
    sites.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
}

fn sites_from_string(path: &Path, s: &str) -> SimResult<Vec<usize>> {
    s.split_whitespace().map(|x| field(path, x)).collect()
}

/// One line of the per-block log.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockRow {
    pub block_index: u64,
    pub t: u64,
    pub exponents: Vec<f64>,
    /// Empty until the window has filled.
    pub window_std: Option<Vec<f64>>,
}

pub fn block_header(n: usize) -> Vec<String> {
    let mut h = vec!["block_index".to_string(), "t".to_string()];
    h.extend((1..=n).map(|i| format!("eps_{i}")));
    h.extend((1..=n).map(|i| format!("window_std_{i}")));
    h
}

pub fn block_record(row: &BlockRow) -> Vec<String> {
    let n = row.exponents.len();
    let mut r = vec![row.block_index.to_string(), row.t.to_string()];
    r.extend(row.exponents.iter().map(|&x| fmt_f64(x)));
    match &row.window_std {
        Some(s) => r.extend(s.iter().map(|&x| fmt_f64(x))),
        None => r.extend(std::iter::repeat_n(String::new(), n)),
    }
    r
}

pub fn read_blocks(path: &Path) -> SimResult<Vec<BlockRow>> {
    let t = CsvTable::read(path)?;
    t.expect_columns(path, &["block_index", "t"])?;
    let n = (t.header.len() - 2) / 2;
    t.rows
        .iter()
        .map(|r| {
            let exponents = r[2..2 + n].iter().map(|x| field(path, x)).collect::<SimResult<Vec<f64>>>()?;
            let window_std = if r[2 + n].is_empty() {
                None
            } else {
                Some(r[2 + n..].iter().map(|x| field(path, x)).collect::<SimResult<Vec<f64>>>()?)
            };
            Ok(BlockRow { block_index: field(path, &r[0])?, t: field(path, &r[1])?, exponents, window_std })
        })
        .collect()
}

pub const ENTROPY_COLUMNS: [&str; 5] = ["step", "S_A", "S_B", "S_AB", "I"];

pub fn entropy_table(series: &EntropySeries) -> CsvTable {
    let mut t = CsvTable::new(&ENTROPY_COLUMNS)
        .meta("eta", fmt_f64(series.eta))
        .meta("L", series.num_qubits)
        .meta("seed", series.seed)
        .meta("tau", series.burn_in.steps)
        .meta("tau_delta", fmt_opt(series.burn_in.tau_delta))
        .meta("tau_capped", series.burn_in.capped)
        .meta("A", sites_to_string(&series.a))
        .meta("B", sites_to_string(&series.b));
    t.rows = series
        .samples
        .iter()
        .map(|s| vec![s.step.to_string(), fmt_f64(s.s_a), fmt_f64(s.s_b), fmt_f64(s.s_ab), fmt_f64(s.mutual_information)])
        .collect();
    t
}

pub fn read_entropy(path: &Path) -> SimResult<EntropySeries> {
    let t = CsvTable::read(path)?;
    t.expect_columns(path, &ENTROPY_COLUMNS)?;
    let samples = t
        .rows
        .iter()
        .map(|r| {
            Ok(EntropySample {
                step: field(path, &r[0])?,
                s_a: field(path, &r[1])?,
                s_b: field(path, &r[2])?,
                s_ab: field(path, &r[3])?,
                mutual_information: field(path, &r[4])?,
            })
        })
        .collect::<SimResult<Vec<_>>>()?;
    Ok(EntropySeries {
        eta: meta_field(&t, path, "eta")?,
        num_qubits: meta_field(&t, path, "L")?,
        seed: meta_field(&t, path, "seed")?,
        a: sites_from_string(path, t.get_meta("A").unwrap_or(""))?,
        b: sites_from_string(path, t.get_meta("B").unwrap_or(""))?,
        burn_in: BurnIn {
            steps: meta_field(&t, path, "tau")?,
            tau_delta: opt_field(path, t.get_meta("tau_delta").unwrap_or(""))?,
            capped: meta_field(&t, path, "tau_capped")?,
        },
        samples,
    })
}

pub const PURIFICATION_COLUMNS: [&str; 7] = ["trajectory_id", "t", "lambda_1", "lambda_2", "delta_t", "ln_lambda_1", "ln_lambda_2"];

/// One purification sample of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PurificationRow {
    pub trajectory_id: usize,
    pub t: u64,
    pub lambda_1: f64,
    pub lambda_2: f64,
    pub delta_t: f64,
    pub ln_lambda_1: f64,
    pub ln_lambda_2: f64,
}

pub fn purification_rows(trajectories: &[PurificationTrajectory]) -> Vec<PurificationRow> {
    trajectories
        .iter()
        .enumerate()
        .flat_map(|(id, tr)| {
            tr.samples.iter().map(move |s| PurificationRow {
                trajectory_id: id,
                t: s.t,
                lambda_1: s.lambda1(),
                lambda_2: s.lambda2(),
                delta_t: s.gap,
                ln_lambda_1: s.log_lambda1,
                ln_lambda_2: s.log_lambda2,
            })
        })
        .collect()
}

pub fn purification_table(eta: f64, num_qubits: usize, rows: &[PurificationRow]) -> CsvTable {
    let mut t = CsvTable::new(&PURIFICATION_COLUMNS).meta("eta", fmt_f64(eta)).meta("L", num_qubits);
    t.rows = rows
        .iter()
        .map(|r| {
            vec![
                r.trajectory_id.to_string(),
                r.t.to_string(),
                fmt_f64(r.lambda_1),
                fmt_f64(r.lambda_2),
                fmt_f64(r.delta_t),
                fmt_f64(r.ln_lambda_1),
                fmt_f64(r.ln_lambda_2),
            ]
        })
        .collect();
    t
}

pub fn read_purification(path: &Path) -> SimResult<Vec<PurificationRow>> {
    let t = CsvTable::read(path)?;
    t.expect_columns(path, &PURIFICATION_COLUMNS)?;
    t.rows
        .iter()
        .map(|r| {
            Ok(PurificationRow {
                trajectory_id: field(path, &r[0])?,
                t: field(path, &r[1])?,
                lambda_1: field(path, &r[2])?,
                lambda_2: field(path, &r[3])?,
                delta_t: field(path, &r[4])?,
                ln_lambda_1: field(path, &r[5])?,
                ln_lambda_2: field(path, &r[6])?,
            })
        })
        .collect()
}

pub const GAP_SUMMARY_COLUMNS: [&str; 9] = ["eta", "L", "seed", "gap", "std", "steps", "blocks_used", "block_length", "converged"];

/// One line of the gap summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRow {
    pub eta: f64,
    pub num_qubits: usize,
    pub seed: u64,
    pub gap: f64,
    pub std: f64,
    pub steps: u64,
    pub blocks_used: u64,
    pub block_length: u64,
    pub converged: bool,
}

pub fn gap_summary_table(rows: &[GapRow]) -> CsvTable {
    let mut t = CsvTable::new(&GAP_SUMMARY_COLUMNS);
    t.rows = rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.eta),
                r.num_qubits.to_string(),
                r.seed.to_string(),
                fmt_f64(r.gap),
                fmt_f64(r.std),
                r.steps.to_string(),
                r.blocks_used.to_string(),
                r.block_length.to_string(),
                r.converged.to_string(),
            ]
        })
        .collect();
    t
}

pub fn read_gap_summary(path: &Path) -> SimResult<Vec<GapRow>> {
    let t = CsvTable::read(path)?;
    t.expect_columns(path, &GAP_SUMMARY_COLUMNS)?;
    t.rows
        .iter()
        .map(|r| {
            Ok(GapRow {
                eta: field(path, &r[0])?,
                num_qubits: field(path, &r[1])?,
                seed: field(path, &r[2])?,
                gap: field(path, &r[3])?,
                std: field(path, &r[4])?,
                steps: field(path, &r[5])?,
                blocks_used: field(path, &r[6])?,
                block_length: field(path, &r[7])?,
                converged: field(path, &r[8])?,
            })
        })
        .collect()
}

pub const ENTROPY_SUMMARY_COLUMNS: [&str; 8] = ["eta", "L", "seed", "mean", "stderr", "tau", "tau_delta", "tau_capped"];

/// Time average of S_A (entropy runs) or I (mutual-information runs).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyRow {
    pub eta: f64,
    pub num_qubits: usize,
    pub seed: u64,
    pub mean: f64,
    pub stderr: f64,
    pub tau: u64,
    pub tau_delta: Option<f64>,
    pub tau_capped: bool,
}

pub fn entropy_summary_table(rows: &[EntropyRow]) -> CsvTable {
    let mut t = CsvTable::new(&ENTROPY_SUMMARY_COLUMNS);
    t.rows = rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.eta),
                r.num_qubits.to_string(),
                r.seed.to_string(),
                fmt_f64(r.mean),
                fmt_f64(r.stderr),
                r.tau.to_string(),
                fmt_opt(r.tau_delta),
                r.tau_capped.to_string(),
            ]
        })
        .collect();
    t
}

pub fn read_entropy_summary(path: &Path) -> SimResult<Vec<EntropyRow>> {
    let t = CsvTable::read(path)?;
    t.expect_columns(path, &ENTROPY_SUMMARY_COLUMNS)?;
    t.rows
        .iter()
        .map(|r| {
            Ok(EntropyRow {
                eta: field(path, &r[0])?,
                num_qubits: field(path, &r[1])?,
                seed: field(path, &r[2])?,
                mean: field(path, &r[3])?,
                stderr: field(path, &r[4])?,
                tau: field(path, &r[5])?,
                tau_delta: opt_field(path, &r[6])?,
                tau_capped: field(path, &r[7])?,
            })
        })
        .collect()
}

pub const PAULI_COLUMNS: [&str; 3] = ["i", "r", "weight"];

pub fn pauli_table(p: &PauliWeightProfile) -> CsvTable {
    let mut t = CsvTable::new(&PAULI_COLUMNS)
        .meta("eta", fmt_f64(p.eta))
        .meta("L", p.num_qubits)
        .meta("t", p.t)
        .meta("b", p.block_length)
        .meta("c", p.c);
    for (i, row) in p.weights.iter().enumerate() {
        for (r, &w) in row.iter().enumerate() {
            t.rows.push(vec![(i + 1).to_string(), r.to_string(), fmt_f64(w)]);
        }
    }
    t
}

pub fn read_pauli(path: &Path) -> SimResult<PauliWeightProfile> {
    let t = CsvTable::read(path)?;
    t.expect_columns(path, &PAULI_COLUMNS)?;
    let l: usize = meta_field(&t, path, "L")?;
    let mut weights = [vec![0.0; l], vec![0.0; l], vec![0.0; l]];
    for r in &t.rows {
        let i: usize = field(path, &r[0])?;
        let k: usize = field(path, &r[1])?;
        if !(1..=3).contains(&i) || k >= l {
            return Err(SimError::format(path, format!("Pauli index ({i}, {k}) out of range")));
        }
        weights[i - 1][k] = field(path, &r[2])?;
    }
    Ok(PauliWeightProfile {
        eta: meta_field(&t, path, "eta")?,
        num_qubits: l,
        t: meta_field(&t, path, "t")?,
        block_length: meta_field(&t, path, "b")?,
        c: meta_field(&t, path, "c")?,
        weights,
    })
}

pub const ORACLE_COLUMNS: [&str; 3] = ["eta", "p_eta", "gap"];

/// Closed-form measurement-only gap at one η; +∞ at η = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRow {
    pub eta: f64,
    pub p_eta: f64,
    pub gap: f64,
}

pub fn oracle_table(rows: &[OracleRow]) -> CsvTable {
    let mut t = CsvTable::new(&ORACLE_COLUMNS);
    t.rows = rows.iter().map(|r| vec![fmt_f64(r.eta), fmt_f64(r.p_eta), fmt_f64(r.gap)]).collect();
    t
}

pub fn read_oracle(path: &Path) -> SimResult<Vec<OracleRow>> {
    let t = CsvTable::read(path)?;
    t.expect_columns(path, &ORACLE_COLUMNS)?;
    t.rows
        .iter()
        .map(|r| Ok(OracleRow { eta: field(path, &r[0])?, p_eta: field(path, &r[1])?, gap: field(path, &r[2])? }))
        .collect()
}

/// ⟨X⟩_t for every initial state at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableRow {
    pub t: u64,
    pub values: Vec<f64>,
    pub max_difference: f64,
}

pub fn observable_table(eta: f64, num_qubits: usize, seed: u64, rows: &[ObservableRow]) -> CsvTable {
    let n = rows.first().map_or(0, |r| r.values.len());
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|k| format!("x_{k}")));
    header.push("max_pairwise_difference".to_string());
    let mut t = CsvTable { header, ..CsvTable::default() }.meta("eta", fmt_f64(eta)).meta("L", num_qubits).meta("seed", seed);
    t.rows = rows
        .iter()
        .map(|r| {
            let mut v = vec![r.t.to_string()];
            v.extend(r.values.iter().map(|&x| fmt_f64(x)));
            v.push(fmt_f64(r.max_difference));
            v
        })
        .collect();
    t
}

pub fn read_observables(path: &Path) -> SimResult<Vec<ObservableRow>> {
    let t = CsvTable::read(path)?;
    t.expect_columns(path, &["t"])?;
    if t.header.last().map(String::as_str) != Some("max_pairwise_difference") {
        return Err(SimError::format(path, "expected a max_pairwise_difference column last"));
    }
    t.rows
        .iter()
        .map(|r| {
            let n = r.len();
            Ok(ObservableRow {
                t: field(path, &r[0])?,
                values: r[1..n - 1].iter().map(|x| field(path, x)).collect::<SimResult<_>>()?,
                max_difference: field(path, &r[n - 1])?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RecordHeader {
    format: String,
    seed: u64,
    eta: f64,
    num_qubits: usize,
    unitaries_enabled: bool,
    schedule: String,
    code_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RecordLine {
    t: u64,
    outcomes: String,
    unitary_seeds: Vec<(usize, u64)>,
}

pub const RECORD_FORMAT: &str = "monitored-trajectory-record/1";

/// Header line, then one line per step.
pub fn trajectory_jsonl(record: &TrajectoryRecord) -> SimResult<String> {
    let header = RecordHeader {
        format: RECORD_FORMAT.to_string(),
        seed: record.seed,
        eta: record.eta,
        num_qubits: record.num_qubits,
        unitaries_enabled: record.unitaries_enabled,
        schedule: record.schedule.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let mut out = json_line(&header)?;
    for s in &record.steps {
        out.push_str(&json_line(&RecordLine { t: s.t, outcomes: s.outcome_string(), unitary_seeds: s.unitary_seeds.clone() })?);
    }
    Ok(out)
}

fn json_line<T: Serialize>(value: &T) -> SimResult<String> {
    let mut s = serde_json::to_string(value).map_err(|e| SimError::format("<jsonl>", e))?;
    s.push('\n');
    Ok(s)
}

pub fn parse_trajectory_jsonl(path: &Path, text: &str) -> SimResult<TrajectoryRecord> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let first = lines.next().ok_or_else(|| SimError::format(path, "empty trajectory record"))?;
    let header: RecordHeader = serde_json::from_str(first).map_err(|e| SimError::format(path, e))?;
    if header.format != RECORD_FORMAT {
        return Err(SimError::format(path, format!("unknown record format {:?}", header.format)));
    }
    let mut steps = Vec::new();
    for line in lines {
        let l: RecordLine = serde_json::from_str(line).map_err(|e| SimError::format(path, e))?;
        let outcomes = l
            .outcomes
            .chars()
            .map(|c| Outcome::from_char(c).ok_or_else(|| SimError::format(path, format!("bad outcome {c:?}"))))
            .collect::<SimResult<Vec<_>>>()?;
        if outcomes.len() != header.num_qubits {
            return Err(SimError::format(path, format!("step {} has {} outcomes", l.t, outcomes.len())));
        }
        steps.push(StepRecord { t: l.t, unitary_seeds: l.unitary_seeds, outcomes });
    }
    Ok(TrajectoryRecord {
        seed: header.seed,
        eta: header.eta,
        num_qubits: header.num_qubits,
        unitaries_enabled: header.unitaries_enabled,
        schedule: header.schedule,
        steps,
    })
}

pub fn read_trajectory_jsonl(path: &Path) -> SimResult<TrajectoryRecord> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    parse_trajectory_jsonl(path, &text)
}
