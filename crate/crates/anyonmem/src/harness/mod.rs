//! Experiment orchestration: memory-time estimation, parameter sweeps,
//! seeding, persistence and scaling fits.
//!
//! An [`ExperimentSpec`] describes a grid of (L, β) cells; every cell runs
//! a fixed number of independent trials with seeds derived from a stable
//! hash of (master seed, cell index, trial index). Results are persisted
//! as one per-trial CSV plus per-cell JSON summaries and a manifest that
//! reproduces the run byte-for-byte.

pub mod fit;
pub mod stats;

use crate::decoder::{decode_outcome, DecodeError, MatchingDecoder};
use crate::dynamics::{
    kmc_run_observed, AcceptanceRule, DynamicsError, EnergyState, KmcObserver, ThermalParams,
};
use crate::kernels::{InteractionKernel, KernelError, KernelSpec};
use crate::lattice::{AnyonConfig, LatticeError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stats::Passage;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment spec: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("io failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed json in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// Stable seed derivation: splitmix64 finalizers chained over
/// (master, cell, trial).
pub fn stable_seed(master: u64, cell: u64, trial: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(mix(mix(master) ^ cell) ^ trial)
}

/// Geometric checkpoint schedule `t_k = t0·ratio^k`, capped at `t_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSchedule {
    pub t0: f64,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
}

fn default_ratio() -> f64 {
    2.0
}

impl CheckpointSchedule {
    pub fn times(&self, t_max: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut t = self.t0;
        while t <= t_max {
            out.push(t);
            t *= self.ratio;
        }
        out
    }
}

fn default_gamma() -> f64 {
    1.0
}

/// Declarative description of a memory-time experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kernel: KernelSpec,
    /// Lattice sides, one cell row per entry.
    pub sizes: Vec<usize>,
    pub betas: Vec<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub rule: AcceptanceRule,
    pub checkpoints: CheckpointSchedule,
    pub t_max: f64,
    pub trials: usize,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: &str| Err(HarnessError::BadSpec(msg.to_string()));
        if self.sizes.is_empty() {
            return bad("sizes list is empty");
        }
        if self.betas.is_empty() {
            return bad("betas list is empty");
        }
        if self.trials < 8 {
            return bad("trials must be at least 8");
        }
        if self.sizes.iter().any(|&l| l < 2 || l % 2 != 0) {
            return bad("lattice sides must be even and at least 2");
        }
        if self.betas.iter().any(|&b| b < 0.0) {
            return bad("betas must be nonnegative");
        }
        if self.gamma <= 0.0 {
            return bad("gamma must be positive");
        }
        if self.checkpoints.t0 <= 0.0 || self.checkpoints.ratio <= 1.0 {
            return bad("checkpoint schedule needs t0 > 0 and ratio > 1");
        }
        if self.t_max < self.checkpoints.t0 {
            return bad("t_max must reach the first checkpoint");
        }
        Ok(())
    }

    /// Cells in row-major order: sizes outer, betas inner.
    pub fn cells(&self) -> Vec<(usize, f64)> {
        self.sizes.iter().flat_map(|&l| self.betas.iter().map(move |&b| (l, b))).collect()
    }

    pub fn thermal_params(&self, beta: f64) -> ThermalParams {
        ThermalParams {
            beta,
            gamma: self.gamma,
            rule: self.rule,
            t_max: self.t_max,
            checkpoints: self.checkpoints.times(self.t_max),
        }
    }
}

/// Decode verdict at one checkpoint.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub t: f64,
    pub verdict: [u8; 2],
    pub anyons: usize,
}

/// One memory-time observation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    /// First checkpoint time with a nontrivial verdict; `None` if censored.
    pub tau: Option<f64>,
    pub verdicts: Vec<VerdictRecord>,
}

struct CheckpointDecoder {
    decoder: MatchingDecoder,
    verdicts: Vec<VerdictRecord>,
    failure: Option<f64>,
    error: Option<DecodeError>,
}

impl KmcObserver for CheckpointDecoder {
    fn on_checkpoint(&mut self, t: f64, config: &AnyonConfig, _state: &EnergyState) -> bool {
        match decode_outcome(config, &self.decoder) {
            Ok(out) => {
                self.verdicts.push(VerdictRecord {
                    t,
                    verdict: [out.verdict.0, out.verdict.1],
                    anyons: config.anyon_count(),
                });
                if out.verdict.is_trivial() {
                    true
                } else {
                    self.failure = Some(t);
                    false
                }
            }
            Err(e) => {
                self.error = Some(e);
                false
            }
        }
    }
}

/// Evolves the vacuum under the kernel and decodes at every checkpoint;
/// τ is the first checkpoint whose verdict is nontrivial.
pub fn memory_time_trial(
    kernel: &InteractionKernel,
    params: &ThermalParams,
    trial: usize,
    seed: u64,
) -> Result<TrialRecord, HarnessError> {
    let initial = AnyonConfig::vacuum(kernel.geometry());
    let mut observer = CheckpointDecoder {
        decoder: MatchingDecoder::default(),
        verdicts: Vec::new(),
        failure: None,
        error: None,
    };
    kmc_run_observed(&initial, kernel, params, seed, &mut observer, false)?;
    if let Some(e) = observer.error {
        return Err(e.into());
    }
    Ok(TrialRecord { trial, seed, tau: observer.failure, verdicts: observer.verdicts })
}

/// Per-cell statistics over trials.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellSummary {
    pub index: usize,
    pub l: usize,
    pub beta: f64,
    pub trials: usize,
    pub censored: usize,
    pub median_tau: Option<f64>,
    pub mean_tau: Option<f64>,
    pub ci95: Option<(f64, f64)>,
}

impl CellSummary {
    fn from_records(index: usize, l: usize, beta: f64, records: &[TrialRecord]) -> Self {
        let samples: Vec<Passage> =
            records.iter().map(|r| r.tau.map_or(Passage::Censored, Passage::Observed)).collect();
        let censored = records.iter().filter(|r| r.tau.is_none()).count();
        let observed: Vec<f64> = records.iter().filter_map(|r| r.tau).collect();
        CellSummary {
            index,
            l,
            beta,
            trials: records.len(),
            censored,
            median_tau: stats::censored_median(&samples),
            mean_tau: if censored == 0 && !observed.is_empty() {
                Some(stats::mean(&observed))
            } else {
                None
            },
            ci95: stats::bootstrap_median_ci(&samples, 1000, stable_seed(0xb00, index as u64, 0)),
        }
    }
}

/// Everything `run_experiment` produced, in memory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub cells: Vec<CellSummary>,
    pub records: Vec<Vec<TrialRecord>>,
}

/// Persisted run description; embeds the spec so a manifest can be re-run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: ExperimentSpec,
    /// Times are in units of 1/γ per bond.
    pub time_units: String,
    pub seed_derivation: String,
    pub cells: Vec<CellSummary>,
    pub files: Vec<String>,
    pub partial: bool,
}

/// Runs all cells × trials (trials in parallel), writes `trials.csv`,
/// `cell_<index>.json` summaries and `manifest.json` into `out_dir`.
/// Re-running the manifest reproduces identical per-trial results.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path) -> Result<RunSummary, HarnessError> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir)
        .map_err(|source| HarnessError::Io { path: out_dir.to_path_buf(), source })?;

    let cells = spec.cells();
    let mut kernels: Vec<InteractionKernel> = Vec::new();
    for &l in &spec.sizes {
        let geometry = crate::lattice::TorusGeometry::new(l)?;
        kernels.push(spec.kernel.build(geometry)?);
    }

    let mut all_records: Vec<Vec<TrialRecord>> = Vec::with_capacity(cells.len());
    let mut summaries: Vec<CellSummary> = Vec::with_capacity(cells.len());
    for (index, &(l, beta)) in cells.iter().enumerate() {
        let kernel = &kernels[spec.sizes.iter().position(|&s| s == l).unwrap()];
        let params = spec.thermal_params(beta);
        let seeds: Vec<u64> =
            (0..spec.trials).map(|t| stable_seed(spec.seed, index as u64, t as u64)).collect();
        let mut records: Vec<TrialRecord> = seeds
            .par_iter()
            .enumerate()
            .map(|(t, &s)| memory_time_trial(kernel, &params, t, s))
            .collect::<Result<_, _>>()?;
        records.sort_by_key(|r| r.trial);
        summaries.push(CellSummary::from_records(index, l, beta, &records));
        all_records.push(records);
    }

    // per-trial CSV, sorted by cell then trial
    let csv_path = out_dir.join("trials.csv");
    let mut csv_bytes = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut csv_bytes);
        w.write_record(["cell", "L", "beta", "trial", "seed", "tau", "censored"])
            .and_then(|_| {
                for (index, records) in all_records.iter().enumerate() {
                    let (l, beta) = cells[index];
                    for r in records {
                        w.write_record([
                            index.to_string(),
                            l.to_string(),
                            format!("{beta:.17e}"),
                            r.trial.to_string(),
                            r.seed.to_string(),
                            r.tau.map_or(String::new(), |t| format!("{t:.17e}")),
                            (r.tau.is_none() as u8).to_string(),
                        ])?;
                    }
                }
                w.flush().map_err(csv::Error::from)
            })
            .map_err(|e| HarnessError::Io {
                path: csv_path.clone(),
                source: std::io::Error::other(e),
            })?;
    }
    let mut files = Vec::new();
    let mut first_failure: Option<HarnessError> = None;
    match write_bytes(&csv_path, &csv_bytes) {
        Ok(()) => files.push("trials.csv".to_string()),
        Err(e) => first_failure = Some(e),
    }
    for (index, records) in all_records.iter().enumerate() {
        let name = format!("cell_{index:03}.json");
        let payload = serde_json::json!({
            "summary": summaries[index],
            "trials": records,
        });
        match write_json(&out_dir.join(&name), &payload) {
            Ok(()) => files.push(name),
            Err(e) => first_failure = first_failure.or(Some(e)),
        }
    }

    let manifest = Manifest {
        spec: spec.clone(),
        time_units: "1/gamma per bond".to_string(),
        seed_derivation: "splitmix64 chain over (master seed, cell index, trial index)".to_string(),
        cells: summaries.clone(),
        files,
        partial: first_failure.is_some(),
    };
    // on per-file failures, still try to leave a manifest flagging the run
    // as partial, then report the first failure
    let manifest_written = write_json(&out_dir.join("manifest.json"), &manifest);
    if let Some(e) = first_failure {
        return Err(e);
    }
    manifest_written?;

    Ok(RunSummary { cells: summaries, records: all_records })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let mut f = std::fs::File::create(path)
        .map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
    f.write_all(bytes).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|source| HarnessError::Json { path: path.to_path_buf(), source })?;
    write_bytes(path, text.as_bytes())
}

/// Loads either a bare [`ExperimentSpec`] or a [`Manifest`] (whose embedded
/// spec is returned), so persisted manifests can be re-run directly.
pub fn load_spec(path: &Path) -> Result<ExperimentSpec, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
    if let Ok(spec) = serde_json::from_str::<ExperimentSpec>(&text) {
        return Ok(spec);
    }
    serde_json::from_str::<Manifest>(&text)
        .map(|m| m.spec)
        .map_err(|source| HarnessError::Json { path: path.to_path_buf(), source })
}

/// Collects `(x = L, median τ)` support points from uncensored cells at a
/// fixed β; cells with any censoring are excluded, never silently included.
pub fn size_scaling_points(cells: &[CellSummary], beta: f64) -> Vec<(f64, f64)> {
    cells
        .iter()
        .filter(|c| c.beta == beta && c.censored == 0)
        .filter_map(|c| c.median_tau.map(|m| (c.l as f64, m)))
        .collect()
}

/// Collects `(x = β, median τ)` support points from uncensored cells at a
/// fixed L.
pub fn beta_scaling_points(cells: &[CellSummary], l: usize) -> Vec<(f64, f64)> {
    cells
        .iter()
        .filter(|c| c.l == l && c.censored == 0)
        .filter_map(|c| c.median_tau.map(|m| (c.beta, m)))
        .collect()
}
