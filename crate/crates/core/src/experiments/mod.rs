//! Desk-scale experiments around the phase transition on random regular
//! graphs.
//!
//! All four experiments read an [`ExperimentConfig`] (TOML) and are
//! deterministic given its master seed: grid cell `(i, j)` gets the seed
//! `derive_seed(seed, &[i, j])` and replica `k` of that cell draws
//! everything (graph included) from `replica_rng(cell_seed, k)`. Each
//! record carries its cell seed and replica index.
//!
//! CSV tables are written with a header row and one record per line, so
//! gnuplot can address columns by name.

mod decay;
mod scaling;
mod scan;
mod supercritical;

use std::io::Write;
use std::path::{Path, PathBuf};

pub use decay::{subcritical_decay, DecayPoint, DecayReport};
pub use scaling::{extinction_scaling, ScalingCell, ScalingFit, ScalingReport};
pub use scan::{lambda_scan, ScanCell, ScanReport};
pub use supercritical::{supercritical_iteration, IterationCell, IterationReport};

use crate::cp::InitialCondition;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Fixed(f64),
    /// `factor * ln n`.
    LogFactor(f64),
}

impl Horizon {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            Horizon::Fixed(t) => t,
            Horizon::LogFactor(f) => f * (n as f64).ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterationConfig {
    pub epsilon: f64,
    pub k: f64,
    pub ell: usize,
    pub r: usize,
    /// Time per tree level; the process runs for `time_scale * ell`.
    pub time_scale: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub truncation_depth: usize,
    pub t_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Graphs are `(d + 1)`-regular.
    pub d: usize,
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub ns: Vec<usize>,
    pub replicas: u64,
    pub horizon: Horizon,
    #[serde(default = "all_infected")]
    pub initial: InitialCondition,
    #[serde(default)]
    pub seed: u64,
    /// Infected fractions are recorded at these times.
    #[serde(default)]
    pub sample_times: Vec<f64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub iteration: Option<IterationConfig>,
    #[serde(default)]
    pub decay: Option<DecayConfig>,
}

fn all_infected() -> InitialCondition {
    InitialCondition::All
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidInput(format!("config: {e}")))
    }

    /// Checks the grids and the per-cell horizons. Experiments that run on
    /// graphs need a non-empty `ns`.
    pub fn validate(&self, needs_graphs: bool) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.into()));
        if self.lambdas.is_empty() {
            return bad("lambdas must be non-empty");
        }
        if self.lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return bad("every lambda must be finite and >= 0");
        }
        if self.replicas == 0 {
            return bad("replicas must be at least 1");
        }
        if self.d < 1 {
            return bad("d must be at least 1");
        }
        if needs_graphs {
            if self.ns.is_empty() {
                return bad("ns must be non-empty");
            }
            for &n in &self.ns {
                if n < 2 || n * (self.d + 1) % 2 == 1 {
                    return Err(Error::InvalidInput(format!(
                        "n = {n} gives no {}-regular configuration",
                        self.d + 1
                    )));
                }
                let h = self.horizon.at(n);
                if !(h.is_finite() && h > 0.0) {
                    return Err(Error::InvalidInput(format!("horizon {h} at n = {n} must be > 0")));
                }
                if self.sample_times.iter().any(|&t| t < 0.0 || t > h) {
                    return Err(Error::InvalidInput(format!("sample times must lie in [0, {h}] at n = {n}")));
                }
            }
        }
        if self.sample_times.windows(2).any(|w| w[0] >= w[1]) {
            return bad("sample times must be strictly increasing");
        }
        Ok(())
    }
}

/// One replica of one grid cell.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ResultRecord {
    pub n: usize,
    pub lambda: f64,
    pub replica: u64,
    /// Cell seed; the replica replays from `replica_rng(seed, replica)`.
    pub seed: u64,
    /// `None` when the run was censored at the horizon.
    pub tau: Option<f64>,
    pub censored: bool,
    pub peak_fraction: f64,
    /// Infected fraction at each configured sample time.
    pub fractions: Vec<f64>,
}

/// Writes records as CSV: `n,lambda,replica,seed,tau,censored,peak_fraction`
/// then one `frac_t<time>` column per sample time. Censored runs have an
/// empty `tau`.
pub fn write_records<W: Write>(out: W, sample_times: &[f64], records: &[ResultRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["n", "lambda", "replica", "seed", "tau", "censored", "peak_fraction"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(sample_times.iter().map(|t| format!("frac_t{t}")));
    w.write_record(&header).map_err(csv_error)?;
    for r in records {
        let mut row = vec![
            r.n.to_string(),
            r.lambda.to_string(),
            r.replica.to_string(),
            r.seed.to_string(),
            r.tau.map(|t| t.to_string()).unwrap_or_default(),
            r.censored.to_string(),
            r.peak_fraction.to_string(),
        ];
        row.extend(r.fractions.iter().map(|f| f.to_string()));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Creates `dir` if needed and writes `contents` to `dir/name`.
pub fn write_output(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

pub fn to_json<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    serde_json::to_vec_pretty(value).map_err(|e| Error::Io(e.to_string()))
}
