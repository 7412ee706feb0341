use rayon::prelude::*;

use super::{ExperimentConfig, ResultRecord};
use crate::configmodel::sample_regular;
use crate::cp::{ContactEngine, RecordOptions};
use crate::error::Result;
use crate::rng::{derive_seed, replica_rng};
use crate::stats::{censored_median, weighted_linear_fit, wilson, LinearFit};

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScalingCell {
    pub n: usize,
    pub lambda: f64,
    pub seed: u64,
    pub horizon: f64,
    pub replicas: u64,
    pub censored: u64,
    pub censored_fraction: f64,
    pub censored_wilson95: Option<(f64, f64)>,
    /// `None` when at least half the runs were censored.
    pub median_tau: Option<f64>,
    pub median_over_log_n: Option<f64>,
    pub mean_peak_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScalingFit {
    pub lambda: f64,
    /// `median(tau) ~ intercept + slope * ln n` over cells with a median.
    pub fit: Option<LinearFit>,
    /// Largest over smallest `median / ln n` across the n grid.
    pub ratio_spread: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScalingReport {
    pub d: usize,
    pub cells: Vec<ScalingCell>,
    pub fits: Vec<ScalingFit>,
    #[serde(skip)]
    pub records: Vec<ResultRecord>,
}

/// For each `(n, lambda)`: fresh graph per replica, contact process from the
/// configured start, extinction time or censoring at the horizon.
pub fn extinction_scaling(cfg: &ExperimentConfig) -> Result<ScalingReport> {
    cfg.validate(true)?;
    let mut cells = Vec::new();
    let mut records = Vec::new();
    for (i, &n) in cfg.ns.iter().enumerate() {
        let horizon = cfg.horizon.at(n);
        let initial = cfg.initial.resolve(n)?;
        for (j, &lambda) in cfg.lambdas.iter().enumerate() {
            let seed = derive_seed(cfg.seed, &[i as u64, j as u64]);
            let opts = RecordOptions {
                events: false,
                sample_times: cfg.sample_times.clone(),
            };
            let cell: Vec<ResultRecord> = (0..cfg.replicas)
                .into_par_iter()
                .map(|k| {
                    let mut rng = replica_rng(seed, k);
                    let g = sample_regular(n, cfg.d, &mut rng)?;
                    let mut engine = ContactEngine::new(&g, lambda)?;
                    let t = engine.run(&initial, horizon, &opts, &mut rng)?;
                    Ok(ResultRecord {
                        n,
                        lambda,
                        replica: k,
                        seed,
                        tau: t.extinction,
                        censored: t.censored(),
                        peak_fraction: t.peak as f64 / n as f64,
                        fractions: t.samples.iter().map(|&c| c as f64 / n as f64).collect(),
                    })
                })
                .collect::<Result<_>>()?;
            let finite: Vec<f64> = cell.iter().filter_map(|r| r.tau).collect();
            let censored = (cell.len() - finite.len()) as u64;
            let median_tau = censored_median(&finite, censored as usize);
            cells.push(ScalingCell {
                n,
                lambda,
                seed,
                horizon,
                replicas: cfg.replicas,
                censored,
                censored_fraction: censored as f64 / cfg.replicas as f64,
                censored_wilson95: wilson(censored, cfg.replicas, 1.96),
                median_tau,
                median_over_log_n: median_tau.map(|m| m / (n as f64).ln()),
                mean_peak_fraction: cell.iter().map(|r| r.peak_fraction).sum::<f64>() / cell.len() as f64,
            });
            records.extend(cell);
        }
    }
    let fits = cfg
        .lambdas
        .iter()
        .map(|&lambda| {
            let pts: Vec<&ScalingCell> = cells
                .iter()
                .filter(|c| c.lambda == lambda && c.median_tau.is_some())
                .collect();
            let x: Vec<f64> = pts.iter().map(|c| (c.n as f64).ln()).collect();
            let y: Vec<f64> = pts.iter().filter_map(|c| c.median_tau).collect();
            let ratios: Vec<f64> = pts.iter().filter_map(|c| c.median_over_log_n).collect();
            let ratio_spread = (ratios.len() == cfg.ns.len() && !ratios.is_empty()).then(|| {
                let hi = ratios.iter().copied().fold(f64::MIN, f64::max);
                let lo = ratios.iter().copied().fold(f64::MAX, f64::min);
                hi / lo
            });
            ScalingFit {
                lambda,
                fit: weighted_linear_fit(&x, &y, None).ok(),
                ratio_spread,
            }
        })
        .collect();
    Ok(ScalingReport {
        d: cfg.d,
        cells,
        fits,
        records,
    })
}
