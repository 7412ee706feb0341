use rayon::prelude::*;

use super::{ExperimentConfig, IterationConfig};
use crate::configmodel::sample_regular;
use crate::cp::{evolve_harris, evolve_restricted, sample_harris};
use crate::error::{Error, Result};
use crate::explore::{posthoc_regenerative, verify_regenerative};
use crate::rng::{derive_seed, replica_rng};
use crate::stats::wilson;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct IterationCell {
    pub n: usize,
    pub lambda: f64,
    pub seed: u64,
    /// `|W| = floor(k eps n)`, also the infection target.
    pub start_size: usize,
    /// `floor(eps n)` regenerative seeds are sought.
    pub regenerative_target: usize,
    pub time: f64,
    /// Target above `n`, or nothing to extract: no replica is run.
    pub vacuous: bool,
    pub replicas: u64,
    /// Replicas with `|xi^W_t| >= start_size`.
    pub hits: u64,
    pub frequency: f64,
    pub wilson95: Option<(f64, f64)>,
    /// Same event for the union of the processes confined to the witnesses,
    /// which is a lower bound for `xi^W_t`.
    pub restricted_hits: u64,
    pub restricted_frequency: f64,
    /// Replicas where fewer than `regenerative_target` seeds were found.
    pub extraction_failures: u64,
    pub mean_extracted: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct IterationReport {
    pub d: usize,
    pub params: IterationConfig,
    pub cells: Vec<IterationCell>,
}

impl IterationReport {
    pub fn any_vacuous(&self) -> bool {
        self.cells.iter().any(|c| c.vacuous)
    }
}

struct Replica {
    hit: bool,
    restricted_hit: bool,
    extracted: usize,
}

/// One step of the supercritical iteration: from `W` = the first
/// `floor(k eps n)` vertices, extract regenerative seeds (post-hoc), run the
/// process for `time_scale * ell` on shared marks, and count how often the
/// infection still covers `|W|` vertices.
pub fn supercritical_iteration(cfg: &ExperimentConfig) -> Result<IterationReport> {
    cfg.validate(true)?;
    let p = cfg
        .iteration
        .clone()
        .ok_or_else(|| Error::InvalidInput("config has no [iteration] section".into()))?;
    if !(p.epsilon > 0.0 && p.k > 0.0 && p.time_scale >= 0.0 && p.time_scale.is_finite()) {
        return Err(Error::InvalidInput("iteration needs epsilon > 0, k > 0, time_scale >= 0".into()));
    }
    let time = p.time_scale * p.ell as f64;
    let mut cells = Vec::new();
    for (i, &n) in cfg.ns.iter().enumerate() {
        let raw = p.k * p.epsilon * n as f64;
        let start_size = raw.floor() as usize;
        let regenerative_target = (p.epsilon * n as f64).floor() as usize;
        let vacuous = raw > n as f64 || regenerative_target == 0;
        for (j, &lambda) in cfg.lambdas.iter().enumerate() {
            let seed = derive_seed(cfg.seed, &[i as u64, j as u64]);
            let runs: Vec<Replica> = if vacuous {
                Vec::new()
            } else {
                (0..cfg.replicas)
                    .into_par_iter()
                    .map(|k| {
                        let mut rng = replica_rng(seed, k);
                        let g = sample_regular(n, cfg.d, &mut rng)?;
                        let w: Vec<usize> = (0..start_size).collect();
                        let (seeds, wits) = posthoc_regenerative(&g, &w, cfg.d, p.ell, p.r, regenerative_target)?;
                        let check = verify_regenerative(&g, &seeds, &wits, cfg.d, p.ell, p.r);
                        if !check.ok {
                            return Err(Error::Invariant(format!(
                                "extracted witnesses fail verification: {:?}",
                                check.fault
                            )));
                        }
                        let mut mask = vec![false; g.edge_count()];
                        for wit in &wits {
                            for &e in &wit.edges {
                                mask[e] = true;
                            }
                        }
                        let h = sample_harris(&g, lambda, time, &mut rng)?;
                        let full = evolve_harris(&g, &h, &w, time)?;
                        let inner = evolve_restricted(&g, &h, &seeds, time, &mask)?;
                        if inner.iter().any(|v| full.binary_search(v).is_err()) {
                            return Err(Error::Invariant(
                                "confined processes escape the full process".into(),
                            ));
                        }
                        Ok(Replica {
                            hit: full.len() >= start_size,
                            restricted_hit: inner.len() >= start_size,
                            extracted: seeds.len(),
                        })
                    })
                    .collect::<Result<_>>()?
            };
            let hits = runs.iter().filter(|r| r.hit).count() as u64;
            let restricted_hits = runs.iter().filter(|r| r.restricted_hit).count() as u64;
            let ran = runs.len() as u64;
            cells.push(IterationCell {
                n,
                lambda,
                seed,
                start_size,
                regenerative_target,
                time,
                vacuous,
                replicas: ran,
                hits,
                frequency: if ran > 0 { hits as f64 / ran as f64 } else { 0.0 },
                wilson95: wilson(hits, ran, 1.96),
                restricted_hits,
                restricted_frequency: if ran > 0 { restricted_hits as f64 / ran as f64 } else { 0.0 },
                extraction_failures: runs.iter().filter(|r| r.extracted < regenerative_target).count() as u64,
                mean_extracted: if ran > 0 {
                    runs.iter().map(|r| r.extracted as f64).sum::<f64>() / ran as f64
                } else {
                    0.0
                },
            });
        }
    }
    Ok(IterationReport {
        d: cfg.d,
        params: p,
        cells,
    })
}
