use rayon::prelude::*;

use super::{ExperimentConfig, ResultRecord};
use crate::configmodel::sample_regular;
use crate::cp::{harris_summary, sample_harris};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, replica_rng};
use crate::stats::{censored_median, wilson};

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScanCell {
    pub n: usize,
    pub lambda: f64,
    pub censored_fraction: f64,
    pub censored_wilson95: Option<(f64, f64)>,
    pub median_tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScanReport {
    pub d: usize,
    pub cells: Vec<ScanCell>,
    /// Per n: the smallest lambda with at least half the runs censored.
    pub knees: Vec<(usize, Option<f64>)>,
    #[serde(skip)]
    pub records: Vec<ResultRecord>,
}

/// Sweeps lambda at each n. Each replica samples one graph and one mark
/// system at the largest lambda and thins it for the others, so survival
/// past the horizon is monotone in lambda replica by replica.
pub fn lambda_scan(cfg: &ExperimentConfig) -> Result<ScanReport> {
    cfg.validate(true)?;
    let mut lambdas = cfg.lambdas.clone();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    let top = *lambdas.last().expect("validated non-empty");
    let mut cells = Vec::new();
    let mut knees = Vec::new();
    let mut records = Vec::new();
    for (i, &n) in cfg.ns.iter().enumerate() {
        let horizon = cfg.horizon.at(n);
        let initial = cfg.initial.resolve(n)?;
        let seed = derive_seed(cfg.seed, &[i as u64]);
        let per_replica: Vec<Vec<ResultRecord>> = (0..cfg.replicas)
            .into_par_iter()
            .map(|k| {
                let mut rng = replica_rng(seed, k);
                let g = sample_regular(n, cfg.d, &mut rng)?;
                let full = sample_harris(&g, top, horizon, &mut rng)?;
                let mut out = Vec::with_capacity(lambdas.len());
                for &lambda in &lambdas {
                    let h = full.thinned(lambda)?;
                    let s = harris_summary(&g, &h, &initial, &cfg.sample_times)?;
                    out.push(ResultRecord {
                        n,
                        lambda,
                        replica: k,
                        seed,
                        tau: s.extinction,
                        censored: s.extinction.is_none(),
                        peak_fraction: s.peak as f64 / n as f64,
                        fractions: s.samples.iter().map(|&c| c as f64 / n as f64).collect(),
                    });
                }
                if out.windows(2).any(|w| w[0].censored && !w[1].censored) {
                    return Err(Error::Invariant(format!(
                        "replica {k} at n = {n} survives a smaller rate but not a larger one"
                    )));
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let mut knee = None;
        for (j, &lambda) in lambdas.iter().enumerate() {
            let finite: Vec<f64> = per_replica.iter().filter_map(|r| r[j].tau).collect();
            let censored = cfg.replicas - finite.len() as u64;
            let frac = censored as f64 / cfg.replicas as f64;
            if knee.is_none() && frac >= 0.5 {
                knee = Some(lambda);
            }
            cells.push(ScanCell {
                n,
                lambda,
                censored_fraction: frac,
                censored_wilson95: wilson(censored, cfg.replicas, 1.96),
                median_tau: censored_median(&finite, censored as usize),
            });
        }
        knees.push((n, knee));
        for j in 0..lambdas.len() {
            records.extend(per_replica.iter().map(|r| r[j].clone()));
        }
    }
    Ok(ScanReport {
        d: cfg.d,
        cells,
        knees,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cp::InitialCondition;
    use crate::experiments::Horizon;

    #[test]
    fn scan_is_monotone_and_zero_rate_dies() {
        let cfg = ExperimentConfig {
            d: 3,
            lambdas: vec![0.0, 0.3, 0.6, 1.0],
            ns: vec![60],
            replicas: 30,
            horizon: Horizon::Fixed(40.0),
            initial: InitialCondition::All,
            seed: 1,
            sample_times: vec![],
            out_dir: None,
            iteration: None,
            decay: None,
        };
        let rep = lambda_scan(&cfg).unwrap();
        assert_eq!(rep.cells[0].censored_fraction, 0.0);
        assert!(rep.cells.windows(2).all(|w| w[0].censored_fraction <= w[1].censored_fraction));
        assert_eq!(rep.cells[3].censored_fraction, 1.0);
        assert_eq!(rep.knees[0].0, 60);
        assert_eq!(rep.records.len(), 120);
    }
}
