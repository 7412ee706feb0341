use rayon::prelude::*;

use crate::cp::{ContactEngine, RecordOptions};
use crate::error::{check_rate, Error, Result};
use crate::graph::{build_hat_tree, depths_from};
use crate::rng::replica_rng;
use crate::stats::{mean_se, weighted_linear_fit, LinearFit};

/// Contamination above this fraction makes a decay report unreliable.
pub const CONTAMINATION_LIMIT: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DecayPoint {
    pub t: f64,
    pub mean: f64,
    pub se: f64,
    /// Branching upper bound `exp(((d+1) lambda - 1) t)`.
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DecayReport {
    pub d: usize,
    pub lambda: f64,
    pub truncation_depth: usize,
    pub replicas: u64,
    pub seed: u64,
    pub points: Vec<DecayPoint>,
    /// Fit of `ln mean` against `t` over points with a positive mean.
    pub fit: Option<LinearFit>,
    /// `-slope`, the estimated `c_0`.
    pub decay_rate: Option<f64>,
    /// Fraction of runs that infected a vertex at the truncation depth.
    pub contamination: f64,
    pub unreliable: bool,
}

/// `E |xi^o_t|` on the ball of radius `truncation_depth` of the
/// `(d+1)`-regular tree, from the root, for `lambda < 1 / (d + 1)`.
pub fn subcritical_decay(
    d: usize,
    lambda: f64,
    truncation_depth: usize,
    t_grid: &[f64],
    replicas: u64,
    seed: u64,
) -> Result<DecayReport> {
    check_rate("lambda", lambda)?;
    if lambda * (d + 1) as f64 >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "lambda = {lambda} is not below 1 / (d + 1) = {}",
            1.0 / (d + 1) as f64
        )));
    }
    if replicas == 0 {
        return Err(Error::InvalidInput("replicas must be at least 1".into()));
    }
    let mut grid = t_grid.to_vec();
    if grid.is_empty() || grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidInput("t grid must be non-empty, finite and >= 0".into()));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let tree = build_hat_tree(d, truncation_depth);
    let depths = depths_from(&tree);
    let horizon = *grid.last().expect("non-empty");
    let opts = RecordOptions {
        events: false,
        sample_times: grid.clone(),
    };
    let runs: Vec<(Vec<usize>, bool)> = (0..replicas)
        .into_par_iter()
        .map_init(
            || {
                ContactEngine::new(&tree.graph, lambda)
                    .and_then(|e| e.with_labels(&depths, Some(truncation_depth)))
                    .expect("tree and labels agree")
            },
            |engine, k| {
                let t = engine.run(&[tree.root], horizon, &opts, &mut replica_rng(seed, k))?;
                Ok((t.samples, t.touched_boundary))
            },
        )
        .collect::<Result<_>>()?;
    let points: Vec<DecayPoint> = grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let xs: Vec<f64> = runs.iter().map(|r| r.0[i] as f64).collect();
            let (mean, se) = mean_se(&xs).expect("replicas >= 1");
            DecayPoint {
                t,
                mean,
                se,
                envelope: (((d + 1) as f64 * lambda - 1.0) * t).exp(),
            }
        })
        .collect();
    let usable: Vec<&DecayPoint> = points.iter().filter(|p| p.mean > 0.0).collect();
    let x: Vec<f64> = usable.iter().map(|p| p.t).collect();
    let y: Vec<f64> = usable.iter().map(|p| p.mean.ln()).collect();
    let fit = weighted_linear_fit(&x, &y, None).ok();
    let contamination = runs.iter().filter(|r| r.1).count() as f64 / replicas as f64;
    Ok(DecayReport {
        d,
        lambda,
        truncation_depth,
        replicas,
        seed,
        points,
        decay_rate: fit.map(|f| -f.slope),
        fit,
        contamination,
        unreliable: contamination > CONTAMINATION_LIMIT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_death_decays_at_rate_one() {
        let grid: Vec<f64> = (0..=6).map(|i| i as f64 * 0.5).collect();
        let rep = subcritical_decay(3, 0.0, 3, &grid, 100_000, 1).unwrap();
        assert_eq!(rep.points[0].mean, 1.0);
        assert!((rep.decay_rate.unwrap() - 1.0).abs() < 0.02, "{rep:?}");
        assert_eq!(rep.contamination, 0.0);
        assert!(!rep.unreliable);
    }

    #[test]
    fn rate_must_be_provably_subcritical() {
        assert!(subcritical_decay(3, 0.25, 3, &[1.0], 10, 1).is_err());
        assert!(subcritical_decay(3, 0.1, 3, &[], 10, 1).is_err());
    }

    #[test]
    fn shallow_truncation_is_flagged() {
        let rep = subcritical_decay(3, 0.2, 1, &[0.0, 1.0, 2.0], 2000, 4).unwrap();
        assert!(rep.contamination > 0.01);
        assert!(rep.unreliable);
    }
}
