//! Binomial large deviations and an empirical growth probe.
//!
//! `psi_p(delta) = (p+delta) log((p+delta)/p) + (1-p-delta) log((1-p-delta)/(1-p))`
//! is the Cramér rate of a Bernoulli(p) variable, and
//! `P[Bin(m, p) >= (p+delta) m] <= exp(-m psi_p(delta))`.

use rayon::prelude::*;

use crate::cp::{ContactEngine, RecordOptions};
use crate::error::{check_rate, check_vertex, Error, Result};
use crate::graph::{build_regular_tree, embeds, MultiGraph, RootedGraph, Vertex};
use crate::rng::replica_rng;
use crate::stats::wilson;

/// Largest trial count accepted by [`exact_binomial_tail`].
pub const EXACT_TAIL_MAX_TRIALS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBoundQuery {
    pub m: u64,
    pub p: f64,
    pub delta: f64,
}

fn check_p_delta(p: f64, delta: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            name: "p",
            value: p,
            domain: "0 < p < 1",
        });
    }
    // tolerate the rounding of grids such as p + (1 - p)
    if !(delta >= 0.0 && delta <= 1.0 - p + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "delta = {delta} outside [0, 1 - p] for p = {p}"
        )));
    }
    Ok(())
}

/// `x log(x / y)` with `0 log 0 = 0`.
fn xlogx_over(x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * (x / y).ln()
    }
}

pub fn psi(p: f64, delta: f64) -> Result<f64> {
    check_p_delta(p, delta)?;
    let q = (p + delta).min(1.0);
    Ok((xlogx_over(q, p) + xlogx_over(1.0 - q, 1.0 - p)).max(0.0))
}

/// `-m psi_p(delta)`, the logarithm of the tail bound.
pub fn log_binomial_tail_bound(q: TailBoundQuery) -> Result<f64> {
    Ok(-(q.m as f64) * psi(q.p, q.delta)?)
}

/// `exp(-m psi_p(delta))`.
pub fn binomial_tail_bound(q: TailBoundQuery) -> Result<f64> {
    Ok(log_binomial_tail_bound(q)?.exp())
}

/// Threshold at which the bound is compared with the exact tail:
/// `ceil((p + delta) m)`, guarded against floating noise just above an
/// integer.
pub fn tail_threshold(q: TailBoundQuery) -> u64 {
    let x = (q.p + q.delta) * q.m as f64;
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as u64
    } else {
        x.ceil() as u64
    }
}

/// `P[Bin(m, p) >= k]` by direct summation in log space.
pub fn exact_binomial_tail(m: u64, p: f64, k: u64) -> Result<f64> {
    if m > EXACT_TAIL_MAX_TRIALS {
        return Err(Error::InvalidInput(format!(
            "exact tail limited to m <= {EXACT_TAIL_MAX_TRIALS}, got {m}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain {
            name: "p",
            value: p,
            domain: "[0, 1]",
        });
    }
    if k == 0 {
        return Ok(1.0);
    }
    if k > m {
        return Ok(0.0);
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    // log C(m, j) built incrementally
    let mut log_choose = 0.0;
    let mut terms = Vec::with_capacity((m - k + 1) as usize);
    for j in 0..=m {
        if j > 0 {
            log_choose += ((m - j + 1) as f64).ln() - (j as f64).ln();
        }
        if j >= k {
            terms.push(log_choose + j as f64 * lp + (m - j) as f64 * lq);
        }
    }
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - top).exp()).sum();
    Ok((top + sum.ln()).exp().min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthParams {
    pub d: usize,
    pub lambda: f64,
    /// The embedded tree must hang off a vertex within this distance of `x`.
    pub reach: usize,
    /// Time per tree level; the probe looks at time `time_scale * ell`.
    pub time_scale: f64,
    pub ell: usize,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GrowthEstimate {
    pub replicas: u64,
    pub hits: u64,
    /// `alpha^ell`.
    pub threshold: f64,
    /// Vertex near `x` that carries the embedded `T_ell`.
    pub anchor: Vertex,
    /// `None` when no replicas were run.
    pub estimate: Option<f64>,
    pub wilson95: Option<(f64, f64)>,
}

/// Monte Carlo estimate of `P[|xi^x_{R ell}| >= alpha^ell]`, provided some
/// vertex within `reach` of `x` roots an embedded `(o, T^d_ell)`.
pub fn growth_check(
    g: &MultiGraph,
    x: Vertex,
    params: GrowthParams,
    replicas: u64,
    seed: u64,
) -> Result<GrowthEstimate> {
    check_vertex(x, g.vertex_count())?;
    check_rate("lambda", params.lambda)?;
    check_rate("time_scale", params.time_scale)?;
    let pattern = build_regular_tree(params.d, params.ell);
    let anchor = g
        .within(x, params.reach)?
        .into_iter()
        .map(|(y, _)| y)
        .find(|&y| {
            g.ball(y, params.ell)
                .ok()
                .and_then(|b| embeds(&RootedGraph { graph: b.graph, root: 0 }, &pattern))
                .is_some()
        })
        .ok_or_else(|| {
            Error::InvalidInput(format!(
                "no vertex within distance {} of {x} roots an embedded T_{}",
                params.reach, params.ell
            ))
        })?;
    let threshold = params.alpha.powi(params.ell as i32);
    let t = params.time_scale * params.ell as f64;
    let hits = if replicas == 0 || threshold > g.vertex_count() as f64 {
        0
    } else {
        ContactEngine::new(g, params.lambda)?;
        let opts = RecordOptions {
            events: false,
            sample_times: vec![t],
        };
        (0..replicas)
            .into_par_iter()
            .map_init(
                || ContactEngine::new(g, params.lambda).expect("rate checked"),
                |engine, i| {
                    let traj = engine.run(&[x], t, &opts, &mut replica_rng(seed, i))?;
                    Ok(u64::from(traj.samples[0] as f64 >= threshold))
                },
            )
            .sum::<Result<u64>>()?
    };
    Ok(GrowthEstimate {
        replicas,
        hits,
        threshold,
        anchor,
        estimate: (replicas > 0).then(|| hits as f64 / replicas as f64),
        wilson95: wilson(hits, replicas, 1.96),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_hat_tree;

    #[test]
    fn psi_basics() {
        assert_eq!(psi(0.3, 0.0).unwrap(), 0.0);
        assert!((psi(0.5, 0.5).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(matches!(psi(0.0, 0.1), Err(Error::Domain { .. })));
        assert!(matches!(psi(1.0, 0.0), Err(Error::Domain { .. })));
        assert!(matches!(psi(0.4, 0.7), Err(Error::InvalidInput(_))));
        assert!(matches!(psi(0.4, -0.1), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn bound_at_zero_deviation_is_one() {
        let q = TailBoundQuery { m: 17, p: 0.2, delta: 0.0 };
        assert_eq!(binomial_tail_bound(q).unwrap(), 1.0);
    }

    #[test]
    fn doubling_m_doubles_log_bound() {
        let q = TailBoundQuery { m: 20, p: 0.3, delta: 0.15 };
        let q2 = TailBoundQuery { m: 40, ..q };
        let a = log_binomial_tail_bound(q).unwrap();
        let b = log_binomial_tail_bound(q2).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12);
    }

    #[test]
    fn exact_tail_small_cases() {
        assert_eq!(exact_binomial_tail(10, 0.3, 0).unwrap(), 1.0);
        assert!((exact_binomial_tail(2, 0.5, 2).unwrap() - 0.25).abs() < 1e-15);
        assert!((exact_binomial_tail(3, 0.5, 2).unwrap() - 0.5).abs() < 1e-15);
        assert!(exact_binomial_tail(1001, 0.5, 2).is_err());
        assert_eq!(exact_binomial_tail(5, 0.5, 6).unwrap(), 0.0);
    }

    #[test]
    fn threshold_rounding() {
        assert_eq!(tail_threshold(TailBoundQuery { m: 30, p: 0.1, delta: 0.2 }), 9);
        assert_eq!(tail_threshold(TailBoundQuery { m: 10, p: 0.25, delta: 0.0 }), 3);
    }

    #[test]
    fn growth_probe_high_rate() {
        let g = build_hat_tree(3, 4).graph;
        let params = GrowthParams {
            d: 3,
            lambda: 100.0,
            reach: 0,
            time_scale: 1.0,
            ell: 2,
            alpha: 1.5,
        };
        let est = growth_check(&g, 0, params, 400, 1).unwrap();
        assert!(est.estimate.unwrap() > 0.95, "{est:?}");
        let none = growth_check(&g, 0, params, 0, 1).unwrap();
        assert_eq!(none.estimate, None);
        let huge = GrowthParams { alpha: 100.0, ..params };
        assert_eq!(growth_check(&g, 0, huge, 50, 1).unwrap().estimate, Some(0.0));
    }

    #[test]
    fn growth_probe_checks_embedding() {
        let path = MultiGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let params = GrowthParams {
            d: 3,
            lambda: 1.0,
            reach: 2,
            time_scale: 1.0,
            ell: 1,
            alpha: 1.0,
        };
        assert!(growth_check(&path, 0, params, 10, 1).is_err());
    }
}
