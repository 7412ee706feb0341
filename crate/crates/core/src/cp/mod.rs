//! The contact process: recovery at rate 1, transmission at rate `lambda`
//! along every oriented edge.
//!
//! Two realizations are provided. [`ContactEngine`] (wrapped by
//! [`gillespie`]) is an exact event-driven simulation that never stores
//! marks. [`HarrisSystem`] holds explicit Poisson marks and replays them, so
//! that runs from different initial sets (or at thinned rates) share one
//! source of randomness and the coupling identities hold exactly.

mod engine;
mod harris;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

pub use engine::{ContactEngine, Event, EventKind, RecordOptions, Trajectory};
pub use harris::{
    evolve_between, evolve_harris, evolve_restricted, harris_extinction, harris_summary, sample_harris,
    HarrisSummary, HarrisSystem, Mark, MarkKind,
};

use crate::error::{check_vertex, Error, Result};
use crate::graph::{MultiGraph, Vertex};
use crate::rng::replica_rng;

/// Which vertices start infected.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum InitialCondition {
    All,
    Vertex(Vertex),
    Set(Vec<Vertex>),
}

impl InitialCondition {
    pub fn resolve(&self, n: usize) -> Result<Vec<Vertex>> {
        match self {
            InitialCondition::All => Ok((0..n).collect()),
            InitialCondition::Vertex(v) => {
                check_vertex(*v, n)?;
                Ok(vec![*v])
            }
            InitialCondition::Set(vs) => {
                for &v in vs {
                    check_vertex(v, n)?;
                }
                let mut vs = vs.clone();
                vs.sort_unstable();
                vs.dedup();
                Ok(vs)
            }
        }
    }
}

impl FromStr for InitialCondition {
    type Err = Error;

    /// `all`, `vertex:<k>` or `set:<a>,<b>,...`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "all" {
            return Ok(InitialCondition::All);
        }
        let bad = || Error::InvalidInput(format!("unrecognized initial condition {s:?}"));
        if let Some(k) = s.strip_prefix("vertex:") {
            return k.trim().parse().map(InitialCondition::Vertex).map_err(|_| bad());
        }
        if let Some(list) = s.strip_prefix("set:") {
            let vs = list
                .split(',')
                .filter(|p| !p.trim().is_empty())
                .map(|p| p.trim().parse().map_err(|_| bad()))
                .collect::<Result<Vec<Vertex>>>()?;
            return Ok(InitialCondition::Set(vs));
        }
        Err(bad())
    }
}

impl fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialCondition::All => write!(f, "all"),
            InitialCondition::Vertex(v) => write!(f, "vertex:{v}"),
            InitialCondition::Set(vs) => {
                let parts: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
                write!(f, "set:{}", parts.join(","))
            }
        }
    }
}

impl TryFrom<String> for InitialCondition {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<InitialCondition> for String {
    fn from(c: InitialCondition) -> String {
        c.to_string()
    }
}

/// Graph distances from `x` as labels; unreachable vertices get `usize::MAX`.
pub fn distance_labels(g: &MultiGraph, x: Vertex) -> Result<Vec<usize>> {
    Ok(g
        .distances_from(x)?
        .into_iter()
        .map(|d| d.unwrap_or(usize::MAX))
        .collect())
}

/// One exact simulation run. For a single-source start, `kappa` on the
/// returned trajectory is the largest distance from the source ever
/// infected.
pub fn gillespie<R: Rng + ?Sized>(
    g: &MultiGraph,
    lambda: f64,
    initial: &[Vertex],
    horizon: f64,
    record: &RecordOptions,
    rng: &mut R,
) -> Result<Trajectory> {
    let labels = match initial {
        [x] => Some(distance_labels(g, *x)?),
        _ => None,
    };
    let mut engine = ContactEngine::new(g, lambda)?;
    if let Some(labels) = &labels {
        engine = engine.with_labels(labels, None)?;
    }
    engine.run(initial, horizon, record, rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaSample {
    pub kappa: usize,
    /// The run was still alive at the horizon, so `kappa` is a lower bound.
    pub censored: bool,
}

/// Reach radius of the process started from `x`.
pub fn kappa<R: Rng + ?Sized>(
    g: &MultiGraph,
    lambda: f64,
    x: Vertex,
    horizon: f64,
    rng: &mut R,
) -> Result<KappaSample> {
    let traj = gillespie(g, lambda, &[x], horizon, &RecordOptions::default(), rng)?;
    Ok(KappaSample {
        kappa: traj.kappa.unwrap_or(0),
        censored: traj.censored(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ExtinctionSample {
    pub replica: u64,
    /// `None` when censored at the horizon.
    pub tau: Option<f64>,
    pub peak: usize,
    pub kappa: Option<usize>,
}

/// Independent replicas, run in parallel. Replica `i` uses
/// `replica_rng(seed, i)`, so results do not depend on scheduling.
pub fn extinction_samples(
    g: &MultiGraph,
    lambda: f64,
    initial: &[Vertex],
    replicas: u64,
    horizon: f64,
    seed: u64,
) -> Result<Vec<ExtinctionSample>> {
    let labels = match initial {
        [x] => Some(distance_labels(g, *x)?),
        _ => None,
    };
    ContactEngine::new(g, lambda)?;
    let opts = RecordOptions::default();
    (0..replicas)
        .into_par_iter()
        .map_init(
            || {
                let engine = ContactEngine::new(g, lambda).expect("rate checked above");
                match &labels {
                    Some(l) => engine.with_labels(l, None).expect("one label per vertex"),
                    None => engine,
                }
            },
            |engine, i| {
                let mut rng = replica_rng(seed, i);
                let traj = engine.run(initial, horizon, &opts, &mut rng)?;
                Ok(ExtinctionSample {
                    replica: i,
                    tau: traj.extinction,
                    peak: traj.peak,
                    kappa: traj.kappa,
                })
            },
        )
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::OrientedEdge;
    use crate::rng::seeded;

    fn k2() -> MultiGraph {
        MultiGraph::from_edges(2, [(0, 1)]).unwrap()
    }

    #[test]
    fn initial_condition_parsing() {
        assert_eq!("all".parse::<InitialCondition>().unwrap(), InitialCondition::All);
        assert_eq!(
            "vertex:3".parse::<InitialCondition>().unwrap(),
            InitialCondition::Vertex(3)
        );
        assert_eq!(
            "set:2,0,2".parse::<InitialCondition>().unwrap().resolve(3).unwrap(),
            vec![0, 2]
        );
        assert!("vertex:x".parse::<InitialCondition>().is_err());
        assert!(InitialCondition::Vertex(5).resolve(3).is_err());
    }

    #[test]
    fn zero_horizon_has_no_marks() {
        let h = sample_harris(&k2(), 1.0, 0.0, &mut seeded(1)).unwrap();
        assert!(h.schedule().is_empty());
    }

    #[test]
    fn loop_carries_two_arrow_streams() {
        let g = MultiGraph::from_edges(1, [(0, 0)]).unwrap();
        let mut rng = seeded(2);
        let trials = 4000;
        let total: usize = (0..trials)
            .map(|_| {
                let h = sample_harris(&g, 1.0, 10.0, &mut rng).unwrap();
                h.transmissions(OrientedEdge::new(0, false)).len()
                    + h.transmissions(OrientedEdge::new(0, true)).len()
            })
            .sum();
        let mean = total as f64 / trials as f64;
        // Poisson(20): standard error sqrt(20 / trials)
        assert!((mean - 20.0).abs() < 4.0 * (20.0 / trials as f64).sqrt(), "{mean}");
    }

    #[test]
    fn hand_traced_k2() {
        let g = k2();
        // arrow 0 -> 1 at 0.5, recovery at 0 at 0.7
        let h = HarrisSystem::from_marks(
            &g,
            1.0,
            1.0,
            vec![vec![0.7], vec![]],
            vec![vec![0.5], vec![]],
        )
        .unwrap();
        assert_eq!(evolve_harris(&g, &h, &[0], 1.0).unwrap(), vec![1]);
        assert_eq!(evolve_harris(&g, &h, &[0], 0.6).unwrap(), vec![0, 1]);
        assert_eq!(evolve_harris(&g, &h, &[], 1.0).unwrap(), Vec::<usize>::new());
        assert_eq!(harris_extinction(&g, &h, &[0]).unwrap(), None);
        assert!(evolve_harris(&g, &h, &[0], 1.5).is_err());
    }

    #[test]
    fn no_marks_means_no_change() {
        let g = k2();
        let h = HarrisSystem::from_marks(&g, 1.0, 3.0, vec![vec![], vec![]], vec![vec![], vec![]])
            .unwrap();
        assert_eq!(evolve_harris(&g, &h, &[1], 3.0).unwrap(), vec![1]);
    }

    #[test]
    fn from_marks_validates() {
        let g = k2();
        assert!(HarrisSystem::from_marks(&g, 1.0, 1.0, vec![vec![0.5, 0.2], vec![]], vec![vec![], vec![]]).is_err());
        assert!(HarrisSystem::from_marks(&g, 1.0, 1.0, vec![vec![2.0], vec![]], vec![vec![], vec![]]).is_err());
        assert!(HarrisSystem::from_marks(&g, 1.0, 1.0, vec![vec![]], vec![vec![], vec![]]).is_err());
    }

    #[test]
    fn tie_breaking_puts_recovery_first() {
        let g = k2();
        let h = HarrisSystem::from_marks(&g, 1.0, 1.0, vec![vec![0.5], vec![]], vec![vec![0.5], vec![]])
            .unwrap();
        // recovery of 0 at 0.5 happens before its arrow at 0.5
        assert_eq!(evolve_harris(&g, &h, &[0], 1.0).unwrap(), Vec::<usize>::new());
    }

    #[test]
    fn thinning_nests() {
        let g = MultiGraph::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let h = sample_harris(&g, 2.0, 5.0, &mut seeded(3)).unwrap();
        let h1 = h.thinned(1.0).unwrap();
        let h05 = h1.thinned(0.5).unwrap();
        for e in g.oriented_edges() {
            let big = h.transmissions(e);
            assert!(h1.transmissions(e).iter().all(|t| big.contains(t)));
            assert!(h05.transmissions(e).iter().all(|t| h1.transmissions(e).contains(t)));
        }
        assert!(h.thinned(3.0).is_err());
        let bare = h.thinned(0.0).unwrap();
        assert!(bare.schedule().iter().all(|m| m.kind == MarkKind::Recovery));
    }

    #[test]
    fn empty_start_is_extinct_at_zero() {
        let t = gillespie(&k2(), 1.0, &[], 10.0, &RecordOptions::default(), &mut seeded(4)).unwrap();
        assert_eq!(t.tau(), Some(0.0));
        assert_eq!(t.peak, 0);
    }

    #[test]
    fn isolated_vertex_mean_lifetime() {
        let g = MultiGraph::new(1);
        let s = extinction_samples(&g, 1.0, &[0], 20_000, f64::INFINITY, 5).unwrap();
        let mean = s.iter().map(|x| x.tau.unwrap()).sum::<f64>() / s.len() as f64;
        assert!((mean - 1.0).abs() < 4.0 / (s.len() as f64).sqrt());
    }

    #[test]
    fn event_log_is_time_ordered() {
        let g = MultiGraph::from_edges(3, [(0, 1), (1, 2), (2, 2)]).unwrap();
        let opts = RecordOptions {
            events: true,
            sample_times: vec![0.0, 0.5, 1.0],
        };
        let t = gillespie(&g, 2.0, &[0, 1, 2], 5.0, &opts, &mut seeded(6)).unwrap();
        assert!(t.events.windows(2).all(|w| w[0].time < w[1].time));
        assert_eq!(t.events.len() as u64, t.event_count);
        assert_eq!(t.samples.len(), 3);
        assert_eq!(t.samples[0], 3);
        if let Some(tau) = t.tau() {
            assert_eq!(t.events.last().unwrap().time, tau);
        }
    }

    #[test]
    fn samples_beyond_horizon_are_rejected() {
        let opts = RecordOptions {
            events: false,
            sample_times: vec![2.0],
        };
        assert!(gillespie(&k2(), 1.0, &[0], 1.0, &opts, &mut seeded(7)).is_err());
    }

    #[test]
    fn replicas_are_deterministic() {
        let g = MultiGraph::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let a = extinction_samples(&g, 1.5, &[0, 1], 50, 20.0, 9).unwrap();
        let b = extinction_samples(&g, 1.5, &[0, 1], 50, 20.0, 9).unwrap();
        assert_eq!(a, b);
        assert!(extinction_samples(&g, 1.5, &[0], 0, 20.0, 9).unwrap().is_empty());
    }

    #[test]
    fn kappa_on_k2_is_zero_half_the_time() {
        let g = k2();
        let mut rng = seeded(10);
        let trials = 40_000;
        let zeros = (0..trials)
            .filter(|_| kappa(&g, 1.0, 0, f64::INFINITY, &mut rng).unwrap().kappa == 0)
            .count();
        let p = zeros as f64 / trials as f64;
        assert!((p - 0.5).abs() < 4.0 * (0.25 / trials as f64).sqrt(), "{p}");
    }

    #[test]
    fn negative_rate_rejected() {
        assert!(ContactEngine::new(&k2(), -1.0).is_err());
        assert!(sample_harris(&k2(), f64::NAN, 1.0, &mut seeded(0)).is_err());
    }
}
