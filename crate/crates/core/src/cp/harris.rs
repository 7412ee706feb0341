use std::cmp::Ordering;

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{check_rate, check_vertex, Error, Result};
use crate::graph::{MultiGraph, OrientedEdge, Vertex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MarkKind {
    Recovery,
    Transmission,
}

/// One mark of the merged schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mark {
    pub time: f64,
    pub kind: MarkKind,
    /// Vertex for a recovery mark, oriented-edge index for an arrow.
    pub site: usize,
}

fn schedule_order(a: &Mark, b: &Mark) -> Ordering {
    a.time
        .total_cmp(&b.time)
        .then(a.kind.cmp(&b.kind))
        .then(a.site.cmp(&b.site))
}

/// Realized Poisson marks on `[0, horizon]`: rate 1 per vertex, rate
/// `lambda` per oriented edge. Every arrow carries a uniform label so the
/// system can be thinned to any smaller rate, which couples runs across
/// `lambda` monotonically.
#[derive(Debug, Clone, PartialEq)]
pub struct HarrisSystem {
    horizon: f64,
    lambda: f64,
    recoveries: Vec<Vec<f64>>,
    transmissions: Vec<Vec<f64>>,
    labels: Vec<Vec<f64>>,
    schedule: Vec<Mark>,
}

fn poisson_times<R: Rng + ?Sized>(rate: f64, horizon: f64, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::new();
    if rate <= 0.0 {
        return out;
    }
    let mut t = 0.0;
    loop {
        t += rng.sample::<f64, _>(Exp1) / rate;
        if t > horizon {
            return out;
        }
        out.push(t);
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon.is_finite() && horizon >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "horizon",
            value: horizon,
            domain: "finite, >= 0",
        })
    }
}

/// Samples every mark process of `g` on `[0, horizon]`.
pub fn sample_harris<R: Rng + ?Sized>(
    g: &MultiGraph,
    lambda: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<HarrisSystem> {
    check_rate("lambda", lambda)?;
    check_horizon(horizon)?;
    let recoveries = (0..g.vertex_count())
        .map(|_| poisson_times(1.0, horizon, rng))
        .collect();
    let mut transmissions = Vec::with_capacity(g.oriented_edge_count());
    let mut labels = Vec::with_capacity(g.oriented_edge_count());
    for _ in 0..g.oriented_edge_count() {
        let times = poisson_times(lambda, horizon, rng);
        labels.push(times.iter().map(|_| rng.random::<f64>()).collect());
        transmissions.push(times);
    }
    Ok(HarrisSystem::assemble(horizon, lambda, recoveries, transmissions, labels))
}

impl HarrisSystem {
    fn assemble(
        horizon: f64,
        lambda: f64,
        recoveries: Vec<Vec<f64>>,
        transmissions: Vec<Vec<f64>>,
        labels: Vec<Vec<f64>>,
    ) -> Self {
        let mut schedule = Vec::new();
        for (v, times) in recoveries.iter().enumerate() {
            schedule.extend(times.iter().map(|&time| Mark {
                time,
                kind: MarkKind::Recovery,
                site: v,
            }));
        }
        for (e, times) in transmissions.iter().enumerate() {
            schedule.extend(times.iter().map(|&time| Mark {
                time,
                kind: MarkKind::Transmission,
                site: e,
            }));
        }
        schedule.sort_unstable_by(schedule_order);
        HarrisSystem {
            horizon,
            lambda,
            recoveries,
            transmissions,
            labels,
            schedule,
        }
    }

    /// Hand-built marks. `transmissions` is indexed by oriented edge
    /// ([`OrientedEdge::index`]). Times must be strictly increasing per
    /// process and lie in `[0, horizon]`.
    pub fn from_marks(
        g: &MultiGraph,
        lambda: f64,
        horizon: f64,
        recoveries: Vec<Vec<f64>>,
        transmissions: Vec<Vec<f64>>,
    ) -> Result<Self> {
        check_rate("lambda", lambda)?;
        check_horizon(horizon)?;
        if recoveries.len() != g.vertex_count() || transmissions.len() != g.oriented_edge_count() {
            return Err(Error::InvalidInput(format!(
                "expected {} recovery and {} arrow processes, got {} and {}",
                g.vertex_count(),
                g.oriented_edge_count(),
                recoveries.len(),
                transmissions.len()
            )));
        }
        for times in recoveries.iter().chain(&transmissions) {
            let sorted = times.windows(2).all(|w| w[0] < w[1]);
            let inside = times.iter().all(|&t| (0.0..=horizon).contains(&t));
            if !sorted || !inside {
                return Err(Error::InvalidInput(
                    "mark times must be strictly increasing and inside [0, horizon]".into(),
                ));
            }
        }
        let labels = transmissions.iter().map(|t| vec![0.0; t.len()]).collect();
        Ok(Self::assemble(horizon, lambda, recoveries, transmissions, labels))
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn recoveries(&self, v: Vertex) -> &[f64] {
        &self.recoveries[v]
    }

    pub fn transmissions(&self, e: OrientedEdge) -> &[f64] {
        &self.transmissions[e.index()]
    }

    /// All marks merged in time order; ties broken recovery first, then by
    /// site index.
    pub fn schedule(&self) -> &[Mark] {
        &self.schedule
    }

    /// Keeps each arrow independently with probability `lambda / self.lambda`
    /// (decided by its label), giving a system at rate `lambda` on the same
    /// recovery marks. Thinning nests: thinner systems keep subsets.
    pub fn thinned(&self, lambda: f64) -> Result<Self> {
        check_rate("lambda", lambda)?;
        if lambda > self.lambda {
            return Err(Error::InvalidInput(format!(
                "cannot thin rate {} up to {lambda}",
                self.lambda
            )));
        }
        let keep = if self.lambda > 0.0 { lambda / self.lambda } else { 0.0 };
        let mut transmissions = Vec::with_capacity(self.transmissions.len());
        let mut labels = Vec::with_capacity(self.labels.len());
        for (times, labs) in self.transmissions.iter().zip(&self.labels) {
            let (t, l): (Vec<f64>, Vec<f64>) = times
                .iter()
                .zip(labs)
                .filter(|(_, &u)| u < keep)
                .map(|(&t, &u)| (t, u / keep))
                .unzip();
            transmissions.push(t);
            labels.push(l);
        }
        Ok(Self::assemble(
            self.horizon,
            lambda,
            self.recoveries.clone(),
            transmissions,
            labels,
        ))
    }

    fn check_graph(&self, g: &MultiGraph) -> Result<()> {
        if self.recoveries.len() != g.vertex_count()
            || self.transmissions.len() != g.oriented_edge_count()
        {
            return Err(Error::InvalidInput(
                "mark system was built for a different graph".into(),
            ));
        }
        Ok(())
    }
}

fn start_set(g: &MultiGraph, initial: &[Vertex]) -> Result<Vec<bool>> {
    let mut on = vec![false; g.vertex_count()];
    for &v in initial {
        check_vertex(v, g.vertex_count())?;
        on[v] = true;
    }
    Ok(on)
}

fn collect(on: &[bool]) -> Vec<Vertex> {
    on.iter()
        .enumerate()
        .filter_map(|(v, &b)| b.then_some(v))
        .collect()
}

fn apply(g: &MultiGraph, on: &mut [bool], mark: &Mark, edge_mask: Option<&[bool]>) {
    match mark.kind {
        MarkKind::Recovery => on[mark.site] = false,
        MarkKind::Transmission => {
            let e = OrientedEdge::from_index(mark.site);
            if edge_mask.is_some_and(|m| !m[e.edge()]) {
                return;
            }
            if on[g.tail(e)] {
                on[g.head(e)] = true;
            }
        }
    }
}

fn sweep(
    g: &MultiGraph,
    h: &HarrisSystem,
    initial: &[Vertex],
    after: f64,
    until: f64,
    edge_mask: Option<&[bool]>,
) -> Result<Vec<Vertex>> {
    h.check_graph(g)?;
    if until > h.horizon || until.is_nan() {
        return Err(Error::InvalidInput(format!(
            "time {until} is beyond the mark horizon {}",
            h.horizon
        )));
    }
    let mut on = start_set(g, initial)?;
    let first = h.schedule.partition_point(|m| m.time <= after);
    for mark in h.schedule[first..].iter().take_while(|m| m.time <= until) {
        apply(g, &mut on, mark, edge_mask);
    }
    Ok(collect(&on))
}

/// `xi^A_t`: the vertices reached at time `t` by an infection path from `A`
/// at time 0. Marks at times in `[0, t]` are replayed in schedule order.
pub fn evolve_harris(g: &MultiGraph, h: &HarrisSystem, initial: &[Vertex], t: f64) -> Result<Vec<Vertex>> {
    sweep(g, h, initial, f64::NEG_INFINITY, t, None)
}

/// Restart from `initial` at time `s`, replaying the marks in `(s, t]`.
pub fn evolve_between(
    g: &MultiGraph,
    h: &HarrisSystem,
    initial: &[Vertex],
    s: f64,
    t: f64,
) -> Result<Vec<Vertex>> {
    if s > t {
        return Err(Error::InvalidInput(format!("restart time {s} after {t}")));
    }
    sweep(g, h, initial, s, t, None)
}

/// Same as [`evolve_harris`] with arrows allowed only on edges whose
/// `edge_mask` entry is set: the process on the subgraph of those edges,
/// driven by the shared marks.
pub fn evolve_restricted(
    g: &MultiGraph,
    h: &HarrisSystem,
    initial: &[Vertex],
    t: f64,
    edge_mask: &[bool],
) -> Result<Vec<Vertex>> {
    if edge_mask.len() != g.edge_count() {
        return Err(Error::InvalidInput(format!(
            "edge mask has {} entries for {} edges",
            edge_mask.len(),
            g.edge_count()
        )));
    }
    sweep(g, h, initial, f64::NEG_INFINITY, t, Some(edge_mask))
}

/// Summary of one replay: extinction time (`None` if alive at the
/// horizon), peak infected count, and infected counts at `sample_times`
/// (ascending, within the horizon).
#[derive(Debug, Clone, PartialEq)]
pub struct HarrisSummary {
    pub extinction: Option<f64>,
    pub peak: usize,
    pub samples: Vec<usize>,
}

pub fn harris_summary(
    g: &MultiGraph,
    h: &HarrisSystem,
    initial: &[Vertex],
    sample_times: &[f64],
) -> Result<HarrisSummary> {
    h.check_graph(g)?;
    if sample_times.windows(2).any(|w| w[0] > w[1]) || sample_times.iter().any(|&t| !(0.0..=h.horizon).contains(&t)) {
        return Err(Error::InvalidInput(
            "sample times must be ascending and inside [0, horizon]".into(),
        ));
    }
    let mut on = start_set(g, initial)?;
    let mut count = on.iter().filter(|&&b| b).count();
    let mut peak = count;
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut next = 0;
    let mut extinction = (count == 0).then_some(0.0);
    for mark in &h.schedule {
        if extinction.is_some() {
            break;
        }
        while next < sample_times.len() && sample_times[next] < mark.time {
            samples.push(count);
            next += 1;
        }
        match mark.kind {
            MarkKind::Recovery => {
                if on[mark.site] {
                    on[mark.site] = false;
                    count -= 1;
                    if count == 0 {
                        extinction = Some(mark.time);
                    }
                }
            }
            MarkKind::Transmission => {
                let e = OrientedEdge::from_index(mark.site);
                let w = g.head(e);
                if on[g.tail(e)] && !on[w] {
                    on[w] = true;
                    count += 1;
                    peak = peak.max(count);
                }
            }
        }
    }
    samples.resize(sample_times.len(), count);
    Ok(HarrisSummary {
        extinction,
        peak,
        samples,
    })
}

/// Extinction time read off the sweep; `None` if the process is alive at
/// the horizon.
pub fn harris_extinction(g: &MultiGraph, h: &HarrisSystem, initial: &[Vertex]) -> Result<Option<f64>> {
    Ok(harris_summary(g, h, initial, &[])?.extinction)
}
