use rand::Rng;
use rand_distr::Exp1;

use crate::error::{check_rate, check_vertex, Error, Result};
use crate::graph::{MultiGraph, Vertex};

const NONE: usize = usize::MAX;

/// What a run should keep besides the summary statistics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecordOptions {
    /// Keep the full event log (every draw, including no-op transmissions).
    pub events: bool,
    /// Infected counts are reported at these times (ascending, within the
    /// horizon).
    pub sample_times: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum EventKind {
    Recovery,
    Transmission,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    /// Vertex for a recovery, oriented-edge index for a transmission.
    pub site: usize,
    /// False for transmissions onto infected (or fiber-blocked) vertices.
    pub effective: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial: Vec<Vertex>,
    pub horizon: f64,
    /// First time the infected set is empty; `None` when the run was
    /// censored at the horizon.
    pub extinction: Option<f64>,
    pub peak: usize,
    /// Largest distance label ever infected, when labels were supplied.
    pub kappa: Option<usize>,
    /// Whether a vertex at or beyond the boundary label was ever infected.
    pub touched_boundary: bool,
    pub final_infected: usize,
    pub samples: Vec<usize>,
    pub events: Vec<Event>,
    pub event_count: u64,
}

impl Trajectory {
    pub fn tau(&self) -> Option<f64> {
        self.extinction
    }

    pub fn censored(&self) -> bool {
        self.extinction.is_none()
    }

    /// `tau` capped at `cap`; censored runs count as surviving past it.
    pub fn tau_capped(&self, cap: f64) -> f64 {
        self.extinction.map_or(cap, |t| t.min(cap))
    }
}

/// Event-driven simulation of the contact process with a reusable
/// workspace. A run touches only the vertices it infects, so the same
/// engine serves huge truncated trees.
///
/// Recoveries fire at total rate `|I|`; transmissions at rate `lambda` per
/// oriented edge whose tail is infected. A transmission whose head is
/// already infected (loops included) is drawn and discarded.
#[derive(Debug, Clone)]
pub struct ContactEngine<'g> {
    graph: &'g MultiGraph,
    lambda: f64,
    fibers: Option<&'g [Vertex]>,
    fiber_busy: Vec<bool>,
    labels: Option<&'g [usize]>,
    boundary: Option<usize>,
    infected: Vec<Vertex>,
    slot: Vec<usize>,
    active: Vec<usize>,
    active_slot: Vec<usize>,
}

impl<'g> ContactEngine<'g> {
    pub fn new(graph: &'g MultiGraph, lambda: f64) -> Result<Self> {
        check_rate("lambda", lambda)?;
        Ok(ContactEngine {
            graph,
            lambda,
            fibers: None,
            fiber_busy: Vec::new(),
            labels: None,
            boundary: None,
            infected: Vec::new(),
            slot: vec![NONE; graph.vertex_count()],
            active: Vec::new(),
            active_slot: vec![NONE; graph.oriented_edge_count()],
        })
    }

    /// Suppress any birth onto a vertex whose fiber is already occupied.
    /// `fibers[v]` is the fiber of `v`.
    pub fn with_fibers(mut self, fibers: &'g [Vertex]) -> Result<Self> {
        if fibers.len() != self.graph.vertex_count() {
            return Err(Error::InvalidInput(format!(
                "{} fiber labels for {} vertices",
                fibers.len(),
                self.graph.vertex_count()
            )));
        }
        let width = fibers.iter().max().map_or(0, |&f| f + 1);
        self.fiber_busy = vec![false; width];
        self.fibers = Some(fibers);
        Ok(self)
    }

    /// Distance labels used for `kappa`, and the label at which a run counts
    /// as touching the boundary.
    pub fn with_labels(mut self, labels: &'g [usize], boundary: Option<usize>) -> Result<Self> {
        if labels.len() != self.graph.vertex_count() {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} vertices",
                labels.len(),
                self.graph.vertex_count()
            )));
        }
        self.labels = Some(labels);
        self.boundary = boundary;
        Ok(self)
    }

    pub fn graph(&self) -> &'g MultiGraph {
        self.graph
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn infect(&mut self, v: Vertex) {
        self.slot[v] = self.infected.len();
        self.infected.push(v);
        if let Some(f) = self.fibers {
            self.fiber_busy[f[v]] = true;
        }
        for e in self.graph.out_edges(v) {
            self.active_slot[e.index()] = self.active.len();
            self.active.push(e.index());
        }
    }

    fn recover(&mut self, v: Vertex) {
        let i = self.slot[v];
        self.infected.swap_remove(i);
        if let Some(&moved) = self.infected.get(i) {
            self.slot[moved] = i;
        }
        self.slot[v] = NONE;
        if let Some(f) = self.fibers {
            self.fiber_busy[f[v]] = false;
        }
        for e in self.graph.out_edges(v) {
            let j = self.active_slot[e.index()];
            self.active.swap_remove(j);
            if let Some(&moved) = self.active.get(j) {
                self.active_slot[moved] = j;
            }
            self.active_slot[e.index()] = NONE;
        }
    }

    fn reset(&mut self) {
        while let Some(&v) = self.infected.last() {
            self.recover(v);
        }
    }

    /// One run from `initial` until extinction or `horizon` (which may be
    /// infinite).
    pub fn run<R: Rng + ?Sized>(
        &mut self,
        initial: &[Vertex],
        horizon: f64,
        opts: &RecordOptions,
        rng: &mut R,
    ) -> Result<Trajectory> {
        if horizon.is_nan() || horizon < 0.0 {
            return Err(Error::Domain {
                name: "horizon",
                value: horizon,
                domain: "[0, inf]",
            });
        }
        if opts.sample_times.windows(2).any(|w| w[0] > w[1])
            || opts.sample_times.iter().any(|&s| !(0.0..=horizon).contains(&s))
        {
            return Err(Error::InvalidInput(
                "sample times must be ascending and within the horizon".into(),
            ));
        }
        let n = self.graph.vertex_count();
        let mut start: Vec<Vertex> = Vec::with_capacity(initial.len());
        for &v in initial {
            check_vertex(v, n)?;
            if self.slot[v] != NONE {
                continue;
            }
            if let Some(f) = self.fibers {
                if self.fiber_busy[f[v]] {
                    self.reset();
                    return Err(Error::InvalidInput(format!(
                        "initial configuration puts two particles in fiber {}",
                        f[v]
                    )));
                }
            }
            self.infect(v);
            start.push(v);
        }

        let mut kappa = self.labels.map(|_| 0usize);
        let mut touched = false;
        if let Some(labels) = self.labels {
            for &v in &start {
                kappa = kappa.max(Some(labels[v]));
                touched |= self.boundary.is_some_and(|b| labels[v] >= b);
            }
        }

        let mut traj = Trajectory {
            initial: start,
            horizon,
            extinction: None,
            peak: self.infected.len(),
            kappa: None,
            touched_boundary: false,
            final_infected: 0,
            samples: Vec::with_capacity(opts.sample_times.len()),
            events: Vec::new(),
            event_count: 0,
        };
        let mut next_sample = 0;
        let mut t = 0.0;
        loop {
            if self.infected.is_empty() {
                traj.extinction = Some(t);
                break;
            }
            let n_inf = self.infected.len() as f64;
            let total = n_inf + self.lambda * self.active.len() as f64;
            let dt: f64 = rng.sample::<f64, _>(Exp1) / total;
            let t_next = t + dt;
            if t_next > horizon {
                break;
            }
            while next_sample < opts.sample_times.len() && opts.sample_times[next_sample] < t_next {
                traj.samples.push(self.infected.len());
                next_sample += 1;
            }
            t = t_next;
            traj.event_count += 1;
            let u = rng.random::<f64>() * total;
            if u < n_inf {
                let v = self.infected[(u as usize).min(self.infected.len() - 1)];
                self.recover(v);
                if opts.events {
                    traj.events.push(Event {
                        time: t,
                        kind: EventKind::Recovery,
                        site: v,
                        effective: true,
                    });
                }
            } else {
                let j = (((u - n_inf) / self.lambda) as usize).min(self.active.len() - 1);
                let e = self.active[j];
                let w = self.graph.head(crate::graph::OrientedEdge::from_index(e));
                let blocked = self.slot[w] != NONE
                    || self.fibers.is_some_and(|f| self.fiber_busy[f[w]]);
                if !blocked {
                    self.infect(w);
                    traj.peak = traj.peak.max(self.infected.len());
                    if let Some(labels) = self.labels {
                        kappa = kappa.max(Some(labels[w]));
                        touched |= self.boundary.is_some_and(|b| labels[w] >= b);
                    }
                }
                if opts.events {
                    traj.events.push(Event {
                        time: t,
                        kind: EventKind::Transmission,
                        site: e,
                        effective: !blocked,
                    });
                }
            }
        }
        while next_sample < opts.sample_times.len() {
            traj.samples.push(self.infected.len());
            next_sample += 1;
        }
        traj.final_infected = self.infected.len();
        traj.kappa = kappa;
        traj.touched_boundary = touched;
        self.reset();
        Ok(traj)
    }
}
