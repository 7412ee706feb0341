use rand::Rng;

use crate::configmodel::{match_step, ElectionPolicy, FormedEdge, HalfEdge, SemiGraph};
use crate::error::{check_vertex, Result};
use crate::graph::{MultiGraph, Vertex};

/// Outcome of the `r`-prepared test.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct PreparedReport {
    /// The tested set, deduplicated, in the order given.
    pub seeds: Vec<Vertex>,
    pub radius: usize,
    /// Per seed: the induced `r`-neighbourhood has no cycle, loop or
    /// parallel edge.
    pub loop_free: Vec<bool>,
    pub first_cyclic: Option<Vertex>,
    /// First pair of seeds (in scan order) whose neighbourhoods meet.
    pub first_overlap: Option<(Vertex, Vertex)>,
    pub prepared: bool,
}

fn dedup_keep_order(w: &[Vertex]) -> Vec<Vertex> {
    let mut seen = std::collections::HashSet::new();
    w.iter().copied().filter(|v| seen.insert(*v)).collect()
}

fn ball_is_loop_free(g: &MultiGraph, v: Vertex, r: usize) -> Result<(bool, Vec<Vertex>)> {
    let ball = g.ball(v, r)?;
    Ok((ball.graph.is_forest(), ball.vertices))
}

pub fn is_r_prepared(g: &MultiGraph, w: &[Vertex], r: usize) -> Result<PreparedReport> {
    let seeds = dedup_keep_order(w);
    let mut owner: std::collections::HashMap<Vertex, Vertex> = std::collections::HashMap::new();
    let mut loop_free = Vec::with_capacity(seeds.len());
    let mut first_cyclic = None;
    let mut first_overlap = None;
    for &v in &seeds {
        check_vertex(v, g.vertex_count())?;
        let (ok, vertices) = ball_is_loop_free(g, v, r)?;
        loop_free.push(ok);
        if !ok && first_cyclic.is_none() {
            first_cyclic = Some(v);
        }
        for u in vertices {
            if let Some(&other) = owner.get(&u) {
                if first_overlap.is_none() {
                    first_overlap = Some((other, v));
                }
            } else {
                owner.insert(u, v);
            }
        }
    }
    Ok(PreparedReport {
        prepared: first_cyclic.is_none() && first_overlap.is_none(),
        seeds,
        radius: r,
        loop_free,
        first_cyclic,
        first_overlap,
    })
}

/// Largest prefix-greedy subset of `w` that is `r`-prepared: seeds are
/// scanned in the given order and kept when their neighbourhood is loop-free
/// and misses every neighbourhood kept so far.
pub fn prepared_subset(g: &MultiGraph, w: &[Vertex], r: usize) -> Result<Vec<Vertex>> {
    let mut taken = vec![false; g.vertex_count()];
    let mut out = Vec::new();
    for v in dedup_keep_order(w) {
        check_vertex(v, g.vertex_count())?;
        let (ok, vertices) = ball_is_loop_free(g, v, r)?;
        if ok && vertices.iter().all(|&u| !taken[u]) {
            for u in vertices {
                taken[u] = true;
            }
            out.push(v);
        }
    }
    Ok(out)
}

/// Elects half-edges at vertices within distance `r - 1` of the seed set,
/// breadth-first, so that exactly the `r`-neighbourhood of the seeds gets
/// built. Distances are updated from each formed edge.
#[derive(Debug, Clone)]
pub struct NeighbourhoodFirst {
    radius: usize,
    dist: Vec<usize>,
    queue: std::collections::VecDeque<Vertex>,
}

impl NeighbourhoodFirst {
    pub fn new(n: usize, seeds: &[Vertex], radius: usize) -> Result<Self> {
        let mut dist = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::new();
        for &v in seeds {
            check_vertex(v, n)?;
            if dist[v] == usize::MAX {
                dist[v] = 0;
                if radius > 0 {
                    queue.push_back(v);
                }
            }
        }
        Ok(NeighbourhoodFirst { radius, dist, queue })
    }

    /// The next half-edge to elect, or `None` once no unmatched half-edge
    /// sits at distance below the radius.
    pub fn pending(&mut self, semi: &SemiGraph) -> Option<HalfEdge> {
        while let Some(&v) = self.queue.front() {
            if let Some(h) = semi.unmatched_at(v).next() {
                return Some(h);
            }
            self.queue.pop_front();
        }
        None
    }

    /// Distance from the seed set in the graph built so far (`usize::MAX`
    /// when not reached).
    pub fn distances(&self) -> &[usize] {
        &self.dist
    }
}

impl ElectionPolicy for NeighbourhoodFirst {
    fn elect(&mut self, semi: &SemiGraph) -> Option<HalfEdge> {
        self.pending(semi)
    }

    fn observe(&mut self, _semi: &SemiGraph, formed: &FormedEdge) {
        let (a, b) = formed.endpoints;
        for (u, w) in [(a, b), (b, a)] {
            if self.dist[u] != usize::MAX && self.dist[u] + 1 < self.dist[w] {
                self.dist[w] = self.dist[u] + 1;
                if self.dist[w] < self.radius {
                    self.queue.push_back(w);
                }
            }
        }
    }
}

/// Matches half-edges near `w` until the `r`-neighbourhood of `w` is built
/// (and nothing more), then tests preparedness.
pub fn build_neighbourhoods_first<R: Rng + ?Sized>(
    semi: &mut SemiGraph,
    w: &[Vertex],
    r: usize,
    rng: &mut R,
) -> Result<PreparedReport> {
    let mut policy = NeighbourhoodFirst::new(semi.vertex_count(), w, r)?;
    while policy.pending(semi).is_some() {
        match_step(semi, &mut policy, rng)?;
    }
    is_r_prepared(semi.graph(), w, r)
}
