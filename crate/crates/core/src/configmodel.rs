//! Half-edge semi-graphs and the uniform pairing sampler.
//!
//! Half-edge `h` belongs to vertex `h / (d + 1)`; its slot is `h % (d + 1)`,
//! so the default "lowest half-edge id" election is the lowest
//! `(vertex, slot)` pair. Whatever half-edge is elected, its partner is drawn
//! uniformly from the other unmatched half-edges, which keeps the law of the
//! completed graph uniform over perfect matchings.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{MultiGraph, Vertex};

pub type HalfEdge = usize;

const MATCHED: usize = usize::MAX;

/// Partially matched half-edge structure `(V, E, H)`.
#[derive(Debug, Clone)]
pub struct SemiGraph {
    per_vertex: usize,
    graph: MultiGraph,
    halves: Vec<(HalfEdge, HalfEdge)>,
    partner: Vec<Option<HalfEdge>>,
    pool: Vec<HalfEdge>,
    position: Vec<usize>,
    remaining: Vec<usize>,
    cursor: usize,
}

/// An edge created by gluing two half-edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FormedEdge {
    /// Index of the new edge in [`SemiGraph::graph`].
    pub edge: usize,
    pub halves: (HalfEdge, HalfEdge),
    pub endpoints: (Vertex, Vertex),
}

/// `n` vertices, each carrying `d + 1` unmatched half-edges.
pub fn fresh_semigraph(n: usize, d: usize) -> Result<SemiGraph> {
    let per_vertex = d + 1;
    let total = n * per_vertex;
    if total % 2 == 1 {
        return Err(Error::OddHalfEdges(total));
    }
    Ok(SemiGraph {
        per_vertex,
        graph: MultiGraph::new(n),
        halves: Vec::with_capacity(total / 2),
        partner: vec![None; total],
        pool: (0..total).collect(),
        position: (0..total).collect(),
        remaining: vec![per_vertex; n],
        cursor: 0,
    })
}

impl SemiGraph {
    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    /// Half-edges per vertex, `d + 1`.
    pub fn half_edges_per_vertex(&self) -> usize {
        self.per_vertex
    }

    pub fn half_edge_count(&self) -> usize {
        self.partner.len()
    }

    pub fn vertex_of(&self, h: HalfEdge) -> Vertex {
        h / self.per_vertex
    }

    /// The realized edges `E`, as a graph on all vertices.
    pub fn graph(&self) -> &MultiGraph {
        &self.graph
    }

    /// Half-edge pairs of the realized edges, indexed like the edges.
    pub fn edge_halves(&self) -> &[(HalfEdge, HalfEdge)] {
        &self.halves
    }

    pub fn partner(&self, h: HalfEdge) -> Option<HalfEdge> {
        self.partner.get(h).copied().flatten()
    }

    pub fn is_unmatched(&self, h: HalfEdge) -> bool {
        h < self.position.len() && self.position[h] != MATCHED
    }

    /// The unmatched set `H`, in no particular order.
    pub fn unmatched(&self) -> &[HalfEdge] {
        &self.pool
    }

    pub fn unmatched_count(&self) -> usize {
        self.pool.len()
    }

    pub fn is_complete(&self) -> bool {
        self.pool.is_empty()
    }

    /// Number of unmatched half-edges at `v`.
    pub fn remaining(&self, v: Vertex) -> usize {
        self.remaining[v]
    }

    /// Unmatched half-edges at `v`, lowest slot first.
    pub fn unmatched_at(&self, v: Vertex) -> impl Iterator<Item = HalfEdge> + '_ {
        let first = v * self.per_vertex;
        (first..first + self.per_vertex).filter(|&h| self.position[h] != MATCHED)
    }

    /// Lowest unmatched half-edge id, if any.
    pub fn lowest_unmatched(&mut self) -> Option<HalfEdge> {
        while self.cursor < self.position.len() && self.position[self.cursor] == MATCHED {
            self.cursor += 1;
        }
        (self.cursor < self.position.len()).then_some(self.cursor)
    }

    /// Uniform draw from `H \ {h}`; `h` must be unmatched and not alone.
    pub fn draw_partner<R: Rng + ?Sized>(&self, h: HalfEdge, rng: &mut R) -> Result<HalfEdge> {
        if !self.is_unmatched(h) {
            return Err(Error::InvalidState(format!("half-edge {h} is not unmatched")));
        }
        let len = self.pool.len();
        if len < 2 {
            return Err(Error::InvalidState(format!(
                "cannot pair half-edge {h}: {len} unmatched half-edge(s) left"
            )));
        }
        let j = rng.random_range(0..len - 1);
        Ok(if self.pool[j] == h { self.pool[len - 1] } else { self.pool[j] })
    }

    fn take(&mut self, h: HalfEdge) {
        let i = self.position[h];
        let last = *self.pool.last().expect("pool holds h");
        self.pool.swap_remove(i);
        if last != h {
            self.position[last] = i;
        }
        self.position[h] = MATCHED;
        let v = self.vertex_of(h);
        self.remaining[v] -= 1;
    }

    /// `E <- E + {h + h'}`, `H <- H \ {h, h'}`.
    pub fn join(&mut self, h: HalfEdge, h2: HalfEdge) -> Result<FormedEdge> {
        if h == h2 || !self.is_unmatched(h) || !self.is_unmatched(h2) {
            return Err(Error::InvalidState(format!(
                "cannot glue half-edges {h} and {h2}"
            )));
        }
        self.take(h);
        self.take(h2);
        self.partner[h] = Some(h2);
        self.partner[h2] = Some(h);
        let endpoints = (self.vertex_of(h), self.vertex_of(h2));
        let edge = self.graph.add_edge(endpoints.0, endpoints.1)?;
        self.halves.push((h, h2));
        Ok(FormedEdge {
            edge,
            halves: (h, h2),
            endpoints,
        })
    }

    /// The perfect (or partial) matching as sorted `(low, high)` pairs.
    pub fn matching(&self) -> Vec<(HalfEdge, HalfEdge)> {
        let mut pairs: Vec<_> = self
            .halves
            .iter()
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .collect();
        pairs.sort_unstable();
        pairs
    }

    /// Re-derives every bookkeeping field and compares.
    pub fn check_invariants(&self) -> Result<()> {
        let total = self.half_edge_count();
        if 2 * self.halves.len() + self.pool.len() != total {
            return Err(Error::Invariant(format!(
                "{} matched pairs and {} unmatched half-edges do not add up to {total}",
                self.halves.len(),
                self.pool.len()
            )));
        }
        for (i, &h) in self.pool.iter().enumerate() {
            if self.position[h] != i || self.partner[h].is_some() {
                return Err(Error::Invariant(format!("pool entry {h} is inconsistent")));
            }
        }
        for (id, &(a, b)) in self.halves.iter().enumerate() {
            if self.partner[a] != Some(b) || self.partner[b] != Some(a) {
                return Err(Error::Invariant(format!("edge {id} halves disagree")));
            }
            if self.graph.edges()[id] != (self.vertex_of(a), self.vertex_of(b)) {
                return Err(Error::Invariant(format!("edge {id} endpoints disagree")));
            }
        }
        for v in 0..self.vertex_count() {
            if self.unmatched_at(v).count() != self.remaining[v] {
                return Err(Error::Invariant(format!("remaining count at {v} is stale")));
            }
        }
        Ok(())
    }
}

/// Chooses the next half-edge to match. Returning `None` defers to the
/// default order (lowest unmatched id).
pub trait ElectionPolicy {
    fn elect(&mut self, semi: &SemiGraph) -> Option<HalfEdge>;

    /// Called after every step driven by this policy.
    fn observe(&mut self, _semi: &SemiGraph, _formed: &FormedEdge) {}
}

/// Always defers to the default order.
#[derive(Debug, Default, Clone, Copy)]
pub struct LowestFirst;

impl ElectionPolicy for LowestFirst {
    fn elect(&mut self, _semi: &SemiGraph) -> Option<HalfEdge> {
        None
    }
}

/// Elects at the vertex with the fewest unmatched half-edges left, highest
/// vertex and slot on ties. Deliberately unlike the default order; used to
/// check that the sampled law does not depend on the election rule.
#[derive(Debug, Default, Clone, Copy)]
pub struct FewestRemaining;

impl ElectionPolicy for FewestRemaining {
    fn elect(&mut self, semi: &SemiGraph) -> Option<HalfEdge> {
        let v = (0..semi.vertex_count())
            .rev()
            .filter(|&v| semi.remaining(v) > 0)
            .min_by_key(|&v| semi.remaining(v))?;
        semi.unmatched_at(v).last()
    }
}

/// One elect-and-pair step.
pub fn match_step<P, R>(semi: &mut SemiGraph, policy: &mut P, rng: &mut R) -> Result<FormedEdge>
where
    P: ElectionPolicy + ?Sized,
    R: Rng + ?Sized,
{
    if semi.unmatched_count() < 2 {
        return Err(Error::InvalidState(format!(
            "match step needs two unmatched half-edges, {} left",
            semi.unmatched_count()
        )));
    }
    let h = match policy.elect(semi) {
        Some(h) => {
            if !semi.is_unmatched(h) {
                return Err(Error::InvalidState(format!(
                    "elected half-edge {h} is not unmatched"
                )));
            }
            h
        }
        None => semi.lowest_unmatched().expect("pool is non-empty"),
    };
    let partner = semi.draw_partner(h, rng)?;
    let formed = semi.join(h, partner)?;
    policy.observe(semi, &formed);
    Ok(formed)
}

/// Matches every remaining half-edge.
pub fn complete<P, R>(semi: &mut SemiGraph, policy: &mut P, rng: &mut R) -> Result<()>
where
    P: ElectionPolicy + ?Sized,
    R: Rng + ?Sized,
{
    while !semi.is_complete() {
        match_step(semi, policy, rng)?;
    }
    Ok(())
}

/// Full pairing under the given policy.
pub fn sample_matching<P, R>(n: usize, d: usize, policy: &mut P, rng: &mut R) -> Result<SemiGraph>
where
    P: ElectionPolicy + ?Sized,
    R: Rng + ?Sized,
{
    let mut semi = fresh_semigraph(n, d)?;
    complete(&mut semi, policy, rng)?;
    Ok(semi)
}

/// Configuration-model `(d+1)`-regular multigraph on `n` vertices.
pub fn sample_regular<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<MultiGraph> {
    Ok(sample_matching(n, d, &mut LowestFirst, rng)?.graph)
}

/// Number of cycles of length at most `r`. A loop is a cycle of length 1,
/// each pair of parallel edges a cycle of length 2, and longer cycles are
/// counted once per edge set (rotations and reflections identified).
pub fn count_short_cycles(g: &MultiGraph, r: usize) -> u64 {
    if r == 0 {
        return 0;
    }
    let n = g.vertex_count();
    let mut loops = 0u64;
    let mut mult: Vec<std::collections::BTreeMap<Vertex, u64>> = vec![Default::default(); n];
    for &(a, b) in g.edges() {
        if a == b {
            loops += 1;
        } else {
            *mult[a].entry(b).or_default() += 1;
            *mult[b].entry(a).or_default() += 1;
        }
    }
    let mut count = loops;
    if r >= 2 {
        for (a, row) in mult.iter().enumerate() {
            for &m in row.range(a + 1..).map(|(_, m)| m) {
                count += m * (m - 1) / 2;
            }
        }
    }
    if r >= 3 {
        // simple vertex cycles through distinct vertices, smallest vertex
        // first; each is found once per direction
        let mut twice = 0u64;
        let mut on_path = vec![false; n];
        let mut path = Vec::with_capacity(r);
        for s in 0..n {
            on_path[s] = true;
            path.push(s);
            extend_cycles(&mult, s, r, 1, &mut path, &mut on_path, &mut twice);
            path.pop();
            on_path[s] = false;
        }
        count += twice / 2;
    }
    count
}

fn extend_cycles(
    mult: &[std::collections::BTreeMap<Vertex, u64>],
    start: Vertex,
    r: usize,
    weight: u64,
    path: &mut Vec<Vertex>,
    on_path: &mut [bool],
    total: &mut u64,
) {
    let u = *path.last().expect("path starts at the start vertex");
    for (&w, &m) in &mult[u] {
        if w == start && path.len() >= 3 {
            *total += weight * m;
        } else if w > start && !on_path[w] && path.len() < r {
            on_path[w] = true;
            path.push(w);
            extend_cycles(mult, start, r, weight * m, path, on_path, total);
            path.pop();
            on_path[w] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn fresh_counts() {
        let s = fresh_semigraph(2, 2).unwrap();
        assert_eq!(s.unmatched_count(), 6);
        assert_eq!(s.graph().edge_count(), 0);
        assert_eq!(fresh_semigraph(4, 2).unwrap().unmatched_count(), 12);
        assert_eq!(fresh_semigraph(3, 2).unwrap_err(), Error::OddHalfEdges(9));
    }

    #[test]
    fn single_vertex_two_halves_forms_loop() {
        let mut s = fresh_semigraph(1, 1).unwrap();
        let e = match_step(&mut s, &mut LowestFirst, &mut seeded(1)).unwrap();
        assert_eq!(e.endpoints, (0, 0));
        assert!(s.is_complete());
    }

    #[test]
    fn two_vertices_one_half_each() {
        let mut s = fresh_semigraph(2, 0).unwrap();
        let e = match_step(&mut s, &mut LowestFirst, &mut seeded(2)).unwrap();
        assert_eq!(e.endpoints, (0, 1));
    }

    #[test]
    fn step_on_exhausted_semigraph_fails() {
        let mut s = fresh_semigraph(1, 1).unwrap();
        let mut rng = seeded(3);
        match_step(&mut s, &mut LowestFirst, &mut rng).unwrap();
        assert!(matches!(
            match_step(&mut s, &mut LowestFirst, &mut rng),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn first_step_loop_probability() {
        // from half-edge 0 at vertex 0, 2 of the 5 candidates sit at vertex 0
        let trials = 50_000;
        let mut rng = seeded(4);
        let mut loops = 0;
        for _ in 0..trials {
            let mut s = fresh_semigraph(2, 2).unwrap();
            let e = match_step(&mut s, &mut LowestFirst, &mut rng).unwrap();
            loops += usize::from(e.endpoints.0 == e.endpoints.1);
        }
        let p = loops as f64 / trials as f64;
        let se = (0.4 * 0.6 / trials as f64).sqrt();
        assert!((p - 0.4).abs() < 4.0 * se, "p = {p}");
    }

    #[test]
    fn invariants_hold_through_sampling() {
        let mut rng = seeded(5);
        let mut s = fresh_semigraph(10, 3).unwrap();
        let mut policy = FewestRemaining;
        while !s.is_complete() {
            match_step(&mut s, &mut policy, &mut rng).unwrap();
            s.check_invariants().unwrap();
        }
        for v in 0..10 {
            assert_eq!(s.graph().degree(v).unwrap(), 4);
        }
    }

    #[test]
    fn bad_election_is_rejected() {
        struct Stale;
        impl ElectionPolicy for Stale {
            fn elect(&mut self, _: &SemiGraph) -> Option<HalfEdge> {
                Some(0)
            }
        }
        let mut s = fresh_semigraph(4, 1).unwrap();
        let mut rng = seeded(6);
        match_step(&mut s, &mut Stale, &mut rng).unwrap();
        assert!(match_step(&mut s, &mut Stale, &mut rng).is_err());
    }

    #[test]
    fn short_cycle_conventions() {
        let path = MultiGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(count_short_cycles(&path, 5), 0);
        let looped = MultiGraph::from_edges(1, [(0, 0)]).unwrap();
        assert_eq!(count_short_cycles(&looped, 1), 1);
        assert_eq!(count_short_cycles(&looped, 0), 0);
        let doubled = MultiGraph::from_edges(2, [(0, 1), (0, 1)]).unwrap();
        assert_eq!(count_short_cycles(&doubled, 1), 0);
        assert_eq!(count_short_cycles(&doubled, 2), 1);
        let triple = MultiGraph::from_edges(2, [(0, 1), (0, 1), (0, 1)]).unwrap();
        assert_eq!(count_short_cycles(&triple, 2), 3);
    }

    #[test]
    fn short_cycles_in_k4() {
        let k4 = MultiGraph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(count_short_cycles(&k4, 2), 0);
        assert_eq!(count_short_cycles(&k4, 3), 4);
        assert_eq!(count_short_cycles(&k4, 4), 7);
        // a doubled side of a triangle yields two triangles
        let t = MultiGraph::from_edges(3, [(0, 1), (0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(count_short_cycles(&t, 3), 3);
    }
}
