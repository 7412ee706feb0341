//! Finite multigraphs with loops and parallel edges.
//!
//! Vertices are dense indices `0..n`. Every edge keeps a stable index, and
//! each edge `e` yields two oriented edges `2e` (first endpoint to second)
//! and `2e + 1` (the reverse). A loop therefore contributes two oriented
//! edges leaving the same vertex, which is what makes the degree of a vertex
//! equal to the number of oriented edges leaving it.

mod embed;
mod io;
mod trees;

use std::collections::VecDeque;

pub use embed::{check_embedding, embeds, Embedding};
pub use io::{parse_text, read_graph, write_graph};
pub use trees::{
    build_hat_tree, build_pruned_tree, build_regular_tree, depths_from, pruned_tree_catalog,
};

use crate::error::{check_vertex, Error, Result};

pub type Vertex = usize;

/// An edge together with a direction of traversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrientedEdge(usize);

impl OrientedEdge {
    pub fn new(edge: usize, reversed: bool) -> Self {
        OrientedEdge(2 * edge + usize::from(reversed))
    }

    pub fn from_index(index: usize) -> Self {
        OrientedEdge(index)
    }

    /// Dense index in `0..2m`.
    pub fn index(self) -> usize {
        self.0
    }

    /// The underlying unoriented edge.
    pub fn edge(self) -> usize {
        self.0 / 2
    }

    pub fn is_reversed(self) -> bool {
        self.0 % 2 == 1
    }

    pub fn flip(self) -> Self {
        OrientedEdge(self.0 ^ 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MultiGraph {
    edges: Vec<(Vertex, Vertex)>,
    out: Vec<Vec<OrientedEdge>>,
}

impl MultiGraph {
    pub fn new(vertex_count: usize) -> Self {
        MultiGraph {
            edges: Vec::new(),
            out: vec![Vec::new(); vertex_count],
        }
    }

    pub fn from_edges<I>(vertex_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vertex, Vertex)>,
    {
        let mut g = MultiGraph::new(vertex_count);
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn add_vertex(&mut self) -> Vertex {
        self.out.push(Vec::new());
        self.out.len() - 1
    }

    /// Appends an edge and returns its index. `u == v` adds a loop.
    pub fn add_edge(&mut self, u: Vertex, v: Vertex) -> Result<usize> {
        check_vertex(u, self.vertex_count())?;
        check_vertex(v, self.vertex_count())?;
        let id = self.edges.len();
        self.edges.push((u, v));
        self.out[u].push(OrientedEdge::new(id, false));
        self.out[v].push(OrientedEdge::new(id, true));
        Ok(id)
    }

    pub fn vertex_count(&self) -> usize {
        self.out.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn oriented_edge_count(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> Result<(Vertex, Vertex)> {
        self.edges.get(id).copied().ok_or(Error::EdgeOutOfRange {
            edge: id,
            edge_count: self.edges.len(),
        })
    }

    /// Starting vertex `v0` of an oriented edge.
    pub fn tail(&self, e: OrientedEdge) -> Vertex {
        let (a, b) = self.edges[e.edge()];
        if e.is_reversed() {
            b
        } else {
            a
        }
    }

    /// Ending vertex `v1` of an oriented edge.
    pub fn head(&self, e: OrientedEdge) -> Vertex {
        self.tail(e.flip())
    }

    pub fn is_loop(&self, edge: usize) -> bool {
        let (a, b) = self.edges[edge];
        a == b
    }

    /// Oriented edges starting at `v`; loops appear twice.
    pub fn out_edges(&self, v: Vertex) -> &[OrientedEdge] {
        &self.out[v]
    }

    pub fn oriented_edges(&self) -> impl Iterator<Item = OrientedEdge> + '_ {
        (0..self.oriented_edge_count()).map(OrientedEdge::from_index)
    }

    /// Degree with loops counted twice.
    pub fn degree(&self, v: Vertex) -> Result<usize> {
        check_vertex(v, self.vertex_count())?;
        Ok(self.out[v].len())
    }

    pub fn max_degree(&self) -> usize {
        self.out.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Heads of the oriented edges leaving `v`, with multiplicity.
    pub fn neighbours(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        self.out[v].iter().map(move |&e| self.head(e))
    }

    /// Distinct neighbours other than `v` itself, sorted.
    pub fn simple_neighbours(&self, v: Vertex) -> Vec<Vertex> {
        let mut ns: Vec<Vertex> = self.neighbours(v).filter(|&w| w != v).collect();
        ns.sort_unstable();
        ns.dedup();
        ns
    }

    pub fn is_adjacent(&self, u: Vertex, v: Vertex) -> bool {
        self.neighbours(u).any(|w| w == v)
    }

    pub fn loop_count(&self) -> usize {
        self.edges.iter().filter(|(a, b)| a == b).count()
    }

    /// Breadth-first distances from `source`; `None` marks unreachable
    /// vertices.
    pub fn distances_from(&self, source: Vertex) -> Result<Vec<Option<usize>>> {
        check_vertex(source, self.vertex_count())?;
        let mut dist = vec![None; self.vertex_count()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for w in self.neighbours(u) {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        Ok(dist)
    }

    /// Vertices within distance `radius` of `source`, in breadth-first order,
    /// paired with their distance. Touches only the explored region.
    pub fn within(&self, source: Vertex, radius: usize) -> Result<Vec<(Vertex, usize)>> {
        check_vertex(source, self.vertex_count())?;
        let mut found = vec![(source, 0)];
        let mut seen = std::collections::HashSet::from([source]);
        let mut head = 0;
        while head < found.len() {
            let (u, du) = found[head];
            head += 1;
            if du == radius {
                continue;
            }
            for w in self.neighbours(u) {
                if seen.insert(w) {
                    found.push((w, du + 1));
                }
            }
        }
        Ok(found)
    }

    pub fn dist(&self, u: Vertex, v: Vertex) -> Result<Option<usize>> {
        check_vertex(v, self.vertex_count())?;
        Ok(self.distances_from(u)?[v])
    }

    /// Induced subgraph on `vertices` (in the given order). Edge order
    /// follows the parent graph. Duplicates in `vertices` are rejected.
    pub fn induced_subgraph(&self, vertices: &[Vertex]) -> Result<MultiGraph> {
        let mut local = std::collections::HashMap::with_capacity(vertices.len());
        for (i, &v) in vertices.iter().enumerate() {
            check_vertex(v, self.vertex_count())?;
            if local.insert(v, i).is_some() {
                return Err(Error::InvalidInput(format!("vertex {v} listed twice")));
            }
        }
        let mut sub = MultiGraph::new(vertices.len());
        let mut ids: Vec<usize> = vertices
            .iter()
            .flat_map(|&v| self.out[v].iter().map(|e| e.edge()))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        for id in ids {
            let (a, b) = self.edges[id];
            if let (Some(&la), Some(&lb)) = (local.get(&a), local.get(&b)) {
                sub.add_edge(la, lb)?;
            }
        }
        Ok(sub)
    }

    /// Subgraph made of the listed edges only, on the given vertex list.
    pub fn edge_subgraph(&self, vertices: &[Vertex], edge_ids: &[usize]) -> Result<MultiGraph> {
        let mut local = std::collections::HashMap::with_capacity(vertices.len());
        for (i, &v) in vertices.iter().enumerate() {
            check_vertex(v, self.vertex_count())?;
            if local.insert(v, i).is_some() {
                return Err(Error::InvalidInput(format!("vertex {v} listed twice")));
            }
        }
        let mut sub = MultiGraph::new(vertices.len());
        for &id in edge_ids {
            let (a, b) = self.edge(id)?;
            match (local.get(&a), local.get(&b)) {
                (Some(&la), Some(&lb)) => {
                    sub.add_edge(la, lb)?;
                }
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "edge {id} = ({a}, {b}) leaves the vertex list"
                    )))
                }
            }
        }
        Ok(sub)
    }

    /// Closed ball `{w : dist(v, w) <= radius}` as an induced subgraph.
    pub fn ball(&self, v: Vertex, radius: usize) -> Result<Ball> {
        let found = self.within(v, radius)?;
        let vertices: Vec<Vertex> = found.iter().map(|&(w, _)| w).collect();
        let distances = found.iter().map(|&(_, d)| d).collect();
        let graph = self.induced_subgraph(&vertices)?;
        Ok(Ball {
            graph,
            vertices,
            distances,
        })
    }

    /// Copy of the graph without its loops; edge order otherwise preserved.
    pub fn without_loops(&self) -> MultiGraph {
        let mut g = MultiGraph::new(self.vertex_count());
        for &(a, b) in &self.edges {
            if a != b {
                g.add_edge(a, b).expect("endpoints already validated");
            }
        }
        g
    }

    /// True when the graph has no cycle of any length (no loops, no parallel
    /// edges, no longer cycles).
    pub fn is_forest(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.vertex_count()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return false;
            }
            parent[ra] = rb;
        }
        true
    }

    pub fn is_connected(&self) -> bool {
        if self.vertex_count() == 0 {
            return true;
        }
        self.distances_from(0)
            .map(|d| d.iter().all(Option::is_some))
            .unwrap_or(false)
    }
}

/// Result of [`MultiGraph::ball`]: local vertex `i` is original vertex
/// `vertices[i]` at distance `distances[i]` from the centre (local 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ball {
    pub graph: MultiGraph,
    pub vertices: Vec<Vertex>,
    pub distances: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedGraph {
    pub graph: MultiGraph,
    pub root: Vertex,
}

impl RootedGraph {
    pub fn new(graph: MultiGraph, root: Vertex) -> Result<Self> {
        check_vertex(root, graph.vertex_count())?;
        Ok(RootedGraph { graph, root })
    }

    pub fn single_vertex() -> Self {
        RootedGraph {
            graph: MultiGraph::new(1),
            root: 0,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }
}
