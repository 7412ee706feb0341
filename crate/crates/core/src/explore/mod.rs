//! Exploration of the configuration model from a seed set.
//!
//! The graph is built half-edge by half-edge ([`crate::configmodel`]),
//! first around the seeds (`r`-neighbourhoods), then by Passes that grow a
//! tree of depth `l` from one bud per seed. A successful Pass leaves an
//! `(l, r)`-favourable witness around its seed, and witnesses of different
//! passes are vertex-disjoint. The verifiers in this module re-check such
//! claims on the finished graph without using any state of the exploration.
//!
//! Frontier growth: when Step 1 reaches a fresh vertex `v'` at depth below
//! `l`, its `d` remaining half-edges join the frontier `H̄`. Without this
//! the exploration could not go past depth one; with it the frontier stays
//! within `d^l` half-edges and Step 1 runs at most `c_l` times.

mod pass;
mod posthoc;
mod prepared;

pub use pass::{
    construct, extract_good_subset, Collision, CollisionKind, Construction, Extraction, ExtractionStats,
    PassOutcome, PassState, PreparedMode, Seed,
};
pub use posthoc::posthoc_regenerative;
pub use prepared::{build_neighbourhoods_first, is_r_prepared, prepared_subset, NeighbourhoodFirst, PreparedReport};

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::graph::{build_regular_tree, embeds, pruned_tree_catalog, MultiGraph, RootedGraph, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Constants {
    /// `c_l = d + d^2 + ... + d^l`.
    pub c_ell: u64,
    /// `c_{r,l} = 1 + (d+1) + ... + (d+1) d^{r-1} + c_l`.
    pub c_r_ell: u64,
    /// `gamma_r = (1 + 2 / ((d+1) d^{r-1}))^{-1}`.
    #[serde(serialize_with = "ratio_as_pair")]
    pub gamma_r: Ratio<u64>,
    /// `c̄_r = 1 + (d+1) + ... + (d+1) d^{r-1}`, the size of a loop-free
    /// `r`-neighbourhood.
    pub c_bar_r: u64,
}

fn ratio_as_pair<S: serde::Serializer>(r: &Ratio<u64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(r.numer())?;
    t.serialize_element(r.denom())?;
    t.end()
}

/// Exact constants of the exploration. `r = 0` gives `c̄_0 = 1` and
/// `gamma_0 = 0`.
pub fn constants(d: usize, r: usize, ell: usize) -> Constants {
    let d = d as u64;
    let c_ell: u64 = (1..=ell as u32).map(|i| d.pow(i)).sum();
    let c_bar_r: u64 = 1 + (0..r as u32).map(|i| (d + 1) * d.pow(i)).sum::<u64>();
    let gamma_r = if r == 0 {
        Ratio::from_integer(0)
    } else {
        let buds = (d + 1) * d.pow(r as u32 - 1);
        Ratio::new(buds, buds + 2)
    };
    Constants {
        c_ell,
        c_r_ell: c_bar_r + c_ell,
        gamma_r,
        c_bar_r,
    }
}

/// A subgraph `G'_v` of a host graph claimed to certify seed `v`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Witness {
    pub seed: Vertex,
    /// The vertex carrying the tree: the bud `x` of a Pass, or the tree
    /// root of a regenerative witness.
    pub anchor: Vertex,
    /// Host vertices, seed first.
    pub vertices: Vec<Vertex>,
    /// Host edge ids.
    pub edges: Vec<usize>,
    /// The edges hanging below `anchor`; a subset of `edges`.
    pub tree_edges: Vec<usize>,
}

impl Witness {
    /// The witness as a graph rooted at the seed (local vertex `i` is
    /// `vertices[i]`).
    pub fn rooted(&self, host: &MultiGraph) -> Result<RootedGraph> {
        if self.vertices.first() != Some(&self.seed) {
            return Err(Error::InvalidInput("witness must list its seed first".into()));
        }
        Ok(RootedGraph {
            graph: host.edge_subgraph(&self.vertices, &self.edges)?,
            root: 0,
        })
    }
}

/// Local vertices at distance exactly `r` from the root.
fn at_distance(w: &RootedGraph, r: usize) -> Vec<Vertex> {
    w.graph
        .distances_from(w.root)
        .expect("root is valid")
        .into_iter()
        .enumerate()
        .filter_map(|(v, d)| (d == Some(r)).then_some(v))
        .collect()
}

/// Whether `(root, w)` is `(l, r)`-favourable: some `x` at distance `r` from
/// the root such that `(x, w)` embeds a rooted pruned `l`-tree of the
/// `d`-ary family. For `l = 0` the only such tree is a single vertex.
pub fn verify_favourable(w: &RootedGraph, d: usize, ell: usize, r: usize) -> bool {
    if w.root >= w.vertex_count() {
        return false;
    }
    let catalog = pruned_tree_catalog(d, ell);
    at_distance(w, r).into_iter().any(|x| {
        let host = RootedGraph {
            graph: w.graph.clone(),
            root: x,
        };
        catalog.iter().any(|p| embeds(&host, p).is_some())
    })
}

/// Whether `(root, w)` has some `x` at distance `r` with `(x, w)` embedding
/// `(o, T^d_l)`.
pub fn verify_regenerative_witness(w: &RootedGraph, d: usize, ell: usize, r: usize) -> bool {
    if w.root >= w.vertex_count() {
        return false;
    }
    let pattern = build_regular_tree(d, ell);
    at_distance(w, r).into_iter().any(|x| {
        let host = RootedGraph {
            graph: w.graph.clone(),
            root: x,
        };
        embeds(&host, &pattern).is_some()
    })
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct RegenerativeCheck {
    pub ok: bool,
    pub fault: Option<String>,
}

/// Independent check that `witnesses` certify `w` as `(l, r)`-regenerative
/// in `host`: one witness per seed (same order), pairwise vertex-disjoint,
/// made of host edges, each containing its seed and some `x` at distance `r`
/// (inside the witness) that roots an embedded `T_l`.
pub fn verify_regenerative(
    host: &MultiGraph,
    w: &[Vertex],
    witnesses: &[Witness],
    d: usize,
    ell: usize,
    r: usize,
) -> RegenerativeCheck {
    let fail = |m: String| RegenerativeCheck { ok: false, fault: Some(m) };
    if w.len() != witnesses.len() {
        return fail(format!("{} seeds but {} witnesses", w.len(), witnesses.len()));
    }
    let mut owner = std::collections::HashMap::new();
    for (&v, wit) in w.iter().zip(witnesses) {
        if wit.seed != v || !wit.vertices.contains(&v) {
            return fail(format!("witness for {v} does not contain it"));
        }
        for &u in &wit.vertices {
            if let Some(other) = owner.insert(u, v) {
                if other != v {
                    return fail(format!("witnesses of {other} and {v} share vertex {u}"));
                }
                return fail(format!("witness of {v} lists vertex {u} twice"));
            }
        }
        let rooted = match wit.rooted(host) {
            Ok(g) => g,
            Err(e) => return fail(format!("witness of {v} is not a subgraph: {e}")),
        };
        if !verify_regenerative_witness(&rooted, d, ell, r) {
            return fail(format!("witness of {v} carries no T_{ell} at distance {r}"));
        }
    }
    RegenerativeCheck { ok: true, fault: None }
}

/// Turns `(l, r)`-favourable Pass witnesses into `(l-1, r+1)`-regenerative
/// ones: below the bud `x`, pick the lowest child `c` whose subtree (plus the
/// edge `x c`) carries a full `T_{l-1}` rooted at `c`.
pub fn good_to_regenerative(host: &MultiGraph, witnesses: &[Witness], d: usize, ell: usize) -> Result<Vec<Witness>> {
    if ell == 0 {
        return Err(Error::InvalidInput("good_to_regenerative needs l >= 1".into()));
    }
    let pattern = build_regular_tree(d, ell - 1);
    witnesses
        .iter()
        .map(|wit| {
            let mut adj: std::collections::HashMap<Vertex, Vec<(Vertex, usize)>> = Default::default();
            for &e in &wit.tree_edges {
                let (a, b) = host.edge(e)?;
                adj.entry(a).or_default().push((b, e));
                adj.entry(b).or_default().push((a, e));
            }
            let tree_vertices: std::collections::HashSet<Vertex> = adj.keys().copied().collect();
            let ball_vertices: Vec<Vertex> = wit
                .vertices
                .iter()
                .copied()
                .filter(|v| *v == wit.anchor || !tree_vertices.contains(v))
                .collect();
            let ball_edges: Vec<usize> = wit
                .edges
                .iter()
                .copied()
                .filter(|e| !wit.tree_edges.contains(e))
                .collect();
            let mut children = adj.get(&wit.anchor).cloned().unwrap_or_default();
            children.sort_unstable();
            for (c, link) in children {
                let mut sub_vertices = vec![c];
                let mut sub_edges = Vec::new();
                let mut stack = vec![(c, wit.anchor)];
                while let Some((u, from)) = stack.pop() {
                    for &(v, e) in &adj[&u] {
                        if v != from {
                            sub_vertices.push(v);
                            sub_edges.push(e);
                            stack.push((v, u));
                        }
                    }
                }
                let local = host.edge_subgraph(&sub_vertices, &sub_edges)?;
                if embeds(&RootedGraph { graph: local, root: 0 }, &pattern).is_none() {
                    continue;
                }
                let mut vertices = ball_vertices.clone();
                vertices.extend(&sub_vertices);
                let mut edges = ball_edges.clone();
                edges.push(link);
                edges.extend(&sub_edges);
                return Ok(Witness {
                    seed: wit.seed,
                    anchor: c,
                    vertices,
                    edges,
                    tree_edges: sub_edges,
                });
            }
            Err(Error::InvalidInput(format!(
                "witness of seed {} has no intact subtree of depth {}",
                wit.seed,
                ell - 1
            )))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_hat_tree;

    #[test]
    fn constant_values() {
        assert_eq!(constants(3, 1, 2).c_ell, 12);
        assert_eq!(constants(3, 1, 2).gamma_r, Ratio::new(2, 3));
        assert_eq!(constants(3, 2, 1).c_bar_r, 17);
        assert_eq!(constants(3, 2, 2).c_r_ell, 17 + 12);
    }

    fn path_then_tree(r: usize, d: usize, ell: usize) -> RootedGraph {
        let t = build_regular_tree(d, ell).graph;
        let mut g = MultiGraph::new(r + t.vertex_count());
        for i in 0..r {
            g.add_edge(i, i + 1).unwrap();
        }
        for &(a, b) in t.edges() {
            g.add_edge(a + r, b + r).unwrap();
        }
        RootedGraph { graph: g, root: 0 }
    }

    #[test]
    fn favourable_examples() {
        assert!(verify_favourable(&RootedGraph::single_vertex(), 3, 0, 0));
        assert!(verify_favourable(&path_then_tree(2, 3, 2), 3, 2, 2));
        assert!(!verify_favourable(&path_then_tree(2, 3, 2), 3, 2, 3));
        // path of length 2 with no tree at the end
        let bare = path_then_tree(2, 3, 0);
        assert!(!verify_favourable(&bare, 3, 1, 2));
    }

    #[test]
    fn pruned_witness_still_favourable() {
        let w = path_then_tree(1, 2, 2);
        let pruned = build_regular_tree(2, 2);
        let mut g = w.graph.clone();
        // drop one grandchild edge of the tree copy
        let last = g.edge_count() - 1;
        let kept: Vec<usize> = (0..last).collect();
        g = g.edge_subgraph(&(0..g.vertex_count() - 1).collect::<Vec<_>>(), &kept).unwrap();
        let rooted = RootedGraph { graph: g, root: 0 };
        assert!(verify_favourable(&rooted, 2, 2, 1));
        assert!(!verify_regenerative_witness(&rooted, 2, 2, 1));
        assert_eq!(pruned.vertex_count(), 7);
    }

    #[test]
    fn regenerative_checks() {
        let host = build_hat_tree(3, 4).graph;
        assert!(verify_regenerative(&host, &[], &[], 3, 2, 1).ok);
        let a = Witness {
            seed: 0,
            anchor: 1,
            vertices: vec![0, 1],
            edges: vec![0],
            tree_edges: vec![],
        };
        let b = Witness { seed: 2, vertices: vec![2, 1], ..a.clone() };
        let check = verify_regenerative(&host, &[0, 2], &[a.clone(), b], 3, 0, 1);
        assert!(!check.ok);
        assert!(verify_regenerative(&host, &[0], &[a], 3, 0, 1).ok);
    }
}
