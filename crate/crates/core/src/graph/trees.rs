//! Deterministic tree builders. Vertices are numbered in breadth-first
//! order from the root (vertex 0), and edge `i` joins vertex `i + 1` to its
//! parent.

use super::{MultiGraph, RootedGraph, Vertex};
use crate::error::{Error, Result};

fn grow(root_children: usize, children: usize, depth: usize) -> MultiGraph {
    let mut g = MultiGraph::new(1);
    let mut level = vec![0];
    for k in 0..depth {
        let fan = if k == 0 { root_children } else { children };
        let mut next = Vec::with_capacity(level.len() * fan);
        for &parent in &level {
            for _ in 0..fan {
                let child = g.add_vertex();
                g.add_edge(parent, child).expect("fresh vertices");
                next.push(child);
            }
        }
        level = next;
    }
    g
}

/// `(o, T^d_l)`: root of degree `d`, internal vertices of degree `d + 1`,
/// leaves at depth `l`.
pub fn build_regular_tree(d: usize, depth: usize) -> RootedGraph {
    RootedGraph {
        graph: grow(d, d, depth),
        root: 0,
    }
}

/// Ball of radius `depth` in the `(d+1)`-regular tree: the root has degree
/// `d + 1`.
pub fn build_hat_tree(d: usize, depth: usize) -> RootedGraph {
    RootedGraph {
        graph: grow(d + 1, d, depth),
        root: 0,
    }
}

/// Deletes edge `removed_edge` from `T^d_l` and keeps the root component,
/// relabelled in breadth-first order.
pub fn build_pruned_tree(d: usize, depth: usize, removed_edge: usize) -> Result<RootedGraph> {
    let full = build_regular_tree(d, depth).graph;
    if removed_edge >= full.edge_count() {
        return Err(Error::EdgeOutOfRange {
            edge: removed_edge,
            edge_count: full.edge_count(),
        });
    }
    // BFS numbering means the detached subtree is exactly the set of
    // descendants of vertex removed_edge + 1.
    let cut = removed_edge + 1;
    let mut dropped = vec![false; full.vertex_count()];
    dropped[cut] = true;
    for (id, &(parent, child)) in full.edges().iter().enumerate() {
        if id != removed_edge && dropped[parent] {
            dropped[child] = true;
        }
    }
    let kept: Vec<Vertex> = (0..full.vertex_count()).filter(|&v| !dropped[v]).collect();
    let graph = full.induced_subgraph(&kept)?;
    Ok(RootedGraph { graph, root: 0 })
}

/// Rooted pruned `l`-trees up to rooted isomorphism: one per depth of the
/// removed edge, shallowest cut first. For `l = 0` the tree has no edge to
/// remove and the catalog is the single vertex `T_0`.
pub fn pruned_tree_catalog(d: usize, depth: usize) -> Vec<RootedGraph> {
    if depth == 0 {
        return vec![RootedGraph::single_vertex()];
    }
    let mut first_at_depth = 1usize;
    let mut width = d;
    let mut out = Vec::with_capacity(depth);
    for _ in 1..=depth {
        out.push(build_pruned_tree(d, depth, first_at_depth - 1).expect("edge exists"));
        first_at_depth += width;
        width *= d;
    }
    out
}

/// Breadth-first depth of every vertex from `root` (`usize::MAX` when
/// unreachable).
pub fn depths_from(tree: &RootedGraph) -> Vec<usize> {
    tree.graph
        .distances_from(tree.root)
        .expect("root is valid")
        .into_iter()
        .map(|d| d.unwrap_or(usize::MAX))
        .collect()
}
