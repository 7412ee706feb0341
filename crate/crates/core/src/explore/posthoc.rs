//! Regenerative witnesses found in an already built graph.
//!
//! This is experiment plumbing, not the Pass: seeds are scanned in order,
//! and each gets a simple path of length `r` through unused vertices ending
//! at a vertex that roots a greedily grown copy of `T^d_l`, also on unused
//! vertices. The witness keeps only the path and tree edges, so distances
//! and embeddings inside it are exactly those of the copy. Greedy growth
//! can miss copies that exist.

use super::Witness;
use crate::error::{check_vertex, Result};
use crate::graph::{MultiGraph, OrientedEdge, Vertex};

struct Search<'g> {
    g: &'g MultiGraph,
    d: usize,
    ell: usize,
    r: usize,
    used: Vec<bool>,
}

impl Search<'_> {
    /// Edge to each distinct neighbour other than `v` itself.
    fn links(&self, v: Vertex) -> Vec<(Vertex, usize)> {
        let mut out: Vec<(Vertex, usize)> = self
            .g
            .out_edges(v)
            .iter()
            .map(|&e: &OrientedEdge| (self.g.head(e), e.edge()))
            .filter(|&(w, _)| w != v)
            .collect();
        out.sort_unstable();
        out.dedup_by_key(|p| p.0);
        out
    }

    /// Greedy breadth-first copy of `T_l` at `root`, avoiding `blocked`.
    fn tree_at(&self, root: Vertex, blocked: &[Vertex]) -> Option<(Vec<Vertex>, Vec<usize>)> {
        let mut taken: std::collections::HashSet<Vertex> = blocked.iter().copied().collect();
        taken.insert(root);
        let mut vertices = vec![root];
        let mut edges = Vec::new();
        let mut level = vec![root];
        for _ in 0..self.ell {
            let mut next = Vec::with_capacity(level.len() * self.d);
            for &u in &level {
                let mut kids = 0;
                for (w, e) in self.links(u) {
                    if kids == self.d {
                        break;
                    }
                    if self.used[w] || taken.contains(&w) {
                        continue;
                    }
                    taken.insert(w);
                    vertices.push(w);
                    edges.push(e);
                    next.push(w);
                    kids += 1;
                }
                if kids < self.d {
                    return None;
                }
            }
            level = next;
        }
        Some((vertices, edges))
    }

    fn paths(&self, path: &mut Vec<Vertex>, edges: &mut Vec<usize>, found: &mut Option<Witness>) {
        if found.is_some() {
            return;
        }
        let end = *path.last().expect("path starts at the seed");
        if path.len() == self.r + 1 {
            let blocked = &path[..path.len() - 1];
            if let Some((tv, te)) = self.tree_at(end, blocked) {
                let mut vertices = path.clone();
                vertices.extend(&tv[1..]);
                let mut all = edges.clone();
                all.extend(&te);
                *found = Some(Witness {
                    seed: path[0],
                    anchor: end,
                    vertices,
                    edges: all,
                    tree_edges: te,
                });
            }
            return;
        }
        for (w, e) in self.links(end) {
            if self.used[w] || path.contains(&w) {
                continue;
            }
            path.push(w);
            edges.push(e);
            self.paths(path, edges, found);
            path.pop();
            edges.pop();
        }
    }
}

/// Scans `w` in order and keeps seeds for which a disjoint witness is found,
/// stopping at `target` seeds. Returns the kept seeds with their witnesses.
pub fn posthoc_regenerative(
    g: &MultiGraph,
    w: &[Vertex],
    d: usize,
    ell: usize,
    r: usize,
    target: usize,
) -> Result<(Vec<Vertex>, Vec<Witness>)> {
    let mut s = Search {
        g,
        d,
        ell,
        r,
        used: vec![false; g.vertex_count()],
    };
    let mut seeds = Vec::new();
    let mut witnesses = Vec::new();
    for &v in w {
        if seeds.len() >= target {
            break;
        }
        check_vertex(v, g.vertex_count())?;
        if s.used[v] {
            continue;
        }
        let mut found = None;
        s.paths(&mut vec![v], &mut Vec::new(), &mut found);
        if let Some(wit) = found {
            for &u in &wit.vertices {
                s.used[u] = true;
            }
            seeds.push(v);
            witnesses.push(wit);
        }
    }
    Ok((seeds, witnesses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configmodel::sample_regular;
    use crate::explore::verify_regenerative;
    use crate::graph::build_hat_tree;
    use crate::rng::seeded;

    #[test]
    fn finds_trees_in_a_big_tree() {
        let t = build_hat_tree(3, 5).graph;
        let (seeds, wits) = posthoc_regenerative(&t, &[0], 3, 2, 1, 1).unwrap();
        assert_eq!(seeds, vec![0]);
        assert!(verify_regenerative(&t, &seeds, &wits, 3, 2, 1).ok);
    }

    #[test]
    fn random_graph_witnesses_verify() {
        let g = sample_regular(2000, 3, &mut seeded(5)).unwrap();
        let w: Vec<Vertex> = (0..200).collect();
        let (seeds, wits) = posthoc_regenerative(&g, &w, 3, 2, 2, 20).unwrap();
        assert_eq!(seeds.len(), 20);
        let check = verify_regenerative(&g, &seeds, &wits, 3, 2, 2);
        assert!(check.ok, "{:?}", check.fault);
    }

    #[test]
    fn nothing_in_a_path() {
        let g = MultiGraph::from_edges(6, (1..6).map(|i| (i - 1, i))).unwrap();
        let (seeds, _) = posthoc_regenerative(&g, &[0, 3], 2, 1, 1, 5).unwrap();
        assert!(seeds.is_empty());
    }
}
