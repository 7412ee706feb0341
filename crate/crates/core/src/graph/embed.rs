//! Induced rooted embeddings.
//!
//! `f` embeds `(p_root, P)` into `(h_root, H)` when `f(p_root) = h_root`,
//! `f` is injective, and two distinct pattern vertices are neighbours
//! exactly when their images are. Edge multiplicities and loops play no
//! part in the neighbour relation.
//!
//! The search is plain backtracking over the pattern in breadth-first order.
//! For tree patterns it is pruned by a necessary condition computed on the
//! host's universal cover: the subtree below a pattern vertex `p` can only be
//! placed at a host vertex `h` entered from `h_parent` if the children of
//! `p` can be matched injectively to neighbours of `h` other than `h_parent`,
//! each of which again passes the same test. The check ignores global
//! injectivity, so it never rejects a real embedding; on forest hosts it is
//! exact and the search does not backtrack. Non-tree patterns fall back to
//! degree pruning only and can be slow on adversarial inputs.

use std::collections::HashMap;

use super::{RootedGraph, Vertex};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    /// `map[p]` is the host vertex assigned to pattern vertex `p`.
    pub map: Vec<Vertex>,
}

struct Adjacency {
    lists: Vec<Vec<Vertex>>,
}

impl Adjacency {
    fn of(g: &RootedGraph) -> Self {
        Adjacency {
            lists: (0..g.vertex_count())
                .map(|v| g.graph.simple_neighbours(v))
                .collect(),
        }
    }

    fn adjacent(&self, u: Vertex, v: Vertex) -> bool {
        self.lists[u].binary_search(&v).is_ok()
    }

    fn degree(&self, v: Vertex) -> usize {
        self.lists[v].len()
    }
}

const NO_PARENT: usize = usize::MAX;

struct TreePrune {
    children: Vec<Vec<Vertex>>,
    memo: HashMap<(Vertex, Vertex, Vertex), bool>,
}

impl TreePrune {
    fn feasible(&mut self, host: &Adjacency, p: Vertex, h: Vertex, h_parent: Vertex) -> bool {
        let need = self.children[p].len();
        if need == 0 {
            return true;
        }
        let available = host.degree(h) - usize::from(h_parent != NO_PARENT);
        if available < need {
            return false;
        }
        if let Some(&known) = self.memo.get(&(p, h, h_parent)) {
            return known;
        }
        let candidates: Vec<Vertex> = host.lists[h]
            .iter()
            .copied()
            .filter(|&c| c != h_parent)
            .collect();
        let children = self.children[p].clone();
        let compatible: Vec<Vec<usize>> = children
            .iter()
            .map(|&c| {
                (0..candidates.len())
                    .filter(|&j| self.feasible(host, c, candidates[j], h))
                    .collect()
            })
            .collect();
        let ok = perfect_matching(&compatible, candidates.len());
        self.memo.insert((p, h, h_parent), ok);
        ok
    }
}

/// Kuhn's augmenting-path matching: can every left vertex be matched?
fn perfect_matching(compatible: &[Vec<usize>], right: usize) -> bool {
    fn augment(
        i: usize,
        compatible: &[Vec<usize>],
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for &j in &compatible[i] {
            if !seen[j] {
                seen[j] = true;
                if owner[j].is_none_or(|k| augment(k, compatible, seen, owner)) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    let mut owner = vec![None; right];
    (0..compatible.len()).all(|i| {
        let mut seen = vec![false; right];
        augment(i, compatible, &mut seen, &mut owner)
    })
}

struct Search<'a> {
    host: &'a Adjacency,
    pattern: &'a Adjacency,
    order: Vec<Vertex>,
    parent: Vec<Option<Vertex>>,
    map: Vec<Option<Vertex>>,
    inverse: Vec<Option<Vertex>>,
    prune: Option<TreePrune>,
}

impl Search<'_> {
    fn consistent(&self, p: Vertex, h: Vertex) -> bool {
        if self.inverse[h].is_some() || self.host.degree(h) < self.pattern.degree(p) {
            return false;
        }
        let forward = self.pattern.lists[p]
            .iter()
            .all(|&q| self.map[q].is_none_or(|fq| self.host.adjacent(h, fq)));
        forward
            && self.host.lists[h]
                .iter()
                .all(|&w| self.inverse[w].is_none_or(|q| self.pattern.adjacent(p, q)))
    }

    fn extend(&mut self, i: usize) -> bool {
        if i == self.order.len() {
            return true;
        }
        let p = self.order[i];
        let (candidates, h_parent): (Vec<Vertex>, Vertex) = match self.parent[p] {
            Some(q) => {
                let fq = self.map[q].expect("parents are placed first");
                (self.host.lists[fq].clone(), fq)
            }
            None => ((0..self.host.lists.len()).collect(), NO_PARENT),
        };
        for h in candidates {
            if !self.consistent(p, h) {
                continue;
            }
            if let Some(prune) = self.prune.as_mut() {
                if !prune.feasible(self.host, p, h, h_parent) {
                    continue;
                }
            }
            self.map[p] = Some(h);
            self.inverse[h] = Some(p);
            if self.extend(i + 1) {
                return true;
            }
            self.map[p] = None;
            self.inverse[h] = None;
        }
        false
    }
}

/// Searches for an induced embedding of `pattern` into `host` mapping root
/// to root. Returns a witness on success.
pub fn embeds(host: &RootedGraph, pattern: &RootedGraph) -> Option<Embedding> {
    let k = pattern.vertex_count();
    if k > host.vertex_count() {
        return None;
    }
    let host_adj = Adjacency::of(host);
    let pat_adj = Adjacency::of(pattern);

    // breadth-first order over every component, root component first
    let mut order = Vec::with_capacity(k);
    let mut parent = vec![None; k];
    let mut seen = vec![false; k];
    let starts = std::iter::once(pattern.root).chain(0..k);
    for s in starts {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let first = order.len();
        order.push(s);
        let mut head = first;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &w in &pat_adj.lists[u] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(u);
                    order.push(w);
                }
            }
        }
    }

    let simple_edges: usize = pat_adj.lists.iter().map(Vec::len).sum::<usize>() / 2;
    let is_tree = order.iter().skip(1).all(|&v| parent[v].is_some()) && simple_edges + 1 == k;
    let prune = is_tree.then(|| TreePrune {
        children: (0..k)
            .map(|v| {
                pat_adj.lists[v]
                    .iter()
                    .copied()
                    .filter(|&w| parent[w] == Some(v))
                    .collect()
            })
            .collect(),
        memo: HashMap::new(),
    });

    let mut search = Search {
        host: &host_adj,
        pattern: &pat_adj,
        order,
        parent,
        map: vec![None; k],
        inverse: vec![None; host.vertex_count()],
        prune,
    };

    // the root is pinned
    let (p, h) = (pattern.root, host.root);
    if !search.consistent(p, h) {
        return None;
    }
    if let Some(prune) = search.prune.as_mut() {
        if !prune.feasible(&host_adj, p, h, NO_PARENT) {
            return None;
        }
    }
    search.map[p] = Some(h);
    search.inverse[h] = Some(p);
    if search.extend(1) {
        Some(Embedding {
            map: search.map.into_iter().map(Option::unwrap).collect(),
        })
    } else {
        None
    }
}

/// Independent check of a claimed embedding: root preserved, injective, and
/// neighbour-iff-neighbour over every pair of distinct pattern vertices.
pub fn check_embedding(host: &RootedGraph, pattern: &RootedGraph, map: &[Vertex]) -> bool {
    let k = pattern.vertex_count();
    if map.len() != k || map.get(pattern.root) != Some(&host.root) {
        return false;
    }
    if map.iter().any(|&h| h >= host.vertex_count()) {
        return false;
    }
    let mut images = map.to_vec();
    images.sort_unstable();
    images.dedup();
    if images.len() != k {
        return false;
    }
    (0..k).all(|u| {
        (u + 1..k).all(|v| {
            pattern.graph.is_adjacent(u, v) == host.graph.is_adjacent(map[u], map[v])
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_hat_tree, build_pruned_tree, build_regular_tree, MultiGraph};

    fn rooted(n: usize, edges: &[(usize, usize)], root: usize) -> RootedGraph {
        RootedGraph::new(MultiGraph::from_edges(n, edges.iter().copied()).unwrap(), root).unwrap()
    }

    #[test]
    fn single_vertex_always_embeds() {
        let host = rooted(3, &[(0, 1), (1, 2), (2, 0)], 1);
        let w = embeds(&host, &RootedGraph::single_vertex()).unwrap();
        assert_eq!(w.map, vec![1]);
    }

    #[test]
    fn regular_tree_into_hat_tree() {
        let host = build_hat_tree(3, 2);
        let pattern = build_regular_tree(3, 2);
        let w = embeds(&host, &pattern).expect("T_2 sits inside the hat tree");
        assert!(check_embedding(&host, &pattern, &w.map));
    }

    #[test]
    fn star_does_not_embed_in_triangle() {
        let host = rooted(3, &[(0, 1), (1, 2), (2, 0)], 0);
        assert!(embeds(&host, &build_regular_tree(3, 1)).is_none());
        // degree 2 star needs two non-adjacent neighbours
        assert!(embeds(&host, &build_regular_tree(2, 1)).is_none());
        // a single edge is fine
        assert!(embeds(&host, &build_regular_tree(1, 1)).is_some());
    }

    #[test]
    fn induced_condition_rejects_chords() {
        // path 0-1-2 with chord 0-2 is a triangle: P_3 rooted at an end does
        // not embed, though it is a subgraph
        let tri = rooted(3, &[(0, 1), (1, 2), (0, 2)], 0);
        let path = rooted(3, &[(0, 1), (1, 2)], 0);
        assert!(embeds(&tri, &path).is_none());
    }

    #[test]
    fn parallel_edges_and_loops_do_not_change_neighbourhood() {
        let host = rooted(3, &[(0, 1), (0, 1), (1, 1), (1, 2)], 0);
        let path = rooted(3, &[(0, 1), (1, 2)], 0);
        assert!(embeds(&host, &path).is_some());
    }

    #[test]
    fn pruned_trees_embed_in_full_tree() {
        let host = build_regular_tree(3, 3);
        for e in [0, 5, 30] {
            let p = build_pruned_tree(3, 3, e).unwrap();
            let w = embeds(&host, &p).unwrap();
            assert!(check_embedding(&host, &p, &w.map));
        }
        // but a full T_3 does not embed in a pruned tree
        let pruned = build_pruned_tree(3, 3, 0).unwrap();
        assert!(embeds(&pruned, &host).is_none());
    }

    #[test]
    fn disconnected_pattern() {
        let host = rooted(4, &[(0, 1), (2, 3)], 0);
        let pattern = rooted(3, &[(0, 1)], 0);
        let w = embeds(&host, &pattern).unwrap();
        assert!(check_embedding(&host, &pattern, &w.map));
        assert!(w.map[2] >= 2);
    }

    #[test]
    fn checker_rejects_bad_maps() {
        let host = build_hat_tree(3, 1);
        let pattern = build_regular_tree(3, 1);
        assert!(check_embedding(&host, &pattern, &[0, 1, 2, 3]));
        assert!(!check_embedding(&host, &pattern, &[1, 0, 2, 3]));
        assert!(!check_embedding(&host, &pattern, &[0, 1, 1, 3]));
        assert!(!check_embedding(&host, &pattern, &[0, 1, 2]));
    }
}
