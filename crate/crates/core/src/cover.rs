//! Truncated universal covers and the fiber-constrained contact process.
//!
//! Nodes of the cover of `G` based at `x` are the non-backtracking paths
//! from `x` (consecutive oriented edges never share their unoriented edge),
//! and the fiber map `psi` sends a path to its end vertex. The cover is cut
//! at depth `R`: depth-`R` nodes are leaves. Every report built on a
//! truncated tree therefore records `R` and how often a run reached it.

use rayon::prelude::*;

use crate::cp::{ContactEngine, RecordOptions, Trajectory};
use crate::error::{check_rate, check_vertex, Error, Result};
use crate::graph::{build_hat_tree, depths_from, MultiGraph, OrientedEdge, Vertex};
use crate::rng::{derive_seed, replica_rng};
use crate::stats::proportion_se;
use rand::Rng;

/// Node-count ceiling used by [`build_cover`].
pub const DEFAULT_NODE_CAP: usize = 5_000_000;

/// One-sided z-score above which a domination report flags a violation.
pub const VIOLATION_Z: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CoverTree {
    base: Vertex,
    depth: usize,
    tree: MultiGraph,
    parent: Vec<Option<usize>>,
    via: Vec<Option<OrientedEdge>>,
    node_depth: Vec<usize>,
    fiber: Vec<Vertex>,
}

/// Cover of `g` based at `x`, truncated at depth `depth`.
pub fn build_cover(g: &MultiGraph, x: Vertex, depth: usize) -> Result<CoverTree> {
    build_cover_capped(g, x, depth, DEFAULT_NODE_CAP)
}

pub fn build_cover_capped(g: &MultiGraph, x: Vertex, depth: usize, cap: usize) -> Result<CoverTree> {
    check_vertex(x, g.vertex_count())?;
    let mut c = CoverTree {
        base: x,
        depth,
        tree: MultiGraph::new(1),
        parent: vec![None],
        via: vec![None],
        node_depth: vec![0],
        fiber: vec![x],
    };
    let mut head = 0;
    while head < c.fiber.len() {
        let node = head;
        head += 1;
        if c.node_depth[node] == depth {
            continue;
        }
        let v = c.fiber[node];
        for &e in g.out_edges(v) {
            if c.via[node].is_some_and(|prev| prev.edge() == e.edge()) {
                continue;
            }
            if c.fiber.len() == cap {
                return Err(Error::InvalidInput(format!(
                    "cover of depth {depth} exceeds the node cap of {cap}"
                )));
            }
            let child = c.tree.add_vertex();
            c.tree.add_edge(node, child)?;
            c.parent.push(Some(node));
            c.via.push(Some(e));
            c.node_depth.push(c.node_depth[node] + 1);
            c.fiber.push(g.head(e));
        }
    }
    Ok(c)
}

impl CoverTree {
    pub fn base(&self) -> Vertex {
        self.base
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn node_count(&self) -> usize {
        self.fiber.len()
    }

    /// The cover as a graph; node 0 is the empty path, and edge `i` joins
    /// node `i + 1` to its parent.
    pub fn tree(&self) -> &MultiGraph {
        &self.tree
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    /// Last oriented edge of the path, `None` for the root.
    pub fn via(&self, node: usize) -> Option<OrientedEdge> {
        self.via[node]
    }

    pub fn node_depth(&self, node: usize) -> usize {
        self.node_depth[node]
    }

    pub fn node_depths(&self) -> &[usize] {
        &self.node_depth
    }

    /// `psi` for every node.
    pub fn fibers(&self) -> &[Vertex] {
        &self.fiber
    }

    pub fn psi(&self, node: usize) -> Vertex {
        self.fiber[node]
    }

    /// The oriented edges of the path, first step first.
    pub fn path(&self, mut node: usize) -> Vec<OrientedEdge> {
        let mut out = Vec::with_capacity(self.node_depth[node]);
        while let (Some(e), Some(p)) = (self.via[node], self.parent[node]) {
            out.push(e);
            node = p;
        }
        out.reverse();
        out
    }

    /// Re-checks the structural properties against `g`: the cover is a tree,
    /// paths are non-backtracking and consistent with `psi`, and at every
    /// node below the truncation depth the incident cover edges map
    /// bijectively onto the oriented edges leaving `psi(node)`. A node
    /// entered through a loop has no cover edge for that loop orientation,
    /// so the bijection is only claimed for the remaining ones; on loopless
    /// graphs it is exact.
    pub fn check(&self, g: &MultiGraph) -> Result<()> {
        let fail = |m: String| Err(Error::Invariant(m));
        if !self.tree.is_forest() || !self.tree.is_connected() {
            return fail("cover is not a tree".into());
        }
        if self.tree.max_degree() > g.max_degree().max(1) && self.node_count() > 1 {
            return fail("cover degree exceeds the base degree".into());
        }
        let mut images: Vec<Vec<OrientedEdge>> = vec![Vec::new(); self.node_count()];
        for node in 1..self.node_count() {
            let p = self.parent[node].expect("non-root has a parent");
            let e = self.via[node].expect("non-root has a last edge");
            if g.tail(e) != self.fiber[p] || g.head(e) != self.fiber[node] {
                return fail(format!("node {node} is not a path step from its parent"));
            }
            if self.via[p].is_some_and(|q| q.edge() == e.edge()) {
                return fail(format!("node {node} backtracks"));
            }
            images[p].push(e);
            images[node].push(e.flip());
        }
        for (node, imgs) in images.iter_mut().enumerate() {
            if self.node_depth[node] == self.depth {
                continue;
            }
            let v = self.fiber[node];
            let mut expected: Vec<OrientedEdge> = g.out_edges(v).to_vec();
            if let Some(e) = self.via[node].filter(|e| g.is_loop(e.edge())) {
                expected.retain(|&f| f != e);
            }
            imgs.sort_unstable();
            expected.sort_unstable();
            if *imgs != expected {
                return fail(format!(
                    "incident edges of node {node} do not map bijectively onto those of vertex {v}"
                ));
            }
        }
        Ok(())
    }

    /// Shallowest node of the fiber of `v`, if it lies within the depth.
    pub fn shallowest_in_fiber(&self, v: Vertex) -> Option<usize> {
        self.fiber.iter().position(|&f| f == v)
    }

    /// Lift of a vertex set: one node per vertex, the shallowest of its fiber.
    pub fn lift(&self, set: &[Vertex]) -> Result<FiberConfiguration> {
        let mut nodes = Vec::with_capacity(set.len());
        for &v in set {
            let node = self.shallowest_in_fiber(v).ok_or_else(|| {
                Error::InvalidInput(format!("vertex {v} has no node within depth {}", self.depth))
            })?;
            nodes.push(node);
        }
        nodes.sort_unstable();
        nodes.dedup();
        Ok(FiberConfiguration { nodes })
    }
}

impl CoverTree {
    /// Checks `dist_cover(a, b) >= dist_G(psi(a), psi(b))` for every pair of
    /// nodes. Quadratic in the node count.
    pub fn check_distances(&self, g: &MultiGraph) -> Result<()> {
        let n = g.vertex_count();
        let mut base = vec![vec![usize::MAX; n]; n];
        for (u, row) in base.iter_mut().enumerate() {
            for (v, d) in g.distances_from(u)?.into_iter().enumerate() {
                row[v] = d.unwrap_or(usize::MAX);
            }
        }
        for a in 0..self.node_count() {
            let dist = self.tree.distances_from(a)?;
            for (b, d) in dist.into_iter().enumerate() {
                let d = d.expect("cover is connected");
                if d < base[self.fiber[a]][self.fiber[b]] {
                    return Err(Error::Invariant(format!(
                        "nodes {a} and {b} are closer in the cover than their fibers in the graph"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A set of occupied cover nodes. Membership in `Omega_T` (at most one
/// occupied node per fiber) is checked where it matters.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FiberConfiguration {
    pub nodes: Vec<usize>,
}

impl FiberConfiguration {
    pub fn new(nodes: Vec<usize>) -> Self {
        FiberConfiguration { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Whether no fiber holds two occupied nodes.
    pub fn is_admissible(&self, c: &CoverTree) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.nodes
            .iter()
            .all(|&n| n < c.node_count() && seen.insert(c.psi(n)))
    }
}

/// `pi(zeta)`: the vertices whose fiber is occupied.
pub fn project(c: &CoverTree, zeta: &FiberConfiguration) -> Result<Vec<Vertex>> {
    let mut out = Vec::with_capacity(zeta.len());
    for &n in &zeta.nodes {
        if n >= c.node_count() {
            return Err(Error::InvalidInput(format!("node {n} is not in the cover")));
        }
        out.push(c.psi(n));
    }
    out.sort_unstable();
    let before = out.len();
    out.dedup();
    if out.len() != before {
        return Err(Error::Invariant(
            "configuration occupies some fiber twice".into(),
        ));
    }
    Ok(out)
}

/// Contact process on the cover with every birth into an occupied fiber
/// suppressed. Suppressed births still consume a draw. Distances in the
/// returned trajectory are node depths, and reaching depth `R` counts as
/// touching the boundary.
pub fn constrained_cp<R: Rng + ?Sized>(
    c: &CoverTree,
    lambda: f64,
    initial: &FiberConfiguration,
    horizon: f64,
    opts: &RecordOptions,
    rng: &mut R,
) -> Result<Trajectory> {
    if !initial.is_admissible(c) {
        return Err(Error::InvalidInput(
            "initial configuration is not in Omega_T".into(),
        ));
    }
    let mut engine = ContactEngine::new(c.tree(), lambda)?
        .with_fibers(c.fibers())?
        .with_labels(c.node_depths(), Some(c.depth()))?;
    engine.run(&initial.nodes, horizon, opts, rng)
}

#[derive(Debug, Clone, PartialEq, serde::Deserialize, serde::Serialize)]
pub struct DominationParams {
    /// Tree side is the ball of radius `truncation_depth` in the
    /// `(d+1)`-regular tree.
    pub d: usize,
    pub lambda: f64,
    pub truncation_depth: usize,
    /// Tree-side sources are placed within this depth of the root.
    pub placement_depth: usize,
    pub replicas: u64,
    pub t_grid: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TailPoint {
    /// Time for a survival tail, radius for a reach tail.
    pub at: f64,
    pub graph_tail: f64,
    pub tree_tail: f64,
    /// `(graph - tree) / se`; large positive values contradict domination.
    pub z: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DominationReport {
    pub d: usize,
    pub lambda: f64,
    pub truncation_depth: usize,
    pub replicas: u64,
    pub tree_sources: Vec<Vertex>,
    pub points: Vec<TailPoint>,
    pub violations: usize,
    /// Fraction of tree runs that infected a depth-`R` vertex.
    pub tree_contamination: f64,
    /// Fraction of graph runs still alive at the last grid time.
    pub graph_censored: f64,
    pub caveat: String,
}

const TRUNCATION_CAVEAT: &str = "tree side is truncated: depth-R vertices are leaves, which \
biases tree tails downward; runs reaching depth R are counted in tree_contamination";

fn tail_point(at: f64, graph_hits: u64, tree_hits: u64, replicas: u64) -> TailPoint {
    let pg = graph_hits as f64 / replicas as f64;
    let pt = tree_hits as f64 / replicas as f64;
    let se = (proportion_se(graph_hits, replicas).powi(2) + proportion_se(tree_hits, replicas).powi(2)).sqrt();
    let z = if se > 0.0 {
        (pg - pt) / se
    } else if pg > pt {
        f64::INFINITY
    } else {
        0.0
    };
    TailPoint {
        at,
        graph_tail: pg,
        tree_tail: pt,
        z,
        violation: z > VIOLATION_Z,
    }
}

/// Greedy max-min placement of `count` vertices within `placement_depth`
/// of the root: start at the root, then repeatedly add the candidate
/// farthest from everything chosen (lowest index on ties).
pub fn spread_sources(tree: &MultiGraph, depths: &[usize], count: usize, placement_depth: usize) -> Result<Vec<Vertex>> {
    let candidates: Vec<Vertex> = (0..tree.vertex_count())
        .filter(|&v| depths[v] <= placement_depth)
        .collect();
    if count > candidates.len() {
        return Err(Error::InvalidInput(format!(
            "cannot place {count} sources within depth {placement_depth}"
        )));
    }
    let mut chosen = Vec::with_capacity(count);
    let mut nearest = vec![usize::MAX; candidates.len()];
    let mut next = 0usize;
    for _ in 0..count {
        let v = candidates[next];
        chosen.push(v);
        let reach = tree.within(v, 2 * placement_depth)?;
        let dist: std::collections::HashMap<Vertex, usize> = reach.into_iter().collect();
        for (i, &c) in candidates.iter().enumerate() {
            nearest[i] = nearest[i].min(dist.get(&c).copied().unwrap_or(usize::MAX));
        }
        next = (0..candidates.len())
            .filter(|&i| nearest[i] > 0)
            .max_by(|&a, &b| nearest[a].cmp(&nearest[b]).then(b.cmp(&a)))
            .unwrap_or(0);
    }
    Ok(chosen)
}

struct TreeSide {
    graph: MultiGraph,
    depths: Vec<usize>,
}

fn tree_side(d: usize, depth: usize) -> TreeSide {
    let t = build_hat_tree(d, depth);
    let depths = depths_from(&t);
    TreeSide { graph: t.graph, depths }
}

fn check_domination_input(g: &MultiGraph, p: &DominationParams) -> Result<()> {
    check_rate("lambda", p.lambda)?;
    if g.max_degree() > p.d + 1 {
        return Err(Error::InvalidInput(format!(
            "maximum degree {} exceeds d + 1 = {}",
            g.max_degree(),
            p.d + 1
        )));
    }
    if p.d < 2 {
        return Err(Error::InvalidInput("domination checks need d >= 2".into()));
    }
    Ok(())
}

/// Runs `replicas` copies in parallel and returns the trajectories' summary
/// via `keep`.
#[allow(clippy::too_many_arguments)]
fn batch<T: Send>(
    graph: &MultiGraph,
    lambda: f64,
    labels: Option<(&[usize], usize)>,
    initial: &[Vertex],
    horizon: f64,
    replicas: u64,
    seed: u64,
    keep: impl Fn(&Trajectory) -> T + Sync,
) -> Result<Vec<T>> {
    let opts = RecordOptions::default();
    (0..replicas)
        .into_par_iter()
        .map_init(
            || {
                let e = ContactEngine::new(graph, lambda).expect("rate checked");
                match labels {
                    Some((l, b)) => e.with_labels(l, Some(b)).expect("label count"),
                    None => e,
                }
            },
            |engine, i| {
                let traj = engine.run(initial, horizon, &opts, &mut replica_rng(seed, i))?;
                Ok(keep(&traj))
            },
        )
        .collect()
}

/// Compares `P[tau^A_G > t]` with `P[tau^B_T > t]` on the truncated
/// `(d+1)`-regular tree, `|B| = |A|` spread out by [`spread_sources`].
/// A large positive z at some `t` would contradict domination.
pub fn domination_check(g: &MultiGraph, initial: &[Vertex], p: &DominationParams) -> Result<DominationReport> {
    check_domination_input(g, p)?;
    let mut a = initial.to_vec();
    a.sort_unstable();
    a.dedup();
    for &v in &a {
        check_vertex(v, g.vertex_count())?;
    }
    if p.t_grid.is_empty() || p.t_grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidInput("t grid must be non-empty, finite and >= 0".into()));
    }
    let horizon = p.t_grid.iter().copied().fold(0.0, f64::max);
    let side = tree_side(p.d, p.truncation_depth);
    let sources = spread_sources(&side.graph, &side.depths, a.len(), p.placement_depth)?;

    let graph_taus = batch(g, p.lambda, None, &a, horizon, p.replicas, derive_seed(p.seed, &[0]), |t| {
        t.extinction
    })?;
    let tree_runs = batch(
        &side.graph,
        p.lambda,
        Some((&side.depths, p.truncation_depth)),
        &sources,
        horizon,
        p.replicas,
        derive_seed(p.seed, &[1]),
        |t| (t.extinction, t.touched_boundary),
    )?;

    let alive = |tau: Option<f64>, t: f64| tau.is_none_or(|s| s > t);
    let points: Vec<TailPoint> = p
        .t_grid
        .iter()
        .map(|&t| {
            let gh = graph_taus.iter().filter(|&&tau| alive(tau, t)).count() as u64;
            let th = tree_runs.iter().filter(|&&(tau, _)| alive(tau, t)).count() as u64;
            tail_point(t, gh, th, p.replicas)
        })
        .collect();
    let replicas = p.replicas.max(1) as f64;
    Ok(DominationReport {
        d: p.d,
        lambda: p.lambda,
        truncation_depth: p.truncation_depth,
        replicas: p.replicas,
        tree_sources: sources,
        violations: points.iter().filter(|q| q.violation).count(),
        points,
        tree_contamination: tree_runs.iter().filter(|r| r.1).count() as f64 / replicas,
        graph_censored: graph_taus.iter().filter(|t| t.is_none()).count() as f64 / replicas,
        caveat: TRUNCATION_CAVEAT.into(),
    })
}

/// Compares `P[kappa^x_G > k]` with `P[kappa^o_T > k]` for every
/// `k < truncation_depth`. Runs continue until extinction; the time grid of
/// `p` is not used.
pub fn kappa_domination_check(g: &MultiGraph, x: Vertex, p: &DominationParams) -> Result<DominationReport> {
    check_domination_input(g, p)?;
    check_vertex(x, g.vertex_count())?;
    let labels = crate::cp::distance_labels(g, x)?;
    let side = tree_side(p.d, p.truncation_depth);
    let graph_kappa = batch(
        g,
        p.lambda,
        Some((&labels, usize::MAX)),
        &[x],
        f64::INFINITY,
        p.replicas,
        derive_seed(p.seed, &[2]),
        |t| t.kappa.unwrap_or(0),
    )?;
    let tree_runs = batch(
        &side.graph,
        p.lambda,
        Some((&side.depths, p.truncation_depth)),
        &[0],
        f64::INFINITY,
        p.replicas,
        derive_seed(p.seed, &[3]),
        |t| (t.kappa.unwrap_or(0), t.touched_boundary),
    )?;
    let points: Vec<TailPoint> = (0..p.truncation_depth)
        .map(|k| {
            let gh = graph_kappa.iter().filter(|&&kap| kap > k).count() as u64;
            let th = tree_runs.iter().filter(|&&(kap, _)| kap > k).count() as u64;
            tail_point(k as f64, gh, th, p.replicas)
        })
        .collect();
    let replicas = p.replicas.max(1) as f64;
    Ok(DominationReport {
        d: p.d,
        lambda: p.lambda,
        truncation_depth: p.truncation_depth,
        replicas: p.replicas,
        tree_sources: vec![0],
        violations: points.iter().filter(|q| q.violation).count(),
        points,
        tree_contamination: tree_runs.iter().filter(|r| r.1).count() as f64 / replicas,
        graph_censored: 0.0,
        caveat: TRUNCATION_CAVEAT.into(),
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ProjectionPoint {
    pub t: f64,
    /// `P[extinct by t]` for the process on the graph.
    pub direct: f64,
    /// The same for the projected constrained process on the cover.
    pub projected: f64,
    /// Two-sided pooled z statistic of the difference.
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ProjectionReport {
    pub base: Vertex,
    pub lambda: f64,
    pub depth: usize,
    pub nodes: usize,
    pub replicas: u64,
    pub points: Vec<ProjectionPoint>,
    /// Fraction of cover runs that reached depth `R`.
    pub contamination: f64,
}

/// Compares extinction-by-`t` frequencies of the process on `g` from `{x}`
/// and of the constrained process on the depth-`depth` cover from the root.
/// The two agree in law until the cover run reaches the truncation depth.
pub fn projection_check(
    g: &MultiGraph,
    x: Vertex,
    lambda: f64,
    depth: usize,
    replicas: u64,
    t_grid: &[f64],
    seed: u64,
) -> Result<ProjectionReport> {
    check_rate("lambda", lambda)?;
    if t_grid.is_empty() || t_grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidInput("t grid must be non-empty, finite and >= 0".into()));
    }
    let c = build_cover(g, x, depth)?;
    let horizon = t_grid.iter().copied().fold(0.0, f64::max);
    let direct = batch(g, lambda, None, &[x], horizon, replicas, derive_seed(seed, &[4]), |t| t.extinction)?;
    let opts = RecordOptions::default();
    let lifted: Vec<(Option<f64>, bool)> = (0..replicas)
        .into_par_iter()
        .map_init(
            || {
                ContactEngine::new(c.tree(), lambda)
                    .and_then(|e| e.with_fibers(c.fibers()))
                    .and_then(|e| e.with_labels(c.node_depths(), Some(depth)))
                    .expect("cover is consistent")
            },
            |engine, i| {
                let t = engine.run(&[0], horizon, &opts, &mut replica_rng(derive_seed(seed, &[5]), i))?;
                Ok((t.extinction, t.touched_boundary))
            },
        )
        .collect::<Result<_>>()?;
    let dead = |tau: Option<f64>, t: f64| tau.is_some_and(|s| s <= t);
    let points = t_grid
        .iter()
        .map(|&t| {
            let a = direct.iter().filter(|&&tau| dead(tau, t)).count() as u64;
            let b = lifted.iter().filter(|r| dead(r.0, t)).count() as u64;
            ProjectionPoint {
                t,
                direct: a as f64 / replicas as f64,
                projected: b as f64 / replicas as f64,
                z: crate::stats::two_proportion_z(a, replicas, b, replicas),
            }
        })
        .collect();
    Ok(ProjectionReport {
        base: x,
        lambda,
        depth,
        nodes: c.node_count(),
        replicas,
        points,
        contamination: lifted.iter().filter(|r| r.1).count() as f64 / replicas.max(1) as f64,
    })
}
