use rand::Rng;

use super::prepared::{build_neighbourhoods_first, is_r_prepared, prepared_subset, PreparedReport};
use super::{constants, Witness};
use crate::configmodel::{complete, fresh_semigraph, HalfEdge, LowestFirst, SemiGraph};
use crate::error::{check_vertex, Error, Result};
use crate::graph::Vertex;

/// What to do with a seed set that is not `r`-prepared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreparedMode {
    /// Refuse to run.
    #[default]
    Strict,
    /// Keep the greedy prepared subset (see [`prepared_subset`]) and run the
    /// passes from it.
    Restrict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seed {
    pub vertex: Vertex,
    /// Vertices at distance exactly `r`, in breadth-first order.
    pub buds: Vec<Vertex>,
    /// The `r`-neighbourhood as built before the passes, seed first.
    pub ball_vertices: Vec<Vertex>,
    pub ball_edges: Vec<usize>,
    pub used: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CollisionKind {
    Short,
    Long,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Collision {
    pub kind: CollisionKind,
    /// Step-1 iteration (1-based) at which it was found.
    pub step: usize,
    pub vertex: Vertex,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct PassOutcome {
    pub seed: Vertex,
    pub bud: Vertex,
    pub success: bool,
    pub step1_iterations: usize,
    pub collisions: Vec<Collision>,
    /// Explored vertices `V̄`, bud first.
    pub explored: Vec<Vertex>,
    /// Explored edges `Ē`.
    pub explored_edges: Vec<usize>,
    pub half_edges_consumed: usize,
    /// Active buds other than `x` that went quiet during the pass.
    pub quieted_buds: usize,
    pub largest_frontier: usize,
    pub fresh_after: usize,
    #[serde(skip)]
    pub witness: Option<Witness>,
}

impl PassOutcome {
    pub fn short_collisions(&self) -> usize {
        self.collisions.iter().filter(|c| c.kind == CollisionKind::Short).count()
    }

    pub fn long_collisions(&self) -> usize {
        self.collisions.iter().filter(|c| c.kind == CollisionKind::Long).count()
    }
}

/// The exploration state after the neighbourhoods of the seeds are built:
/// the shared semigraph, the fresh set and the seeds with their buds.
#[derive(Debug, Clone)]
pub struct PassState {
    semi: SemiGraph,
    d: usize,
    r: usize,
    ell: usize,
    original_seed_count: usize,
    report: PreparedReport,
    seeds: Vec<Seed>,
    fresh: Vec<bool>,
    fresh_count: usize,
    initial_fresh: usize,
    passes: usize,
    buds_initially_active: bool,
}

impl PassState {
    /// `semi` must have the `r`-neighbourhood of `w` fully built (no
    /// unmatched half-edge within distance `r - 1` of `w`).
    pub fn new(semi: SemiGraph, w: &[Vertex], r: usize, ell: usize, mode: PreparedMode) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidInput("passes need r >= 1".into()));
        }
        let d = semi.half_edges_per_vertex() - 1;
        if d < 1 {
            return Err(Error::InvalidInput("passes need d >= 1".into()));
        }
        let g = semi.graph();
        for &v in w {
            check_vertex(v, g.vertex_count())?;
            for (u, _) in g.within(v, r - 1)? {
                if semi.remaining(u) > 0 {
                    return Err(Error::InvalidState(format!(
                        "vertex {u} near seed {v} still has unmatched half-edges"
                    )));
                }
            }
        }
        let report = is_r_prepared(g, w, r)?;
        let chosen = match mode {
            PreparedMode::Strict if !report.prepared => {
                return Err(Error::InvalidInput(format!(
                    "seed set is not {r}-prepared (cyclic: {:?}, overlap: {:?})",
                    report.first_cyclic, report.first_overlap
                )))
            }
            PreparedMode::Strict => report.seeds.clone(),
            PreparedMode::Restrict => prepared_subset(g, w, r)?,
        };
        let bud_total = (d + 1) * d.pow(r as u32 - 1);
        let mut seeds = Vec::with_capacity(chosen.len());
        let mut buds_initially_active = true;
        for v in chosen {
            let ball = g.ball(v, r)?;
            let buds: Vec<Vertex> = ball
                .vertices
                .iter()
                .zip(&ball.distances)
                .filter_map(|(&u, &dist)| (dist == r).then_some(u))
                .collect();
            if buds.len() != bud_total {
                return Err(Error::Invariant(format!(
                    "seed {v} has {} buds, expected {bud_total}",
                    buds.len()
                )));
            }
            buds_initially_active &= buds.iter().all(|&b| semi.remaining(b) == d);
            let inside: std::collections::HashSet<Vertex> = ball.vertices.iter().copied().collect();
            let mut ball_edges: Vec<usize> = ball
                .vertices
                .iter()
                .flat_map(|&u| g.out_edges(u).iter().map(|e| e.edge()))
                .filter(|&e| {
                    let (a, b) = g.edges()[e];
                    inside.contains(&a) && inside.contains(&b)
                })
                .collect();
            ball_edges.sort_unstable();
            ball_edges.dedup();
            seeds.push(Seed {
                vertex: v,
                buds,
                ball_vertices: ball.vertices,
                ball_edges,
                used: false,
            });
        }
        let fresh: Vec<bool> = (0..semi.vertex_count())
            .map(|v| semi.remaining(v) == d + 1)
            .collect();
        let fresh_count = fresh.iter().filter(|&&f| f).count();
        Ok(PassState {
            semi,
            d,
            r,
            ell,
            original_seed_count: report.seeds.len(),
            report,
            seeds,
            fresh,
            fresh_count,
            initial_fresh: fresh_count,
            passes: 0,
            buds_initially_active,
        })
    }

    pub fn semigraph(&self) -> &SemiGraph {
        &self.semi
    }

    pub fn into_semigraph(self) -> SemiGraph {
        self.semi
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn report(&self) -> &PreparedReport {
        &self.report
    }

    pub fn seeds(&self) -> &[Seed] {
        &self.seeds
    }

    pub fn fresh_count(&self) -> usize {
        self.fresh_count
    }

    pub fn initial_fresh(&self) -> usize {
        self.initial_fresh
    }

    pub fn is_fresh(&self, v: Vertex) -> bool {
        self.fresh[v]
    }

    pub fn passes(&self) -> usize {
        self.passes
    }

    /// Whether every bud had `d` half-edges when the passes began.
    pub fn buds_initially_active(&self) -> bool {
        self.buds_initially_active
    }

    pub fn is_bud_active(&self, b: Vertex) -> bool {
        self.semi.remaining(b) == self.d
    }

    pub fn is_seed_active(&self, i: usize) -> bool {
        self.seeds[i].buds.iter().any(|&b| self.is_bud_active(b))
    }

    /// Lowest-index seed that is active and not used yet.
    pub fn next_seed(&self) -> Option<usize> {
        (0..self.seeds.len()).find(|&i| !self.seeds[i].used && self.is_seed_active(i))
    }

    fn all_bud_flags(&self) -> Vec<bool> {
        self.seeds
            .iter()
            .flat_map(|s| s.buds.iter().map(|&b| self.is_bud_active(b)))
            .collect()
    }

    /// One Pass from seed number `index`. Every formed edge stays in the
    /// shared semigraph whatever the verdict. The structural bounds of the
    /// construction are checked as the pass runs and reported as
    /// [`Error::Invariant`] if broken.
    pub fn run_pass<R: Rng + ?Sized>(&mut self, index: usize, rng: &mut R) -> Result<PassOutcome> {
        let seed = self
            .seeds
            .get(index)
            .ok_or_else(|| Error::InvalidInput(format!("no seed number {index}")))?;
        if seed.used {
            return Err(Error::InvalidInput(format!("seed {} was already used", seed.vertex)));
        }
        let rho = seed.vertex;
        let x = *seed
            .buds
            .iter()
            .filter(|&&b| self.is_bud_active(b))
            .min()
            .ok_or_else(|| Error::InvalidInput(format!("seed {rho} is not active")))?;
        let k = constants(self.d, self.r, self.ell);
        let frontier_cap = self.d.pow(self.ell.max(1) as u32);
        let before = self.all_bud_flags();
        let unmatched_before = self.semi.unmatched_count();

        let mut hbar: Vec<HalfEdge> = self.semi.unmatched_at(x).collect();
        let mut explored = vec![x];
        let mut depth = std::collections::HashMap::from([(x, 0usize)]);
        let mut explored_edges = Vec::new();
        let mut collisions = Vec::new();
        let mut steps = 0usize;
        let mut largest_frontier = hbar.len();
        let success = loop {
            let Some(pos) = hbar
                .iter()
                .enumerate()
                .filter(|(_, &h)| depth[&self.semi.vertex_of(h)] < self.ell)
                .min_by_key(|(_, &h)| h)
                .map(|(i, _)| i)
            else {
                break true;
            };
            let h = hbar[pos];
            steps += 1;
            if steps as u64 > k.c_ell {
                return Err(Error::Invariant(format!(
                    "pass from seed {rho} exceeded {} step-1 iterations",
                    k.c_ell
                )));
            }
            let h2 = self.semi.draw_partner(h, rng)?;
            let v2 = self.semi.vertex_of(h2);
            if !self.fresh[v2] {
                let kind = if depth.contains_key(&v2) {
                    CollisionKind::Short
                } else {
                    CollisionKind::Long
                };
                collisions.push(Collision { kind, step: steps, vertex: v2 });
                let fatal = kind == CollisionKind::Short
                    || collisions.iter().filter(|c| c.kind == CollisionKind::Long).count() == 2;
                if fatal {
                    self.semi.join(h, h2)?;
                    hbar.swap_remove(pos);
                    break false;
                }
                if hbar.contains(&h2) {
                    return Err(Error::Invariant("partner half-edge lies in the frontier".into()));
                }
                self.semi.join(h, h2)?;
                hbar.swap_remove(pos);
            } else {
                if hbar.contains(&h2) {
                    return Err(Error::Invariant("partner half-edge lies in the frontier".into()));
                }
                let parent_depth = depth[&self.semi.vertex_of(h)];
                let formed = self.semi.join(h, h2)?;
                explored.push(v2);
                explored_edges.push(formed.edge);
                depth.insert(v2, parent_depth + 1);
                hbar.swap_remove(pos);
                self.fresh[v2] = false;
                self.fresh_count -= 1;
                // the new vertex's remaining half-edges extend the frontier
                // while it sits above depth ell
                if parent_depth + 1 < self.ell {
                    hbar.extend(self.semi.unmatched_at(v2));
                }
            }
            largest_frontier = largest_frontier.max(hbar.len());
            if hbar.len() > frontier_cap.max(self.d) {
                return Err(Error::Invariant(format!(
                    "frontier holds {} half-edges, cap {}",
                    hbar.len(),
                    frontier_cap
                )));
            }
        };

        self.seeds[index].used = true;
        self.passes += 1;

        let after = self.all_bud_flags();
        let mut quieted = 0;
        for ((seed, b), (&was, &now)) in self
            .seeds
            .iter()
            .flat_map(|s| s.buds.iter().map(move |&b| (s.vertex, b)))
            .zip(before.iter().zip(&after))
        {
            if now && !was {
                return Err(Error::Invariant(format!("bud {b} of seed {seed} became active again")));
            }
            if was && !now && b != x {
                quieted += 1;
            }
        }
        if quieted > 2 {
            return Err(Error::Invariant(format!(
                "pass from seed {rho} quieted {quieted} other buds"
            )));
        }
        self.check_fresh_floor()?;

        let witness = success.then(|| {
            let s = &self.seeds[index];
            let mut vertices = s.ball_vertices.clone();
            vertices.extend(explored.iter().skip(1));
            let mut edges = s.ball_edges.clone();
            edges.extend(&explored_edges);
            Witness {
                seed: rho,
                anchor: x,
                vertices,
                edges,
                tree_edges: explored_edges.clone(),
            }
        });
        Ok(PassOutcome {
            seed: rho,
            bud: x,
            success,
            step1_iterations: steps,
            collisions,
            explored,
            explored_edges,
            half_edges_consumed: unmatched_before - self.semi.unmatched_count(),
            quieted_buds: quieted,
            largest_frontier,
            fresh_after: self.fresh_count,
            witness,
        })
    }

    /// The fresh-vertex floors: `n - c_{r,l} |W|` for the original seed set,
    /// and the sharper `F_0 - c_l * passes` from the fresh count `F_0` left
    /// by the neighbourhood phase. The fresh flags are also re-derived from
    /// the half-edge counts.
    pub fn check_fresh_floor(&self) -> Result<()> {
        let k = constants(self.d, self.r, self.ell);
        let n = self.semi.vertex_count() as i128;
        let w = self.original_seed_count as i128;
        let fresh = self.fresh_count as i128;
        if fresh < n - k.c_r_ell as i128 * w {
            return Err(Error::Invariant(format!("fresh count {fresh} below n - c_(r,l)|W|")));
        }
        if (self.initial_fresh as i128) < n - k.c_bar_r as i128 * w {
            return Err(Error::Invariant("neighbourhood phase used too many vertices".into()));
        }
        if fresh < self.initial_fresh as i128 - k.c_ell as i128 * self.passes as i128 {
            return Err(Error::Invariant(format!(
                "fresh count {fresh} below F_0 - c_l * passes"
            )));
        }
        let recount = (0..self.semi.vertex_count())
            .filter(|&v| self.semi.remaining(v) == self.d + 1)
            .count();
        if recount != self.fresh_count
            || (0..self.semi.vertex_count()).any(|v| self.fresh[v] != (self.semi.remaining(v) == self.d + 1))
        {
            return Err(Error::Invariant("fresh flags disagree with half-edge counts".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ExtractionStats {
    pub seeds_offered: usize,
    pub seeds_prepared: usize,
    pub passes: usize,
    pub successes: usize,
    pub short_collisions: usize,
    pub long_collisions: usize,
    /// Failures caused by a second long collision.
    pub double_long_failures: usize,
    pub step1_iterations: usize,
    pub target: usize,
    pub target_met: bool,
    pub buds_initially_active: bool,
    pub initial_fresh: usize,
    pub final_fresh: usize,
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub witnesses: Vec<Witness>,
    pub outcomes: Vec<PassOutcome>,
    pub stats: ExtractionStats,
}

/// Runs passes from the lowest unused active seed until `target` passes
/// have succeeded or no seed is left. Pass `usize::MAX` to exhaust the seeds.
pub fn extract_good_subset<R: Rng + ?Sized>(
    state: &mut PassState,
    target: usize,
    rng: &mut R,
) -> Result<Extraction> {
    let mut witnesses = Vec::new();
    let mut outcomes = Vec::new();
    while witnesses.len() < target {
        let Some(i) = state.next_seed() else { break };
        let out = state.run_pass(i, rng)?;
        if let Some(w) = &out.witness {
            witnesses.push(w.clone());
        }
        outcomes.push(out);
    }
    let count = |f: &dyn Fn(&PassOutcome) -> usize| outcomes.iter().map(f).sum::<usize>();
    let stats = ExtractionStats {
        seeds_offered: state.original_seed_count,
        seeds_prepared: state.seeds.len(),
        passes: outcomes.len(),
        successes: witnesses.len(),
        short_collisions: count(&|o| o.short_collisions()),
        long_collisions: count(&|o| o.long_collisions()),
        double_long_failures: count(&|o| usize::from(!o.success && o.short_collisions() == 0)),
        step1_iterations: count(&|o| o.step1_iterations),
        target,
        target_met: witnesses.len() >= target,
        buds_initially_active: state.buds_initially_active,
        initial_fresh: state.initial_fresh,
        final_fresh: state.fresh_count,
    };
    if stats.passes != stats.successes + stats.short_collisions + stats.double_long_failures {
        return Err(Error::Invariant("pass verdicts do not add up".into()));
    }
    // the many-passes count: with all buds active at the start, passes
    // continue until at least gamma_r |W| have run
    if state.buds_initially_active && state.next_seed().is_none() {
        let b = (state.d + 1) * state.d.pow(state.r as u32 - 1);
        if stats.passes * (b + 2) < state.seeds.len() * b {
            return Err(Error::Invariant(format!(
                "only {} passes from {} seeds",
                stats.passes,
                state.seeds.len()
            )));
        }
    }
    Ok(Extraction {
        witnesses,
        outcomes,
        stats,
    })
}

/// Everything a full construction produces: the neighbourhood phase, the
/// passes, and the completed graph.
#[derive(Debug, Clone)]
pub struct Construction {
    pub prepared: PreparedReport,
    pub extraction: Option<Extraction>,
    pub semigraph: SemiGraph,
}

/// Builds a configuration-model graph on `n` vertices while exploring from
/// `w`: neighbourhoods first, then passes (if the seeds qualify under
/// `mode`), then the remaining half-edges in default order.
#[allow(clippy::too_many_arguments)]
pub fn construct<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    w: &[Vertex],
    r: usize,
    ell: usize,
    mode: PreparedMode,
    target: usize,
    rng: &mut R,
) -> Result<Construction> {
    let mut semi = fresh_semigraph(n, d)?;
    let prepared = build_neighbourhoods_first(&mut semi, w, r, rng)?;
    let (extraction, mut semi) = if prepared.prepared || mode == PreparedMode::Restrict {
        let mut state = PassState::new(semi, w, r, ell, mode)?;
        let ex = extract_good_subset(&mut state, target, rng)?;
        (Some(ex), state.into_semigraph())
    } else {
        (None, semi)
    };
    complete(&mut semi, &mut LowestFirst, rng)?;
    Ok(Construction {
        prepared,
        extraction,
        semigraph: semi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn prepared_state(n: usize, d: usize, w: &[Vertex], r: usize, ell: usize, seed: u64) -> Option<PassState> {
        let mut rng = seeded(seed);
        let mut semi = fresh_semigraph(n, d).unwrap();
        let rep = build_neighbourhoods_first(&mut semi, w, r, &mut rng).unwrap();
        rep.prepared.then(|| PassState::new(semi, w, r, ell, PreparedMode::Strict).unwrap())
    }

    #[test]
    fn ell_zero_is_immediate_success() {
        let mut st = (0..).find_map(|s| prepared_state(200, 3, &[0], 1, 0, s)).unwrap();
        let out = st.run_pass(0, &mut seeded(1)).unwrap();
        assert!(out.success);
        assert_eq!(out.explored.len(), 1);
        assert_eq!(out.step1_iterations, 0);
        assert!(st.run_pass(0, &mut seeded(1)).is_err());
    }

    #[test]
    fn clean_pass_builds_a_full_tree() {
        let mut found = false;
        for s in 0..50 {
            let Some(mut st) = prepared_state(100_000, 3, &[0], 1, 1, s) else { continue };
            let out = st.run_pass(0, &mut seeded(s)).unwrap();
            if out.collisions.is_empty() {
                assert!(out.success);
                assert_eq!(out.explored.len(), 4);
                assert_eq!(out.step1_iterations, 3);
                assert_eq!(out.half_edges_consumed, 6);
                found = true;
                break;
            }
        }
        assert!(found);
    }

    #[test]
    fn collisions_decide_the_verdict() {
        // n = 4, d = 2: seed 0 joined to 1, 2, 3 leaves buds with two
        // half-edges each and no fresh vertex. Exploring bud 1 with l = 1
        // either hits its own half-edge (short) or two long collisions.
        let mut saw_short = false;
        let mut rng = seeded(9);
        for _ in 0..200 {
            let mut semi = fresh_semigraph(4, 2).unwrap();
            semi.join(0, 3).unwrap();
            semi.join(1, 6).unwrap();
            semi.join(2, 9).unwrap();
            let mut st = PassState::new(semi, &[0], 1, 1, PreparedMode::Strict).unwrap();
            let out = st.run_pass(0, &mut rng).unwrap();
            assert_eq!(out.bud, 1);
            assert!(!out.success);
            assert!(out.short_collisions() == 1 || out.long_collisions() == 2);
            assert!(out.quieted_buds <= 2);
            saw_short |= out.short_collisions() == 1;
        }
        assert!(saw_short);
    }

    #[test]
    fn extraction_on_a_sparse_seed_set() {
        let mut rng = seeded(11);
        let w: Vec<Vertex> = (0..10).collect();
        let c = construct(20_000, 3, &w, 2, 2, PreparedMode::Restrict, usize::MAX, &mut rng).unwrap();
        let ex = c.extraction.unwrap();
        assert!(ex.stats.passes >= 8);
        assert!(c.semigraph.is_complete());
        let g = c.semigraph.graph();
        for wit in &ex.witnesses {
            let rooted = wit.rooted(g).unwrap();
            assert!(super::super::verify_favourable(&rooted, 3, 2, 2));
        }
    }
}
