//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any failed.
//!
//! `cargo test --test acceptance` runs all of them; extra arguments select
//! criteria by number, e.g. `cargo test --test acceptance -- 3 7`.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use regcontact::bounds::{binomial_tail_bound, exact_binomial_tail, psi, tail_threshold, TailBoundQuery};
use regcontact::configmodel::{sample_matching, FewestRemaining, LowestFirst};
use regcontact::cover::{build_cover, domination_check, kappa_domination_check, projection_check, DominationParams};
use regcontact::cp::{evolve_between, evolve_harris, extinction_samples, harris_extinction, sample_harris, MarkKind};
use regcontact::experiments::{extinction_scaling, subcritical_decay, ExperimentConfig, Horizon};
use regcontact::explore::{constants, construct, verify_favourable, PreparedMode};
use regcontact::rng::{replica_rng, seeded};
use regcontact::stats::{chi_square_gof, ks_two_sample, mean_se, proportion_se};
use regcontact::{MultiGraph, OrientedEdge, Vertex};

/// Two-sided 1% critical value of the standard normal.
const Z_TWO_SIDED_01: f64 = 2.575_829_303_548_901;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn complete(n: usize) -> MultiGraph {
    let mut g = MultiGraph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            g.add_edge(u, v).unwrap();
        }
    }
    g
}

fn cycle(n: usize) -> MultiGraph {
    MultiGraph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
}

/// Random multigraph with loops and parallel edges, every degree at most
/// `max_degree` (a loop counts twice).
fn random_multigraph<R: Rng>(rng: &mut R, max_n: usize, max_edges: usize, max_degree: usize) -> MultiGraph {
    let n = rng.random_range(1..=max_n);
    let mut g = MultiGraph::new(n);
    let mut deg = vec![0; n];
    for _ in 0..rng.random_range(0..=max_edges) {
        let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
        let need = if u == v { 2 } else { 1 };
        if deg[u] + need > max_degree || (u != v && deg[v] + 1 > max_degree) {
            continue;
        }
        deg[u] += 1;
        deg[v] += 1;
        g.add_edge(u, v).unwrap();
    }
    g
}

fn random_subset<R: Rng>(rng: &mut R, n: usize) -> Vec<Vertex> {
    (0..n).filter(|_| rng.random_bool(0.4)).collect()
}

fn c01_exponential_extinction() -> Outcome {
    let g = MultiGraph::new(1);
    let runs = extinction_samples(&g, 1.0, &[0], 100_000, f64::INFINITY, 101).unwrap();
    let taus: Vec<f64> = runs.iter().map(|s| s.tau.unwrap()).collect();
    let (mean, se) = mean_se(&taus).unwrap();
    let k = taus.iter().filter(|&&t| t > 1.0).count() as u64;
    let p = k as f64 / taus.len() as f64;
    let p_se = proportion_se(k, taus.len() as u64);
    let target = (-1.0f64).exp();
    let pass = (mean - 1.0).abs() <= 3.0 * se && (p - target).abs() <= 3.0 * p_se;
    outcome(
        pass,
        format!("mean {mean:.4} (se {se:.4}), P[tau > 1] {p:.4} vs {target:.4} (se {p_se:.4})"),
    )
}

/// Expected absorption time of the contact process on `K_2` from both
/// infected: states are infected subsets as bitmasks, solve `-Q_TT m = 1`.
fn k2_expected_extinction(lambda: f64) -> f64 {
    let rate = |from: usize, to: usize| -> f64 {
        let diff = from ^ to;
        if diff.count_ones() != 1 {
            return 0.0;
        }
        if to & diff == 0 {
            // recovery of the dropped vertex
            1.0
        } else if from != 0 {
            // infection of the added vertex from the other one
            lambda
        } else {
            0.0
        }
    };
    let transient = [1usize, 2, 3];
    let mut a = [[0.0f64; 4]; 3];
    for (i, &s) in transient.iter().enumerate() {
        let out: f64 = (0..4).filter(|&t| t != s).map(|t| rate(s, t)).sum();
        for (j, &t) in transient.iter().enumerate() {
            a[i][j] = if s == t { out } else { -rate(s, t) };
        }
        a[i][3] = 1.0;
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..4 {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    a[2][3] / a[2][2]
}

fn c02_k2_absorption() -> Outcome {
    let exact = k2_expected_extinction(1.0);
    let g = complete(2);
    let runs = extinction_samples(&g, 1.0, &[0, 1], 100_000, f64::INFINITY, 202).unwrap();
    let taus: Vec<f64> = runs.iter().map(|s| s.tau.unwrap()).collect();
    let (mean, se) = mean_se(&taus).unwrap();
    outcome(
        (mean - exact).abs() <= 3.0 * se,
        format!("mean {mean:.4} vs exact {exact:.4} (se {se:.4})"),
    )
}

fn c03_engine_equivalence() -> Outcome {
    let g = complete(3);
    let all = [0, 1, 2];
    let cap = 2.0;
    let reps = 100_000u64;
    let gillespie: Vec<f64> = extinction_samples(&g, 1.0, &all, reps, cap, 303)
        .unwrap()
        .iter()
        .map(|s| s.tau.map_or(cap, |t| t.min(cap)))
        .collect();
    let harris: Vec<f64> = (0..reps)
        .map(|i| {
            let h = sample_harris(&g, 1.0, cap, &mut replica_rng(304, i)).unwrap();
            harris_extinction(&g, &h, &all).unwrap().map_or(cap, |t| t.min(cap))
        })
        .collect();
    let ks = ks_two_sample(&gillespie, &harris).unwrap();
    outcome(
        ks.p_value > 0.01,
        format!("KS D = {:.5}, p = {:.3}", ks.statistic, ks.p_value),
    )
}

/// `xi^A_t` by the dual: walk the schedule backwards from `(y, t)`,
/// collecting the vertices that reach `(y, t)` along open paths.
fn dual_contains(g: &MultiGraph, h: &regcontact::cp::HarrisSystem, a: &[Vertex], y: Vertex, t: f64) -> bool {
    let mut reach = vec![false; g.vertex_count()];
    reach[y] = true;
    for m in h.schedule().iter().rev().filter(|m| m.time <= t) {
        match m.kind {
            MarkKind::Recovery => reach[m.site] = false,
            MarkKind::Transmission => {
                let e = OrientedEdge::from_index(m.site);
                if reach[g.head(e)] {
                    reach[g.tail(e)] = true;
                }
            }
        }
    }
    a.iter().any(|&x| reach[x])
}

fn c04_coupling_identities() -> Outcome {
    let mut rng = seeded(404);
    let mut failures = Vec::new();
    for case in 0..1000 {
        let g = random_multigraph(&mut rng, 8, 14, 6);
        let n = g.vertex_count();
        let lambda = rng.random_range(0.2..3.0);
        let horizon = rng.random_range(0.2..3.0);
        let h = sample_harris(&g, lambda, horizon, &mut rng).unwrap();
        let a = random_subset(&mut rng, n);
        let b = random_subset(&mut rng, n);
        let mut s = rng.random_range(0.0..horizon);
        let mut t = rng.random_range(0.0..horizon);
        if s > t {
            std::mem::swap(&mut s, &mut t);
        }
        let union: Vec<Vertex> = a.iter().chain(&b).copied().collect::<BTreeSet<_>>().into_iter().collect();
        let xa = evolve_harris(&g, &h, &a, t).unwrap();
        let xb = evolve_harris(&g, &h, &b, t).unwrap();
        let xu = evolve_harris(&g, &h, &union, t).unwrap();
        let joined: BTreeSet<Vertex> = xa.iter().chain(&xb).copied().collect();
        if xu.iter().copied().collect::<BTreeSet<_>>() != joined {
            failures.push(format!("case {case}: additivity"));
        }
        if xa.iter().any(|v| !xu.contains(v)) || xb.iter().any(|v| !xu.contains(v)) {
            failures.push(format!("case {case}: monotonicity"));
        }
        let xs = evolve_harris(&g, &h, &a, s).unwrap();
        if evolve_between(&g, &h, &xs, s, t).unwrap() != xa {
            failures.push(format!("case {case}: semigroup"));
        }
        let dual: Vec<Vertex> = (0..n).filter(|&y| dual_contains(&g, &h, &a, y, t)).collect();
        if dual != xa {
            failures.push(format!("case {case}: dual"));
        }
    }
    outcome(
        failures.is_empty(),
        format!("1000 instances, {} failures {:?}", failures.len(), failures.iter().take(3).collect::<Vec<_>>()),
    )
}

/// The 15 perfect matchings of 6 half-edges, as sorted pair lists.
fn all_matchings(items: &[usize]) -> Vec<Vec<(usize, usize)>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let first = items[0];
    let mut out = Vec::new();
    for k in 1..items.len() {
        let rest: Vec<usize> = items[1..].iter().copied().filter(|&x| x != items[k]).collect();
        for mut m in all_matchings(&rest) {
            m.push((first, items[k]));
            m.sort_unstable();
            out.push(m);
        }
    }
    out
}

fn c05_configuration_law() -> Outcome {
    let index: BTreeMap<Vec<(usize, usize)>, usize> = all_matchings(&[0, 1, 2, 3, 4, 5])
        .into_iter()
        .enumerate()
        .map(|(i, m)| (m, i))
        .collect();
    let probs = vec![1.0 / 15.0; 15];
    let mut details = Vec::new();
    let mut pass = index.len() == 15;
    for policy in ["lowest-first", "fewest-remaining"] {
        let mut counts = [0u64; 15];
        let mut rng = seeded(505);
        for _ in 0..100_000 {
            let semi = match policy {
                "lowest-first" => sample_matching(2, 2, &mut LowestFirst, &mut rng),
                _ => sample_matching(2, 2, &mut FewestRemaining, &mut rng),
            }
            .unwrap();
            let m = semi.matching();
            if m.len() != 3 || semi.graph().edge_count() != 3 {
                pass = false;
            }
            counts[index[&m]] += 1;
        }
        let chi = chi_square_gof(&counts, &probs).unwrap();
        pass &= chi.p_value > 0.01;
        details.push(format!("{policy}: chi2 {:.2}, p {:.3}", chi.statistic, chi.p_value));
    }
    outcome(pass, details.join("; "))
}

fn c06_pass_bookkeeping() -> Outcome {
    let (n, d, r, ell, seeds) = (1000usize, 3usize, 3usize, 3usize, 20usize);
    let k = constants(d, r, ell);
    let floor = n as i64 - (k.c_r_ell * seeds as u64) as i64;
    let w: Vec<Vertex> = (0..seeds).collect();
    let mut violations = Vec::new();
    let (mut passes, mut successes, mut witnesses) = (0usize, 0usize, 0usize);
    for run in 0..1000u64 {
        let c = match construct(n, d, &w, r, ell, PreparedMode::Restrict, seeds, &mut replica_rng(606, run)) {
            Ok(c) => c,
            Err(e) => {
                violations.push(format!("run {run}: {e}"));
                continue;
            }
        };
        let g = c.semigraph.graph();
        let Some(ex) = c.extraction else { continue };
        for o in &ex.outcomes {
            passes += 1;
            successes += o.success as usize;
            if o.step1_iterations as u64 > k.c_ell {
                violations.push(format!("run {run}: {} step-1 iterations", o.step1_iterations));
            }
            let fatal = o.short_collisions() >= 1 || o.long_collisions() >= 2;
            if o.success == fatal {
                violations.push(format!("run {run}: verdict disagrees with collisions"));
            }
            if (o.fresh_after as i64) < floor {
                violations.push(format!("run {run}: fresh {} below {floor}", o.fresh_after));
            }
            if o.quieted_buds > 2 {
                violations.push(format!("run {run}: {} buds quieted", o.quieted_buds));
            }
        }
        if ex.witnesses.len() != ex.outcomes.iter().filter(|o| o.success).count() {
            violations.push(format!("run {run}: witness count"));
        }
        let mut seen = BTreeSet::new();
        for wit in &ex.witnesses {
            witnesses += 1;
            if !wit.rooted(g).is_ok_and(|rg| verify_favourable(&rg, d, ell, r)) {
                violations.push(format!("run {run}: witness at {} not favourable", wit.seed));
            }
            if wit.vertices.iter().any(|v| !seen.insert(*v)) {
                violations.push(format!("run {run}: witnesses overlap"));
            }
        }
    }
    outcome(
        violations.is_empty(),
        format!(
            "1000 constructions, {passes} passes, {successes} successes, {witnesses} witnesses checked, \
             floor n - c_rl|W| = {floor}, {} violations {:?}",
            violations.len(),
            violations.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

/// `P[Bin(m, p) >= k]` by summing the pmf from the multiplicative recurrence.
fn binomial_tail_oracle(m: u64, p: f64, k: u64) -> f64 {
    let mut pmf = (1.0 - p).powi(m as i32);
    let mut tail = 0.0;
    for j in 0..=m {
        if j >= k {
            tail += pmf;
        }
        pmf *= (m - j) as f64 / (j + 1) as f64 * p / (1.0 - p);
    }
    tail
}

/// `sup_{theta >= 0} theta (p + delta) - ln(1 - p + p e^theta)` by golden
/// section on a concave objective.
fn psi_sup(p: f64, delta: f64) -> f64 {
    let f = |th: f64| th * (p + delta) - (1.0 - p + p * th.exp()).ln();
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, 60.0f64);
    for _ in 0..300 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) < f(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    f(0.5 * (lo + hi)).max(f(0.0))
}

fn c07_bound_dominance() -> Outcome {
    let ps: Vec<f64> = [0.01, 0.05].into_iter().chain((1..=19).map(|i| i as f64 * 0.05)).chain([0.99]).collect();
    let mut cells = 0usize;
    let mut bad_tail = Vec::new();
    let mut worst_psi = 0.0f64;
    for &p in &ps {
        for j in 0..=20 {
            let delta = j as f64 / 20.0 * (1.0 - p);
            worst_psi = worst_psi.max((psi(p, delta).unwrap() - psi_sup(p, delta)).abs());
            for m in 1..=30u64 {
                let q = TailBoundQuery { m, p, delta };
                let k = tail_threshold(q);
                let oracle = binomial_tail_oracle(m, p, k);
                let exact = exact_binomial_tail(m, p, k).unwrap();
                let bound = binomial_tail_bound(q).unwrap();
                cells += 1;
                // both sides agree at delta = 1 - p, up to rounding
                if bound < oracle * (1.0 - 1e-12) || (exact - oracle).abs() > 1e-12 * oracle.max(1e-300) {
                    bad_tail.push((m, p, delta));
                }
            }
        }
    }
    outcome(
        bad_tail.is_empty() && worst_psi <= 1e-9,
        format!(
            "{cells} grid cells, {} tail failures {:?}, max |psi - sup form| = {worst_psi:.2e}",
            bad_tail.len(),
            bad_tail.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn c08_universal_cover() -> Outcome {
    let mut rng = seeded(808);
    let mut failures = Vec::new();
    let mut covers = 0usize;
    for case in 0..200 {
        let g = random_multigraph(&mut rng, 8, 12, 4);
        for x in 0..g.vertex_count() {
            for depth in 0..=5 {
                covers += 1;
                let c = match build_cover(&g, x, depth) {
                    Ok(c) => c,
                    Err(e) => {
                        failures.push(format!("case {case}: {e}"));
                        continue;
                    }
                };
                if let Err(e) = c.check(&g).and_then(|_| c.check_distances(&g)) {
                    failures.push(format!("case {case}, x = {x}, R = {depth}: {e}"));
                }
            }
        }
    }
    let rep = projection_check(&cycle(3), 0, 1.0, 12, 100_000, &[1.0], 809).unwrap();
    let pt = &rep.points[0];
    let pass = failures.is_empty() && pt.z.abs() < Z_TWO_SIDED_01;
    outcome(
        pass,
        format!(
            "{covers} covers on 200 multigraphs, {} failures {:?}; C_3 P[extinct by 1] direct {:.4} vs \
             projected {:.4}, z {:.2}, contamination {}",
            failures.len(),
            failures.iter().take(2).collect::<Vec<_>>(),
            pt.direct,
            pt.projected,
            pt.z,
            rep.contamination
        ),
    )
}

fn scaling_config(lambda: f64, ns: Vec<usize>, replicas: u64, horizon: Horizon, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        d: 3,
        lambdas: vec![lambda],
        ns,
        replicas,
        horizon,
        initial: regcontact::cp::InitialCondition::All,
        seed,
        sample_times: vec![],
        out_dir: None,
        iteration: None,
        decay: None,
    }
}

fn c09_subcritical_scaling() -> Outcome {
    let cfg = scaling_config(0.1, vec![125, 250, 500, 1000], 200, Horizon::LogFactor(100.0), 909);
    let rep = extinction_scaling(&cfg).unwrap();
    let spread = rep.fits[0].ratio_spread;
    let censored: u64 = rep.cells.iter().map(|c| c.censored).sum();
    let ratios: Vec<String> = rep
        .cells
        .iter()
        .map(|c| format!("{}:{:.3}", c.n, c.median_over_log_n.unwrap_or(f64::NAN)))
        .collect();
    outcome(
        spread.is_some_and(|s| s < 2.0) && censored == 0,
        format!("median/ln n {}, spread {:?}, censored {censored}", ratios.join(" "), spread),
    )
}

fn c10_supercritical_persistence() -> Outcome {
    let cfg = scaling_config(2.0, vec![100, 200, 400], 100, Horizon::Fixed(1000.0), 1010);
    let rep = extinction_scaling(&cfg).unwrap();
    let freqs: Vec<f64> = rep.cells.iter().map(|c| c.censored_fraction).collect();
    let pass = freqs.iter().all(|&f| f >= 0.99) && freqs.windows(2).all(|w| w[1] >= w[0] - 0.01);
    outcome(pass, format!("survival past 1000 at n = 100, 200, 400: {freqs:?}"))
}

fn c11_domination() -> Outcome {
    let g = complete(4);
    let p = DominationParams {
        d: 3,
        lambda: 0.2,
        truncation_depth: 10,
        placement_depth: 2,
        replicas: 100_000,
        t_grid: vec![1.0, 2.0, 4.0],
        seed: 1111,
    };
    let tau = domination_check(&g, &[0, 1, 2, 3], &p).unwrap();
    let kappa = kappa_domination_check(&g, 0, &p).unwrap();
    let max_z = |r: &regcontact::cover::DominationReport| r.points.iter().map(|q| q.z).fold(f64::NEG_INFINITY, f64::max);
    let pass = tau.violations == 0
        && kappa.violations == 0
        && tau.tree_contamination < 0.01
        && kappa.tree_contamination < 0.01;
    outcome(
        pass,
        format!(
            "R = 10; tau: {} violations, max z {:.1}, contamination {:.4}; kappa: {} violations, max z {:.1}, \
             contamination {:.4}",
            tau.violations,
            max_z(&tau),
            tau.tree_contamination,
            kappa.violations,
            max_z(&kappa),
            kappa.tree_contamination
        ),
    )
}

fn c12_decay_fit() -> Outcome {
    let grid: Vec<f64> = (0..=16).map(|i| i as f64 * 0.5).collect();
    let rep = subcritical_decay(3, 0.1, 10, &grid, 100_000, 1212).unwrap();
    let rate = rep.decay_rate.unwrap_or(f64::NAN);
    outcome(
        rate >= 0.5 && rep.contamination < 0.01,
        format!("fitted rate {rate:.4} (envelope 0.6), contamination {}", rep.contamination),
    )
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, name: "exponential extinction oracle", budget: Duration::from_secs(10), run: c01_exponential_extinction },
    Criterion { id: 2, name: "K_2 absorption time", budget: Duration::from_secs(30), run: c02_k2_absorption },
    Criterion { id: 3, name: "engine equivalence", budget: Duration::from_secs(120), run: c03_engine_equivalence },
    Criterion { id: 4, name: "coupling identities", budget: Duration::from_secs(60), run: c04_coupling_identities },
    Criterion { id: 5, name: "configuration-model law", budget: Duration::from_secs(60), run: c05_configuration_law },
    Criterion { id: 6, name: "pass bookkeeping", budget: Duration::from_secs(300), run: c06_pass_bookkeeping },
    Criterion { id: 7, name: "large-deviation bound dominance", budget: Duration::from_secs(60), run: c07_bound_dominance },
    Criterion { id: 8, name: "universal cover correctness", budget: Duration::from_secs(300), run: c08_universal_cover },
    Criterion { id: 9, name: "subcritical scaling signature", budget: Duration::from_secs(900), run: c09_subcritical_scaling },
    Criterion { id: 10, name: "supercritical persistence", budget: Duration::from_secs(900), run: c10_supercritical_persistence },
    Criterion { id: 11, name: "domination reports", budget: Duration::from_secs(600), run: c11_domination },
    Criterion { id: 12, name: "subcritical decay fit", budget: Duration::from_secs(600), run: c12_decay_fit },
];

fn main() -> ExitCode {
    // libtest flags such as --nocapture may be forwarded; only numbers select
    let wanted: BTreeSet<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in CRITERIA.iter().filter(|c| wanted.is_empty() || wanted.contains(&c.id)) {
        let start = Instant::now();
        let o = (c.run)();
        let took = start.elapsed();
        let in_time = took <= c.budget;
        let pass = o.pass && in_time;
        failed += !pass as usize;
        println!(
            "[{}] {:>2} {}: {} ({:.1}s of {}s{})",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            o.detail,
            took.as_secs_f64(),
            c.budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
