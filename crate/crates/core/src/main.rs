use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use regcontact::bounds::{binomial_tail_bound, exact_binomial_tail, tail_threshold, TailBoundQuery, EXACT_TAIL_MAX_TRIALS};
use regcontact::configmodel::sample_regular;
use regcontact::cover::{
    build_cover, domination_check, kappa_domination_check, projection_check, DominationParams, DominationReport,
    ProjectionReport,
};
use regcontact::cp::{extinction_samples, InitialCondition};
use regcontact::experiments::{
    extinction_scaling, lambda_scan, subcritical_decay, supercritical_iteration, to_json, write_output, write_records,
    ExperimentConfig,
};
use regcontact::explore::{
    constants, construct, good_to_regenerative, verify_favourable, verify_regenerative, Constants, ExtractionStats,
    PassOutcome, PreparedMode,
};
use regcontact::graph::{read_graph, write_graph};
use regcontact::rng::seeded;
use regcontact::{Error, MultiGraph, Result, Vertex};

#[derive(Parser)]
#[command(name = "regcontact", version, about = "Contact process on random regular graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Strict,
    Restrict,
}

#[derive(clap::Args)]
struct ExperimentArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory of the configuration.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a configuration-model (d+1)-regular multigraph.
    GenGraph {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Independent contact-process runs on a graph file.
    Simulate {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        lambda: f64,
        /// `all`, `vertex:<k>`, `set:<a>,<b>,...`, or a file of vertex ids.
        #[arg(long, default_value = "all")]
        init: String,
        #[arg(long, default_value_t = 1000)]
        replicas: u64,
        #[arg(long, default_value_t = f64::INFINITY)]
        horizon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a truncated universal cover, check its structure, and compare
    /// the projected constrained process with the process on the graph.
    CoverCheck {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 0)]
        vertex: Vertex,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 10_000)]
        replicas: u64,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        t_grid: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare survival (and reach) tails on a graph with those on a
    /// truncated regular tree.
    DominationCheck {
        #[arg(long)]
        graph: PathBuf,
        /// Tree side is (d+1)-regular; defaults to max degree - 1.
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value = "all")]
        init: String,
        /// Truncation depth of the tree.
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = 2)]
        placement_depth: usize,
        #[arg(long, default_value_t = 10_000)]
        replicas: u64,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
        t_grid: Vec<f64>,
        /// Also compare reach tails from this vertex.
        #[arg(long)]
        kappa_vertex: Option<Vertex>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build graphs with Pass exploration and report per-pass statistics.
    PassStats {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        ell: usize,
        /// Size of the seed set (the first vertices).
        #[arg(long)]
        seeds: usize,
        /// Good witnesses wanted; all seeds when omitted.
        #[arg(long)]
        target: Option<usize>,
        #[arg(long, value_enum, default_value_t = Mode::Restrict)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Binomial large-deviation bound next to the exact tail.
    Bounds {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        delta: f64,
    },
    /// Censoring fraction and median extinction time across a lambda grid.
    ScanLambda(ExperimentArgs),
    /// Median extinction time against log n.
    ExtinctionScaling(ExperimentArgs),
    /// One step of the supercritical iteration from a large seed set.
    SupercriticalIteration(ExperimentArgs),
    /// Decay of the expected infected count on a truncated tree.
    SubcriticalDecay(ExperimentArgs),
}

enum Status {
    Ok,
    Flagged,
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(bytes).map_err(|e| Error::Io(e.to_string())),
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut bytes = to_json(value)?;
    bytes.push(b'\n');
    emit(out, &bytes)
}

fn parse_init(spec: &str, g: &MultiGraph) -> Result<Vec<Vertex>> {
    let init = match spec.parse::<InitialCondition>() {
        Ok(c) => c,
        Err(_) => {
            let text = std::fs::read_to_string(spec).map_err(|e| Error::Io(format!("{spec}: {e}")))?;
            let vs = text
                .split_whitespace()
                .map(|t| {
                    t.parse()
                        .map_err(|_| Error::InvalidInput(format!("{spec}: bad vertex id {t:?}")))
                })
                .collect::<Result<Vec<Vertex>>>()?;
            InitialCondition::Set(vs)
        }
    };
    init.resolve(g.vertex_count())
}

fn load_experiment(args: &ExperimentArgs) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let dir = args
        .out_dir
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((cfg, dir))
}

#[derive(Serialize)]
struct CoverCheckReport {
    structure_ok: bool,
    projection: ProjectionReport,
    flagged: bool,
}

#[derive(Serialize)]
struct DominationOutput {
    tau: DominationReport,
    kappa: Option<DominationReport>,
    flagged: bool,
}

#[derive(Serialize)]
struct PassStatsReport {
    n: usize,
    d: usize,
    r: usize,
    ell: usize,
    seeds: usize,
    seed: u64,
    constants: Constants,
    prepared: bool,
    stats: Option<ExtractionStats>,
    passes: Vec<PassOutcome>,
    favourable_verified: usize,
    good_target_met: bool,
    regenerative_verified: bool,
    regenerative_target_met: bool,
}

fn run(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::GenGraph { n, d, seed, out } => {
            let g = sample_regular(n, d, &mut seeded(seed))?;
            match out {
                Some(p) => write_graph(&g, &p)?,
                None => emit(None, g.to_text().as_bytes())?,
            }
            Ok(Status::Ok)
        }
        Command::Simulate {
            graph,
            lambda,
            init,
            replicas,
            horizon,
            seed,
            out,
        } => {
            let g = read_graph(&graph)?;
            let initial = parse_init(&init, &g)?;
            let samples = extinction_samples(&g, lambda, &initial, replicas, horizon, seed)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["replica", "tau", "censored", "peak", "kappa"])
                .map_err(|e| Error::Io(e.to_string()))?;
            for s in &samples {
                w.write_record([
                    s.replica.to_string(),
                    s.tau.map(|t| t.to_string()).unwrap_or_default(),
                    s.tau.is_none().to_string(),
                    s.peak.to_string(),
                    s.kappa.map(|k| k.to_string()).unwrap_or_default(),
                ])
                .map_err(|e| Error::Io(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
            emit(out.as_deref(), &bytes)?;
            Ok(Status::Ok)
        }
        Command::CoverCheck {
            graph,
            vertex,
            depth,
            lambda,
            replicas,
            t_grid,
            seed,
            out,
        } => {
            let g = read_graph(&graph)?;
            let c = build_cover(&g, vertex, depth)?;
            c.check(&g)?;
            c.check_distances(&g)?;
            let projection = projection_check(&g, vertex, lambda, depth, replicas, &t_grid, seed)?;
            let flagged = projection.contamination > 0.01 || projection.points.iter().any(|p| p.z.abs() > 3.0);
            emit_json(
                out.as_deref(),
                &CoverCheckReport {
                    structure_ok: true,
                    projection,
                    flagged,
                },
            )?;
            Ok(if flagged { Status::Flagged } else { Status::Ok })
        }
        Command::DominationCheck {
            graph,
            d,
            lambda,
            init,
            depth,
            placement_depth,
            replicas,
            t_grid,
            kappa_vertex,
            seed,
            out,
        } => {
            let g = read_graph(&graph)?;
            let initial = parse_init(&init, &g)?;
            let params = DominationParams {
                d: d.unwrap_or_else(|| g.max_degree().saturating_sub(1)),
                lambda,
                truncation_depth: depth,
                placement_depth,
                replicas,
                t_grid,
                seed,
            };
            let tau = domination_check(&g, &initial, &params)?;
            let kappa = kappa_vertex
                .map(|x| kappa_domination_check(&g, x, &params))
                .transpose()?;
            let bad = |r: &DominationReport| r.violations > 0 || r.tree_contamination >= 0.01;
            let flagged = bad(&tau) || kappa.as_ref().is_some_and(bad);
            emit_json(out.as_deref(), &DominationOutput { tau, kappa, flagged })?;
            Ok(if flagged { Status::Flagged } else { Status::Ok })
        }
        Command::PassStats {
            n,
            d,
            r,
            ell,
            seeds,
            target,
            mode,
            seed,
            out,
        } => {
            let w: Vec<Vertex> = (0..seeds.min(n)).collect();
            let target = target.unwrap_or(w.len());
            let mode = match mode {
                Mode::Strict => PreparedMode::Strict,
                Mode::Restrict => PreparedMode::Restrict,
            };
            let c = construct(n, d, &w, r, ell, mode, target, &mut seeded(seed))?;
            let g = c.semigraph.graph();
            let (stats, passes, favourable, good_met, regen_ok, regen_met) = match c.extraction {
                Some(ex) => {
                    let favourable = ex
                        .witnesses
                        .iter()
                        .filter(|w| w.rooted(g).is_ok_and(|rg| verify_favourable(&rg, d, ell, r)))
                        .count();
                    let (regen_ok, regen_count) = if ell >= 1 {
                        let regen = good_to_regenerative(g, &ex.witnesses, d, ell)?;
                        let seeds: Vec<Vertex> = regen.iter().map(|w| w.seed).collect();
                        (verify_regenerative(g, &seeds, &regen, d, ell - 1, r + 1).ok, regen.len())
                    } else {
                        (false, 0)
                    };
                    let met = ex.stats.target_met;
                    (Some(ex.stats), ex.outcomes, favourable, met, regen_ok, regen_ok && regen_count >= target)
                }
                None => (None, Vec::new(), 0, target == 0, false, target == 0),
            };
            emit_json(
                out.as_deref(),
                &PassStatsReport {
                    n,
                    d,
                    r,
                    ell,
                    seeds: w.len(),
                    seed,
                    constants: constants(d, r, ell),
                    prepared: c.prepared.prepared,
                    stats,
                    passes,
                    favourable_verified: favourable,
                    good_target_met: good_met,
                    regenerative_verified: regen_ok,
                    regenerative_target_met: regen_met,
                },
            )?;
            Ok(Status::Ok)
        }
        Command::Bounds { m, p, delta } => {
            let q = TailBoundQuery { m, p, delta };
            let bound = binomial_tail_bound(q)?;
            let k = tail_threshold(q);
            println!("bound {bound:e}");
            if m <= EXACT_TAIL_MAX_TRIALS {
                println!("exact {:e} (threshold {k})", exact_binomial_tail(m, p, k)?);
            } else {
                println!("exact unavailable for m > {EXACT_TAIL_MAX_TRIALS}");
            }
            Ok(Status::Ok)
        }
        Command::ScanLambda(args) => {
            let (cfg, dir) = load_experiment(&args)?;
            let rep = lambda_scan(&cfg)?;
            let mut csv = Vec::new();
            write_records(&mut csv, &cfg.sample_times, &rep.records)?;
            write_output(&dir, "scan.csv", &csv)?;
            write_output(&dir, "scan.json", &to_json(&rep)?)?;
            Ok(Status::Ok)
        }
        Command::ExtinctionScaling(args) => {
            let (cfg, dir) = load_experiment(&args)?;
            let rep = extinction_scaling(&cfg)?;
            let mut csv = Vec::new();
            write_records(&mut csv, &cfg.sample_times, &rep.records)?;
            write_output(&dir, "scaling.csv", &csv)?;
            write_output(&dir, "scaling.json", &to_json(&rep)?)?;
            Ok(Status::Ok)
        }
        Command::SupercriticalIteration(args) => {
            let (cfg, dir) = load_experiment(&args)?;
            let rep = supercritical_iteration(&cfg)?;
            write_output(&dir, "supercritical.json", &to_json(&rep)?)?;
            let flagged = rep.any_vacuous() || rep.cells.iter().any(|c| c.extraction_failures > 0);
            Ok(if flagged { Status::Flagged } else { Status::Ok })
        }
        Command::SubcriticalDecay(args) => {
            let (cfg, dir) = load_experiment(&args)?;
            cfg.validate(false)?;
            let decay = cfg
                .decay
                .clone()
                .ok_or_else(|| Error::InvalidInput("config has no [decay] section".into()))?;
            let mut reports = Vec::new();
            for (j, &lambda) in cfg.lambdas.iter().enumerate() {
                let seed = regcontact::rng::derive_seed(cfg.seed, &[j as u64]);
                reports.push(subcritical_decay(
                    cfg.d,
                    lambda,
                    decay.truncation_depth,
                    &decay.t_grid,
                    cfg.replicas,
                    seed,
                )?);
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["lambda", "t", "mean", "se", "envelope"])
                .map_err(|e| Error::Io(e.to_string()))?;
            for rep in &reports {
                for p in &rep.points {
                    w.write_record([
                        rep.lambda.to_string(),
                        p.t.to_string(),
                        p.mean.to_string(),
                        p.se.to_string(),
                        p.envelope.to_string(),
                    ])
                    .map_err(|e| Error::Io(e.to_string()))?;
                }
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
            write_output(&dir, "decay.csv", &bytes)?;
            write_output(&dir, "decay.json", &to_json(&reports)?)?;
            Ok(if reports.iter().any(|r| r.unreliable) {
                Status::Flagged
            } else {
                Status::Ok
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Flagged) => {
            eprintln!("warning: results flagged as unreliable; see the report");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
