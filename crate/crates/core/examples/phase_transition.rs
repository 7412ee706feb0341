//! Desk-scale view of the phase transition: a lambda scan on coupled marks
//! and the median extinction time against ln n on both sides.

use regcontact::cp::InitialCondition;
use regcontact::experiments::{extinction_scaling, lambda_scan, ExperimentConfig, Horizon};

fn main() -> regcontact::Result<()> {
    let scan = ExperimentConfig {
        d: 3,
        lambdas: vec![0.15, 0.25, 0.35, 0.45, 0.6],
        ns: vec![200],
        replicas: 30,
        horizon: Horizon::LogFactor(30.0),
        initial: InitialCondition::All,
        seed: 1,
        sample_times: vec![],
        out_dir: None,
        iteration: None,
        decay: None,
    };
    let rep = lambda_scan(&scan)?;
    for c in &rep.cells {
        println!("n = {} lambda = {:.2}: censored {:.2}", c.n, c.lambda, c.censored_fraction);
    }
    println!("knee: {:?}", rep.knees);

    let scaling = ExperimentConfig {
        lambdas: vec![0.1],
        ns: vec![125, 250, 500, 1000],
        replicas: 100,
        horizon: Horizon::LogFactor(100.0),
        ..scan
    };
    let rep = extinction_scaling(&scaling)?;
    for c in &rep.cells {
        println!(
            "lambda = {} n = {:>4}: median tau {:.2}, / ln n = {:.3}",
            c.lambda,
            c.n,
            c.median_tau.unwrap_or(f64::NAN),
            c.median_over_log_n.unwrap_or(f64::NAN)
        );
    }
    if let Some(f) = rep.fits[0].fit {
        println!("median tau ~ {:.2} + {:.2} ln n", f.intercept, f.slope);
    }
    Ok(())
}
