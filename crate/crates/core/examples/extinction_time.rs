//! Extinction times from all-infected on small random regular graphs, with a
//! censored median and the fraction of runs still alive at the horizon.

use regcontact::configmodel::sample_regular;
use regcontact::cp::extinction_samples;
use regcontact::rng::seeded;
use regcontact::stats::{censored_median, wilson};

fn main() -> regcontact::Result<()> {
    let g = sample_regular(200, 3, &mut seeded(1))?;
    let all: Vec<usize> = (0..g.vertex_count()).collect();
    let horizon = 200.0;
    println!("{:>6} {:>10} {:>10} {:>18}", "lambda", "median", "censored", "wilson95");
    for lambda in [0.1, 0.2, 0.3, 0.4, 0.5] {
        let runs = extinction_samples(&g, lambda, &all, 200, horizon, 7)?;
        let finite: Vec<f64> = runs.iter().filter_map(|s| s.tau).collect();
        let censored = runs.len() - finite.len();
        let median = censored_median(&finite, censored)
            .map(|m| format!("{m:.2}"))
            .unwrap_or_else(|| format!("> {horizon}"));
        let (lo, hi) = wilson(censored as u64, runs.len() as u64, 1.96).unwrap();
        println!(
            "{lambda:>6} {median:>10} {:>10.3} {:>18}",
            censored as f64 / runs.len() as f64,
            format!("[{lo:.3}, {hi:.3}]")
        );
    }
    Ok(())
}
