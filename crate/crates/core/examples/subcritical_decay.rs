//! E|xi_t| from the root of a truncated 4-regular tree, next to the
//! branching envelope exp(((d+1) lambda - 1) t).

use regcontact::experiments::subcritical_decay;

fn main() -> regcontact::Result<()> {
    let grid: Vec<f64> = (0..=8).map(f64::from).collect();
    for lambda in [0.05, 0.1, 0.2] {
        let rep = subcritical_decay(3, lambda, 10, &grid, 50_000, 9)?;
        println!("lambda = {lambda}: fitted rate {:.3}, contamination {}", rep.decay_rate.unwrap_or(f64::NAN), rep.contamination);
        for p in &rep.points {
            println!("  t = {}: mean {:.5} +- {:.5}, envelope {:.5}", p.t, p.mean, p.se, p.envelope);
        }
    }
    Ok(())
}
