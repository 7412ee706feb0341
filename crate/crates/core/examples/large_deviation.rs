//! The binomial Chernoff bound exp(-m psi_p(delta)) next to the exact tail.

use regcontact::bounds::{binomial_tail_bound, exact_binomial_tail, psi, tail_threshold, TailBoundQuery};

fn main() -> regcontact::Result<()> {
    let p = 0.1;
    println!("psi_0.1(delta):");
    for delta in [0.05, 0.1, 0.2, 0.4, 0.9] {
        println!("  delta = {delta}: {:.6}", psi(p, delta)?);
    }
    println!("{:>4} {:>6} {:>12} {:>12}", "m", "k", "bound", "exact");
    for m in [10, 30, 100, 300, 1000] {
        let q = TailBoundQuery { m, p, delta: 0.2 };
        let k = tail_threshold(q);
        println!("{m:>4} {k:>6} {:>12.4e} {:>12.4e}", binomial_tail_bound(q)?, exact_binomial_tail(m, p, k)?);
    }
    Ok(())
}
