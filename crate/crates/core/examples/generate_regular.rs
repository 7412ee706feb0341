//! Sample a (d+1)-regular configuration-model multigraph, count its loops,
//! multi-edges and short cycles, and print it in the text format.

use regcontact::configmodel::{count_short_cycles, sample_regular};
use regcontact::rng::seeded;

fn main() -> regcontact::Result<()> {
    let (n, d) = (12, 2);
    let g = sample_regular(n, d, &mut seeded(2024))?;
    println!("n = {n}, degree {} everywhere", d + 1);
    println!("loops: {}", g.loop_count());
    println!("cycles of length <= 4: {}", count_short_cycles(&g, 4));
    println!("connected: {}", g.is_connected());
    print!("{}", g.to_text());

    // short cycles thin out as n grows, their count stays O(1)
    for n in [100, 1000, 10_000] {
        let g = sample_regular(n, 3, &mut seeded(n as u64))?;
        println!("n = {n:>6}: {} loops, {} cycles of length <= 3", g.loop_count(), count_short_cycles(&g, 3));
    }
    Ok(())
}
