//! Build a graph by exploring from a seed set: neighbourhoods first, then one
//! Pass per bud, then the rest of the pairing. Prints the per-pass log.

use regcontact::explore::{constants, construct, good_to_regenerative, verify_favourable, verify_regenerative, PreparedMode};
use regcontact::rng::seeded;

fn main() -> regcontact::Result<()> {
    let (n, d, r, ell) = (20_000, 3, 2, 2);
    let seeds: Vec<usize> = (0..8).collect();
    let k = constants(d, r, ell);
    println!(
        "c_l = {}, c_(r,l) = {}, gamma_r = {}, c_bar_r = {}",
        k.c_ell, k.c_r_ell, k.gamma_r, k.c_bar_r
    );

    let c = construct(n, d, &seeds, r, ell, PreparedMode::Restrict, usize::MAX, &mut seeded(17))?;
    println!("seed set prepared: {}", c.prepared.prepared);
    let ex = c.extraction.expect("restrict mode always explores");
    for o in &ex.outcomes {
        println!(
            "seed {:>2} bud {:>5}: {} after {} step-1 iterations, {} short / {} long collisions, {} explored",
            o.seed,
            o.bud,
            if o.success { "success" } else { "failure" },
            o.step1_iterations,
            o.short_collisions(),
            o.long_collisions(),
            o.explored.len()
        );
    }
    let g = c.semigraph.graph();
    let favourable = ex
        .witnesses
        .iter()
        .filter(|w| w.rooted(g).is_ok_and(|rg| verify_favourable(&rg, d, ell, r)))
        .count();
    println!("{} good witnesses, {favourable} verified favourable", ex.witnesses.len());

    let regen = good_to_regenerative(g, &ex.witnesses, d, ell)?;
    let roots: Vec<usize> = regen.iter().map(|w| w.seed).collect();
    let check = verify_regenerative(g, &roots, &regen, d, ell - 1, r + 1);
    println!("regenerative at (l-1, r+1): {}", check.ok);
    Ok(())
}
