//! One set of Poisson marks drives the process from every initial set and,
//! after thinning, at every smaller rate.

use regcontact::configmodel::sample_regular;
use regcontact::cp::{evolve_harris, harris_extinction, sample_harris};
use regcontact::rng::seeded;

fn main() -> regcontact::Result<()> {
    let mut rng = seeded(5);
    let g = sample_regular(30, 3, &mut rng)?;
    let h = sample_harris(&g, 1.0, 20.0, &mut rng)?;
    println!("{} marks on [0, 20]", h.schedule().len());

    let a = [0, 1, 2];
    let b = [10, 11];
    let both = [0, 1, 2, 10, 11];
    for t in [1.0, 2.0, 5.0] {
        let xa = evolve_harris(&g, &h, &a, t)?;
        let xb = evolve_harris(&g, &h, &b, t)?;
        let xu = evolve_harris(&g, &h, &both, t)?;
        let mut joined: Vec<_> = xa.iter().chain(&xb).copied().collect();
        joined.sort_unstable();
        joined.dedup();
        println!("t = {t}: |xi^A| = {}, |xi^B| = {}, |xi^(A u B)| = {} (union of the two: {})", xa.len(), xb.len(), xu.len(), joined == xu);
    }

    let all: Vec<usize> = (0..g.vertex_count()).collect();
    for lambda in [0.2, 0.4, 0.6, 0.8, 1.0] {
        let thinned = h.thinned(lambda)?;
        match harris_extinction(&g, &thinned, &all)? {
            Some(t) => println!("lambda = {lambda}: extinct at {t:.3}"),
            None => println!("lambda = {lambda}: alive at 20"),
        }
    }
    Ok(())
}
