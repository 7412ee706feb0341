//! The truncated universal cover of a small multigraph, its structural
//! checks, and the projected constrained process against the direct one.

use regcontact::cover::{build_cover, projection_check};
use regcontact::MultiGraph;

fn main() -> regcontact::Result<()> {
    // a triangle with a pendant vertex carrying a loop
    let g = MultiGraph::from_edges(4, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 3)])?;
    for depth in 0..=4 {
        let c = build_cover(&g, 0, depth)?;
        c.check(&g)?;
        c.check_distances(&g)?;
        println!("depth {depth}: {} nodes", c.node_count());
    }
    let c = build_cover(&g, 0, 3)?;
    for node in 0..c.node_count().min(12) {
        println!("node {node:>2} depth {} over vertex {}", c.node_depth(node), c.psi(node));
    }

    let rep = projection_check(&g, 0, 1.0, 12, 20_000, &[0.5, 1.0, 2.0], 3)?;
    for p in &rep.points {
        println!("t = {}: P[extinct] direct {:.4}, projected {:.4}, z {:+.2}", p.t, p.direct, p.projected, p.z);
    }
    println!("runs reaching the truncation depth: {}", rep.contamination);
    Ok(())
}
