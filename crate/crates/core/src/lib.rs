//! Contact process on finite multigraphs, with the machinery needed to study
//! it on random `(d+1)`-regular graphs.
//!
//! The crate is organised by subsystem:
//!
//! - [`graph`]: multigraphs with loops and parallel edges, balls, the
//!   regular/hat/pruned tree builders and induced rooted embeddings.
//! - [`configmodel`]: half-edge semi-graphs and the uniform pairing sampler
//!   with pluggable election of the next half-edge.
//! - [`cp`]: the contact process itself, both as an exact event-driven
//!   simulation and as an explicit graphical (Harris) construction.
//! - [`cover`]: truncated universal covers, fiber projection, the
//!   fiber-constrained process and the stochastic-domination reports.
//! - [`explore`]: prepared seed sets, the exploration pass run during graph
//!   construction, favourable/regenerative witnesses and their verifiers.
//! - [`bounds`]: the binomial large-deviation rate and tail bound, plus an
//!   empirical growth probe.
//! - [`experiments`]: extinction-time scaling, lambda scans, the
//!   supercritical iteration step and subcritical decay fits.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod bounds;
pub mod configmodel;
pub mod cover;
pub mod cp;
mod error;
pub mod experiments;
pub mod explore;
pub mod graph;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use graph::{MultiGraph, OrientedEdge, RootedGraph, Vertex};
