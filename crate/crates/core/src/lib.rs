//! Lossy compression of sampled solids into CSG trees.
//!
//! Given fitted primitives and an inside/outside oracle, the pipeline builds the
//! primitive intersection graph, partitions it into maximal cliques, enumerates
//! the non-empty fundamental products, and selects the smallest exact cover of
//! the inside products from a pool of conjunction candidates. The cover can be
//! solved with Dancing Links or through its QUBO/Ising encoding.

pub mod cover;
pub mod error;
pub mod fixtures;
pub mod formats;
pub mod geometry;
pub mod graph;
pub mod pipeline;
pub mod products;
pub mod qubo;
pub mod seed;

pub use cover::CoverInstance;
pub use error::{Error, Result, Stage};
