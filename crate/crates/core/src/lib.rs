//! Simulation and exact-numerics toolkit for the λ-biased random walk on
//! binary trees, its traced variants on vertex subsets and on the leaf set,
//! and the cover-time rescaling that connects them to a jump process on the
//! middle-thirds Cantor set.
//!
//! The crate is organised around the objects it manipulates:
//!
//! * [`tree`] — vertex addressing, the resistance metric, boundary (Cantor
//!   set) encodings and the vertex/cylinder measures.
//! * [`network`] — finite electrical networks: construction of the depth-n
//!   tree network, effective resistance, Schur-complement traces and exact
//!   linear-algebra oracles (hitting times, expected cover times).
//! * [`walk`] — event-driven simulation of the continuous-time chains, local
//!   times, additive functionals and time changes by excision.
//! * [`limit`] — the approximation ladder towards the limiting jump process:
//!   leaf-trace chains, nested cover times and the cover-time rescaling.
//! * [`gaussian`] — the Gaussian field on the tree, expected-supremum
//!   estimation, the chaining functional and concentration-tail fits.
//! * [`analysis`] — empirical distributions, Kolmogorov–Smirnov statistics,
//!   p-norms and the growth-regime table.

#![forbid(unsafe_code)]

pub mod analysis;
pub mod error;
pub mod gaussian;
pub mod limit;
pub mod linalg;
pub mod network;
pub mod rng;
pub mod samples;
pub mod tree;
pub mod walk;

pub use error::{CoreError, Result};
pub use tree::{LeafAddress, Params, Vertex};
