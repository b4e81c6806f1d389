//! Moment-encoded lattice Boltzmann solver.
//!
//! The solver stores only density, momentum and the second-order moment per
//! node and rebuilds populations on the fly through a third-order Hermite
//! closure. Alongside it live a von Neumann analyzer for D2Q9 collision
//! models, a fixed-point codec for the stored moments and a triangle-mesh
//! obstacle pipeline.

pub mod collision;
pub mod error;
pub mod geometry;
pub mod io;
pub mod lattice;
pub mod moments;
pub mod quant;
pub mod solver;
pub mod stability;

pub use error::{LbmError, Result};
pub use lattice::{EquilibriumOrder, Lattice, LatticeKind};
pub use moments::MomentSet;
