//! BGK kinetic solver in one space and one velocity dimension.
//!
//! The main solver ([`lvg`]) is a conservative semi-Lagrangian scheme on
//! per-cell adaptive velocity lattices. A classical solver on one global
//! lattice ([`reference`]) serves as the reference for comparisons.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cases;
pub mod cli;
pub mod conservation;
pub mod error;
pub mod grid;
pub mod lvg;
pub mod quadrature;
pub mod reconstruction;
pub mod reference;

pub use error::{Result, SolverError};
pub use grid::{
    Boundary, CellDistribution, CollisionModel, DistributionField, GasParams, MomentSet, SpatialGrid, VelocityGrid,
};
pub use lvg::{LvgSolver, Order, SolverConfig};
