//! Spectral laboratory for the density-matrix scattering problem near a
//! translation-invariant equilibrium state.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! `*F64` aliases at the bottom fix the common double-precision case.

// Validation reads `!(x > 0.0)` on purpose: NaN must fail it.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::type_complexity)]

pub mod density;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod quad;
pub mod real;
pub mod response;
pub mod rng;
pub mod solver;
pub mod strichartz;

pub use error::{Error, Result};
pub use real::Real;

pub type SpatialGridF64 = grid::SpatialGrid<f64>;
pub type SpaceTimeGridF64 = grid::SpaceTimeGrid<f64>;
pub type FieldF64 = grid::Field<f64>;
pub type SpaceTimeFieldF64 = grid::SpaceTimeField<f64>;
pub type DensityMatrixF64 = density::DensityMatrix<f64>;
pub type ReferenceStateF64 = response::ReferenceState<f64>;
pub type GcheckTableF64 = response::GcheckTable<f64>;
pub type PotentialTrajectoryF64 = dynamics::PotentialTrajectory<f64>;
pub type OperatorTrajectoryF64 = density::OperatorTrajectory<f64>;
pub type ResponseKernelF64 = solver::ResponseKernel<f64>;
pub type SolverConfigF64 = solver::SolverConfig<f64>;
pub type SolutionRecordF64 = solver::SolutionRecord<f64>;
