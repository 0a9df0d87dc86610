//! Non-stationary fractal interpolation toolkit.
//!
//! Builds α-fractal interpolation functions as limits of backward trajectories
//! of Read-Bajraktarević operator sequences, exposes the associated linear
//! fractal operator together with numerical checks of its bounds, computes
//! norms and oscillation calculus for bounded-variation, `V_β`, and convex
//! Lipschitz spaces, and estimates box-counting dimensions of function graphs.
//! A small set-valued companion ([`ifs`]) drives sequences of plane IFSs on
//! finite point sets.
//!
//! The function carrier throughout is [`SampledFunction`]: ordered abscissae
//! with piecewise-linear interpretation. Norms, variations, and oscillations
//! are computed exactly for this class. Operator trajectories run on
//! refinement grids that are closed under the inverse interval maps, so each
//! operator application is exact at grid points.

pub mod base;
pub mod dimension;
pub mod engine;
pub mod error;
pub mod function;
pub mod ifs;
pub mod operator;
pub mod partition;
pub mod scaling;
pub mod spaces;

pub use base::{BaseFn, BaseOperator, BaseScheme};
pub use dimension::{box_count_graph, estimate_box_dimension, BoundTag, DimensionEstimate};
pub use engine::{FractalSpec, TrajectoryReport};
pub use error::Error;
pub use function::SampledFunction;
pub use operator::{BoundReport, OperatorConfig};
pub use partition::{refinement_points, AffineMapFamily, Partition, RefinementGrid};
pub use scaling::{ScalingFn, ScalingScheme, TailRule};
pub use spaces::{ConditionReport, SpaceTag, ThetaFunction};

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
