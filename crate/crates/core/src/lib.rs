//! Tether-space motion control for a UAV on a reeled tether.
//!
//! The vehicle's position is parameterized by tether length, elevation and
//! azimuth rather than by cartesian coordinates, because those are the three
//! quantities the winch and gimbal actually actuate. This crate provides the
//! coordinate geometry, two motion primitives built on it (a waypoint
//! position controller and an inverse-Jacobian velocity controller), a
//! composite controller that switches between them near the overhead
//! singularity, a first-order plant for simulation, a waypoint path
//! executor, and trajectory quality metrics.
//!
//! Everything is generic over the scalar type through [`Real`]; the `*64`
//! aliases below fix `f64` for callers that don't need the generality.

pub mod control;
pub mod executor;
pub mod geometry;
pub mod metrics;
pub mod plant;
pub mod real;
mod vec3;

pub use real::Real;

use thiserror::Error;

/// A parameter struct failed validation. The message names the offending
/// field and constraint.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct InvalidConfig(pub String);

pub type TetherState64 = geometry::TetherState<f64>;
pub type CartesianPoint64 = geometry::CartesianPoint<f64>;
pub type CartesianVelocity64 = geometry::CartesianVelocity<f64>;
pub type ControlCommand64 = geometry::ControlCommand<f64>;
pub type Jacobian64 = geometry::Jacobian3<f64>;
pub type PdGains64 = control::PdGains<f64>;
pub type PositionControllerState64 = control::PositionControllerState<f64>;
pub type VelocityControllerParams64 = control::VelocityControllerParams<f64>;
pub type CompositeParams64 = control::CompositeParams<f64>;
pub type PlantParams64 = plant::PlantParams<f64>;
pub type PlantState64 = plant::PlantState<f64>;
pub type WaypointPath64 = executor::WaypointPath<f64>;
pub type ControllerConfig64 = executor::ControllerConfig<f64>;
pub type EpisodeResult64 = executor::EpisodeResult<f64>;
pub type IdealPath64 = metrics::IdealPath<f64>;
pub type MetricsReport64 = metrics::MetricsReport<f64>;
