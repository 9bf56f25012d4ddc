//! Waypoint path execution.
//!
//! [`run_episode`] closes the loop sense -> waypoint advance -> control ->
//! plant at a fixed rate and records every step. Waypoints are accepted from
//! the *sensed* position; all of them inside the acceptance sphere are
//! consumed in a single step, so a radius larger than the waypoint spacing
//! cannot deadlock the executor.

use thiserror::Error;

use crate::control::{
    composite_step, position_step, velocity_step, CompositeParams, ControlError, ControllerMode,
    PdGains, PositionControllerState, VelocityControllerParams,
};
use crate::geometry::{tether_to_cartesian, CartesianPoint, ControlCommand, GeometryError, TetherState};
use crate::plant::{plant_step, sense, PlantParams, PlantState};
use crate::{InvalidConfig, Real};

/// Path construction and densification errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("a path needs at least two waypoints")]
    TooFewWaypoints,
    #[error("waypoint {index} sits at the reel origin")]
    WaypointAtOrigin { index: usize },
    #[error("acceptance radius must be positive")]
    NonPositiveRadius,
    #[error("segment {index} has zero horizontal length")]
    DegenerateSegment { index: usize },
    #[error(
        "segment {index} horizontal length {length} m is not an integer multiple of the {interval} m interval"
    )]
    NonDivisibleSegment { index: usize, length: f64, interval: f64 },
}

/// An ordered list of Cartesian waypoints plus the acceptance radius.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointPath<T> {
    waypoints: Vec<CartesianPoint<T>>,
    acceptance_radius: T,
}

impl<T: Real> WaypointPath<T> {
    pub fn new(waypoints: Vec<CartesianPoint<T>>, acceptance_radius: T) -> Result<Self, PathError> {
        if waypoints.len() < 2 {
            return Err(PathError::TooFewWaypoints);
        }
        if !acceptance_radius.is_finite() || acceptance_radius <= T::zero() {
            return Err(PathError::NonPositiveRadius);
        }
        for (index, wp) in waypoints.iter().enumerate() {
            if wp.norm() < T::of(1e-9) {
                return Err(PathError::WaypointAtOrigin { index });
            }
        }
        Ok(Self {
            waypoints,
            acceptance_radius,
        })
    }

    pub fn waypoints(&self) -> &[CartesianPoint<T>] {
        &self.waypoints
    }

    pub fn acceptance_radius(&self) -> T {
        self.acceptance_radius
    }
}

/// Linearly interpolate extra waypoints so that consecutive waypoints are
/// `horizontal_interval` apart in the horizontal (x-z) projection. Corner
/// points appear exactly once; every segment's horizontal length must be an
/// integer multiple of the interval.
pub fn densify_path<T: Real>(
    corners: &[CartesianPoint<T>],
    horizontal_interval: T,
) -> Result<Vec<CartesianPoint<T>>, PathError> {
    if corners.len() < 2 {
        return Err(PathError::TooFewWaypoints);
    }
    if !horizontal_interval.is_finite() || horizontal_interval <= T::zero() {
        return Err(PathError::NonPositiveRadius);
    }
    let mut out = Vec::with_capacity(corners.len());
    out.push(corners[0]);
    for index in 0..corners.len() - 1 {
        let a = corners[index];
        let b = corners[index + 1];
        let h = ((b.x - a.x) * (b.x - a.x) + (b.z - a.z) * (b.z - a.z)).sqrt();
        if h < T::of(1e-12) {
            return Err(PathError::DegenerateSegment { index });
        }
        let ratio = (h / horizontal_interval).as_f64();
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-6 {
            return Err(PathError::NonDivisibleSegment {
                index,
                length: h.as_f64(),
                interval: horizontal_interval.as_f64(),
            });
        }
        let n = n as usize;
        for k in 1..=n {
            let t = T::of(k as f64 / n as f64);
            out.push(CartesianPoint {
                x: a.x + (b.x - a.x) * t,
                y: a.y + (b.y - a.y) * t,
                z: a.z + (b.z - a.z) * t,
            });
        }
    }
    Ok(out)
}

/// Which primitive drives an episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControllerConfig<T> {
    Position {
        gains: PdGains<T>,
        derivative_filter_alpha: T,
    },
    Velocity(VelocityControllerParams<T>),
    Composite(CompositeParams<T>),
}

impl<T: Real> ControllerConfig<T> {
    pub fn validate(&self) -> Result<(), InvalidConfig> {
        match self {
            ControllerConfig::Position {
                gains,
                derivative_filter_alpha,
            } => PositionControllerState::new(*gains, *derivative_filter_alpha).validate(),
            ControllerConfig::Velocity(params) => params.validate(),
            ControllerConfig::Composite(params) => params.validate(),
        }
    }
}

/// Why an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// The final waypoint was accepted.
    Completed,
    /// The time limit elapsed first.
    Timeout,
    /// The velocity primitive refused to run this close to vertical.
    SingularityAbort,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Completed => "completed",
            Outcome::Timeout => "timeout",
            Outcome::SingularityAbort => "singularity_abort",
        }
    }
}

/// One record per control step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample<T> {
    /// Simulation time, seconds.
    pub t: T,
    pub true_state: TetherState<T>,
    pub sensed_state: TetherState<T>,
    pub true_position: CartesianPoint<T>,
    /// Command issued over `[t, t + dt)`; zero on the terminal record.
    pub command: ControlCommand<T>,
    pub active_waypoint: usize,
    pub mode: ControllerMode,
}

/// Everything an episode produced.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult<T> {
    pub trajectory: Vec<TrajectorySample<T>>,
    pub outcome: Outcome,
    /// Simulated seconds until the episode ended.
    pub elapsed: T,
}

enum ControllerRuntime<T: Real> {
    Position(PositionControllerState<T>),
    Velocity(VelocityControllerParams<T>),
    Composite {
        params: CompositeParams<T>,
        mode: ControllerMode,
        pd: PositionControllerState<T>,
    },
}

impl<T: Real> ControllerRuntime<T> {
    fn new(config: &ControllerConfig<T>) -> Self {
        match *config {
            ControllerConfig::Position {
                gains,
                derivative_filter_alpha,
            } => ControllerRuntime::Position(PositionControllerState::new(gains, derivative_filter_alpha)),
            ControllerConfig::Velocity(params) => ControllerRuntime::Velocity(params),
            ControllerConfig::Composite(params) => ControllerRuntime::Composite {
                params,
                mode: ControllerMode::Velocity,
                pd: PositionControllerState::new(params.position_gains, params.position_filter_alpha),
            },
        }
    }

    fn mode(&self) -> ControllerMode {
        match self {
            ControllerRuntime::Position(_) => ControllerMode::Position,
            ControllerRuntime::Velocity(_) => ControllerMode::Velocity,
            ControllerRuntime::Composite { mode, .. } => *mode,
        }
    }

    fn on_waypoint_change(&mut self) {
        match self {
            ControllerRuntime::Position(pd) => pd.reset(),
            ControllerRuntime::Velocity(_) => {}
            ControllerRuntime::Composite { pd, .. } => pd.reset(),
        }
    }

    /// Compute the command for the active waypoint. `final_waypoint` enables
    /// the velocity arrival ramp, which only the last waypoint gets.
    fn step(
        &mut self,
        waypoint: CartesianPoint<T>,
        final_waypoint: bool,
        sensed: TetherState<T>,
        dt: T,
    ) -> Result<ControlCommand<T>, ControlError> {
        match self {
            ControllerRuntime::Position(pd) => {
                let (cmd, next) = position_step(*pd, waypoint, sensed, dt)?;
                *pd = next;
                Ok(cmd)
            }
            ControllerRuntime::Velocity(params) => {
                let effective = if final_waypoint { *params } else { params.without_slowdown() };
                velocity_step(&effective, waypoint, sensed)
            }
            ControllerRuntime::Composite { params, mode, pd } => {
                let mut effective = *params;
                if !final_waypoint {
                    effective.velocity = effective.velocity.without_slowdown();
                }
                let (cmd, new_mode, new_pd) = composite_step(&effective, *mode, *pd, waypoint, sensed, dt)?;
                *mode = new_mode;
                *pd = new_pd;
                Ok(cmd)
            }
        }
    }
}

/// Run one episode of `controller` tracking `path` on a plant seeded by
/// `plant_params`, starting from `initial`, for at most `timeout` simulated
/// seconds. Fails only on invalid configuration; aborted episodes are still
/// ordinary results.
pub fn run_episode<T: Real>(
    path: &WaypointPath<T>,
    controller: &ControllerConfig<T>,
    plant_params: &PlantParams<T>,
    initial: TetherState<T>,
    timeout: T,
) -> Result<EpisodeResult<T>, InvalidConfig> {
    plant_params.validate()?;
    controller.validate()?;
    if !initial.is_valid() {
        return Err(InvalidConfig(format!("initial state out of domain: {initial:?}")));
    }
    if !timeout.is_finite() || timeout <= T::zero() {
        return Err(InvalidConfig("timeout must be positive".into()));
    }

    let waypoints = path.waypoints();
    let last = waypoints.len() - 1;
    let radius = path.acceptance_radius();
    let dt = plant_params.dt;

    let mut plant = PlantState::new(initial, plant_params);
    let mut runtime = ControllerRuntime::new(controller);
    let mut active = 0usize;
    let mut trajectory = Vec::new();

    let record_terminal = |trajectory: &mut Vec<TrajectorySample<T>>,
                               t: T,
                               plant: &PlantState<T>,
                               sensed: TetherState<T>,
                               active: usize,
                               mode: ControllerMode| {
        trajectory.push(TrajectorySample {
            t,
            true_state: plant.true_state,
            sensed_state: sensed,
            true_position: tether_to_cartesian(plant.true_state),
            command: ControlCommand::zero(),
            active_waypoint: active,
            mode,
        });
    };

    for step in 0u64.. {
        let t = T::of(step as f64) * dt;
        let (sensed, next_plant) = sense(plant, plant_params);
        plant = next_plant;
        let sensed_position = tether_to_cartesian(sensed);

        // Consume every waypoint the sensed position already satisfies.
        let mut reached_end = false;
        let mut advanced = false;
        while sensed_position.distance_to(waypoints[active]) <= radius {
            if active == last {
                reached_end = true;
                break;
            }
            active += 1;
            advanced = true;
        }
        if advanced {
            runtime.on_waypoint_change();
        }
        if reached_end {
            record_terminal(&mut trajectory, t, &plant, sensed, active, runtime.mode());
            return Ok(EpisodeResult {
                trajectory,
                outcome: Outcome::Completed,
                elapsed: t,
            });
        }
        if t >= timeout {
            record_terminal(&mut trajectory, t, &plant, sensed, active, runtime.mode());
            return Ok(EpisodeResult {
                trajectory,
                outcome: Outcome::Timeout,
                elapsed: t,
            });
        }

        let command = match runtime.step(waypoints[active], active == last, sensed, dt) {
            Ok(cmd) => cmd,
            Err(ControlError::Geometry(GeometryError::NearSingular { .. })) => {
                record_terminal(&mut trajectory, t, &plant, sensed, active, runtime.mode());
                return Ok(EpisodeResult {
                    trajectory,
                    outcome: Outcome::SingularityAbort,
                    elapsed: t,
                });
            }
            // The waypoint is valid but momentarily indistinguishable from
            // the sensed position: hold and let the next sense advance.
            Err(ControlError::CoincidentTarget) => ControlCommand::zero(),
            Err(ControlError::Geometry(GeometryError::ZeroRadius)) => {
                unreachable!("waypoints are validated away from the origin")
            }
        };

        trajectory.push(TrajectorySample {
            t,
            true_state: plant.true_state,
            sensed_state: sensed,
            true_position: tether_to_cartesian(plant.true_state),
            command,
            active_waypoint: active,
            mode: runtime.mode(),
        });
        plant = plant_step(plant, command, plant_params);
    }
    unreachable!("the step loop always returns")
}
