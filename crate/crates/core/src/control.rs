//! Waypoint-tracking motion primitives in tether space.
//!
//! Two ways to chase a Cartesian waypoint:
//!
//! * **Position control** ([`position_step`]): convert the waypoint to a
//!   tether configuration and run an independent PD loop on each channel.
//!   Cheap and singularity-free, but the channels know nothing about each
//!   other, so equal-length targets produce constant-radius arcs instead of
//!   straight lines.
//! * **Velocity control** ([`velocity_step`]): aim a constant-speed Cartesian
//!   velocity at the waypoint and invert the Jacobian for tether rates.
//!   Tracks straight lines, but refuses to operate near the overhead
//!   singularity.
//!
//! [`composite_step`] runs velocity control and falls back to position
//! control inside a hysteresis band around the singularity.

use thiserror::Error;

use crate::geometry::{
    cartesian_to_tether, singularity_margin, solve_velocity, tether_to_cartesian, wrap_angle,
    CartesianPoint, CartesianVelocity, ControlCommand, GeometryError, TetherState,
};
use crate::{InvalidConfig, Real};

/// Controller-step errors.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ControlError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    /// Waypoint and vehicle coincide; the aim direction is undefined.
    #[error("waypoint coincides with the current position")]
    CoincidentTarget,
}

/// Per-channel PD gains. Proportional gains in 1/s, derivative gains
/// dimensionless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdGains<T> {
    pub kp_length: T,
    pub kp_elevation: T,
    pub kp_azimuth: T,
    pub kd_length: T,
    pub kd_elevation: T,
    pub kd_azimuth: T,
}

impl<T: Real> PdGains<T> {
    /// Same `kp` and `kd` on every channel.
    pub fn uniform(kp: T, kd: T) -> Self {
        Self {
            kp_length: kp,
            kp_elevation: kp,
            kp_azimuth: kp,
            kd_length: kd,
            kd_elevation: kd,
            kd_azimuth: kd,
        }
    }

    pub fn validate(&self) -> Result<(), InvalidConfig> {
        let all = [
            self.kp_length,
            self.kp_elevation,
            self.kp_azimuth,
            self.kd_length,
            self.kd_elevation,
            self.kd_azimuth,
        ];
        if all.iter().any(|g| !g.is_finite() || *g < T::zero()) {
            return Err(InvalidConfig("PD gains must be finite and non-negative".into()));
        }
        if self.kp_length == T::zero() && self.kp_elevation == T::zero() && self.kp_azimuth == T::zero() {
            return Err(InvalidConfig("at least one proportional gain must be positive".into()));
        }
        Ok(())
    }
}

/// Per-channel tracking error `(e_L, e_theta, e_phi)`; azimuth wrapped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TetherError<T> {
    pub length: T,
    pub elevation: T,
    pub azimuth: T,
}

impl<T: Real> TetherError<T> {
    fn zero() -> Self {
        Self {
            length: T::zero(),
            elevation: T::zero(),
            azimuth: T::zero(),
        }
    }
}

/// Channel-wise error between a desired and a sensed configuration. The
/// azimuth difference is wrapped into `(-pi, pi]`, so the controller always
/// turns the short way.
pub fn tether_error<T: Real>(desired: TetherState<T>, sensed: TetherState<T>) -> TetherError<T> {
    TetherError {
        length: desired.length - sensed.length,
        elevation: desired.elevation - sensed.elevation,
        azimuth: wrap_angle(desired.azimuth - sensed.azimuth),
    }
}

/// PD loop state. Owns the gains, the derivative filter coefficient, and the
/// inter-step memory (previous error, filtered derivative).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionControllerState<T> {
    pub gains: PdGains<T>,
    /// Low-pass blend for the error derivative, in `[0, 1]`: 1 uses the raw
    /// backward difference, 0 disables the derivative term.
    pub derivative_filter_alpha: T,
    previous_error: Option<TetherError<T>>,
    filtered_derivative: TetherError<T>,
}

impl<T: Real> PositionControllerState<T> {
    pub fn new(gains: PdGains<T>, derivative_filter_alpha: T) -> Self {
        Self {
            gains,
            derivative_filter_alpha,
            previous_error: None,
            filtered_derivative: TetherError::zero(),
        }
    }

    /// Drop inter-step memory. Call when the tracked waypoint changes so the
    /// derivative never differentiates across a target jump.
    pub fn reset(&mut self) {
        self.previous_error = None;
        self.filtered_derivative = TetherError::zero();
    }

    pub fn validate(&self) -> Result<(), InvalidConfig> {
        self.gains.validate()?;
        let a = self.derivative_filter_alpha;
        if !a.is_finite() || a < T::zero() || a > T::one() {
            return Err(InvalidConfig("derivative_filter_alpha must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// One PD step toward `waypoint`.
///
/// The waypoint is converted through [`cartesian_to_tether`]; each channel
/// gets `u = kp * e + kd * de`, where `de` is a low-pass filtered backward
/// difference of the error (azimuth difference wrapped). Saturation is the
/// plant's job. Fails only if the waypoint sits exactly at the reel origin.
pub fn position_step<T: Real>(
    mut state: PositionControllerState<T>,
    waypoint: CartesianPoint<T>,
    sensed: TetherState<T>,
    dt: T,
) -> Result<(ControlCommand<T>, PositionControllerState<T>), ControlError> {
    let desired = cartesian_to_tether(waypoint)?;
    let e = tether_error(desired, sensed);

    let alpha = state.derivative_filter_alpha;
    let de = match state.previous_error {
        Some(prev) => {
            let raw = TetherError {
                length: (e.length - prev.length) / dt,
                elevation: (e.elevation - prev.elevation) / dt,
                azimuth: wrap_angle(e.azimuth - prev.azimuth) / dt,
            };
            let keep = T::one() - alpha;
            TetherError {
                length: alpha * raw.length + keep * state.filtered_derivative.length,
                elevation: alpha * raw.elevation + keep * state.filtered_derivative.elevation,
                azimuth: alpha * raw.azimuth + keep * state.filtered_derivative.azimuth,
            }
        }
        None => TetherError::zero(),
    };

    let g = state.gains;
    let cmd = ControlCommand {
        length_rate: g.kp_length * e.length + g.kd_length * de.length,
        elevation_rate: g.kp_elevation * e.elevation + g.kd_elevation * de.elevation,
        azimuth_rate: g.kp_azimuth * e.azimuth + g.kd_azimuth * de.azimuth,
    };
    state.previous_error = Some(e);
    state.filtered_derivative = de;
    Ok((cmd, state))
}

/// Velocity-primitive parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityControllerParams<T> {
    /// Commanded Cartesian speed, m/s.
    pub speed: T,
    /// Singularity threshold on `cos(theta)` handed to [`solve_velocity`].
    pub singularity_eps: T,
    /// Inside this distance the speed scales linearly down to zero. Zero
    /// disables the ramp; the executor enables it for the final waypoint only.
    pub arrival_slowdown_radius: T,
}

impl<T: Real> VelocityControllerParams<T> {
    pub fn validate(&self) -> Result<(), InvalidConfig> {
        if !self.speed.is_finite() || self.speed <= T::zero() {
            return Err(InvalidConfig("speed must be positive".into()));
        }
        if !self.singularity_eps.is_finite()
            || self.singularity_eps <= T::zero()
            || self.singularity_eps >= T::one()
        {
            return Err(InvalidConfig("singularity_eps must lie in (0, 1)".into()));
        }
        if !self.arrival_slowdown_radius.is_finite() || self.arrival_slowdown_radius < T::zero() {
            return Err(InvalidConfig("arrival_slowdown_radius must be non-negative".into()));
        }
        Ok(())
    }

    /// Copy with the arrival ramp disabled.
    pub fn without_slowdown(mut self) -> Self {
        self.arrival_slowdown_radius = T::zero();
        self
    }
}

/// One velocity step toward `waypoint`: aim a straight-line Cartesian
/// velocity at the waypoint and invert the Jacobian at the sensed state.
pub fn velocity_step<T: Real>(
    params: &VelocityControllerParams<T>,
    waypoint: CartesianPoint<T>,
    sensed: TetherState<T>,
) -> Result<ControlCommand<T>, ControlError> {
    let current = tether_to_cartesian(sensed);
    let dx = waypoint.x - current.x;
    let dy = waypoint.y - current.y;
    let dz = waypoint.z - current.z;
    let dist = (dx * dx + dy * dy + dz * dz).sqrt();
    if dist < T::of(1e-9) {
        return Err(ControlError::CoincidentTarget);
    }
    let speed = if params.arrival_slowdown_radius > T::zero() && dist < params.arrival_slowdown_radius {
        params.speed * dist / params.arrival_slowdown_radius
    } else {
        params.speed
    };
    let k = speed / dist;
    let v = CartesianVelocity::new(dx * k, dy * k, dz * k);
    Ok(solve_velocity(sensed, v, params.singularity_eps)?)
}

/// Which primitive a composite controller is currently running.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerMode {
    Position,
    Velocity,
}

impl ControllerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ControllerMode::Position => "position",
            ControllerMode::Velocity => "velocity",
        }
    }
}

/// Composite-controller parameters. The margins are `cos(theta)` thresholds
/// with `0 < enter < exit < 1`: velocity hands over to position when the
/// margin drops below `enter_position_margin`, and position hands back once
/// it climbs above `exit_position_margin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeParams<T> {
    pub velocity: VelocityControllerParams<T>,
    pub position_gains: PdGains<T>,
    pub position_filter_alpha: T,
    pub enter_position_margin: T,
    pub exit_position_margin: T,
}

impl<T: Real> CompositeParams<T> {
    pub fn validate(&self) -> Result<(), InvalidConfig> {
        self.velocity.validate()?;
        PositionControllerState::new(self.position_gains, self.position_filter_alpha).validate()?;
        let (enter, exit) = (self.enter_position_margin, self.exit_position_margin);
        if !(enter.is_finite() && exit.is_finite() && T::zero() < enter && enter < exit && exit < T::one()) {
            return Err(InvalidConfig(
                "composite margins must satisfy 0 < enter_position_margin < exit_position_margin < 1".into(),
            ));
        }
        Ok(())
    }
}

/// One composite step: update the mode against the hysteresis band, then
/// delegate. The position fallback also catches a near-singular report from
/// the velocity solve, so this never returns `NearSingular`. PD memory is
/// cleared on every switch into position mode.
pub fn composite_step<T: Real>(
    params: &CompositeParams<T>,
    mode: ControllerMode,
    mut pd: PositionControllerState<T>,
    waypoint: CartesianPoint<T>,
    sensed: TetherState<T>,
    dt: T,
) -> Result<(ControlCommand<T>, ControllerMode, PositionControllerState<T>), ControlError> {
    let margin = singularity_margin(sensed);
    let mut mode = mode;
    match mode {
        ControllerMode::Velocity if margin < params.enter_position_margin => {
            mode = ControllerMode::Position;
            pd.reset();
        }
        ControllerMode::Position if margin > params.exit_position_margin => {
            mode = ControllerMode::Velocity;
        }
        _ => {}
    }

    if mode == ControllerMode::Velocity {
        match velocity_step(&params.velocity, waypoint, sensed) {
            Ok(cmd) => return Ok((cmd, mode, pd)),
            Err(ControlError::Geometry(GeometryError::NearSingular { .. })) => {
                mode = ControllerMode::Position;
                pd.reset();
            }
            Err(other) => return Err(other),
        }
    }
    let (cmd, pd) = position_step(pd, waypoint, sensed, dt)?;
    Ok((cmd, mode, pd))
}
