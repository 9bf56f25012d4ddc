//! Synthetic first-order plant.
//!
//! The vehicle tracks tether-space rate commands instead of modelling rigid
//! body dynamics: commands are clamped to per-channel rate limits, the
//! achieved rate lags the command through a first-order filter, and the state
//! integrates with explicit Euler. Sensing adds per-channel Gaussian noise
//! from a counter-seeded stream, so every run is a pure function of its seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{wrap_angle, ControlCommand, TetherState};
use crate::{InvalidConfig, Real};

/// Elevation is kept this far away from the vertical singularity.
const ELEVATION_GUARD: f64 = 1e-6;

/// Per-channel sensor noise, standard deviations in (m, rad, rad).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorNoise<T> {
    pub length_std: T,
    pub elevation_std: T,
    pub azimuth_std: T,
}

impl<T: Real> SensorNoise<T> {
    pub fn none() -> Self {
        Self {
            length_std: T::zero(),
            elevation_std: T::zero(),
            azimuth_std: T::zero(),
        }
    }
}

/// Plant configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams<T> {
    /// Per-channel rate limits, interpreted symmetrically (|rate| <= max).
    pub max_rate: ControlCommand<T>,
    /// Command-tracking time constant in seconds; 0 tracks instantly.
    pub actuator_tau: T,
    pub noise: SensorNoise<T>,
    /// Tether travel limits, meters.
    pub min_length: T,
    pub max_length: T,
    /// Integration step, seconds.
    pub dt: T,
    /// Seed for the sensor-noise stream.
    pub seed: u64,
}

impl<T: Real> PlantParams<T> {
    pub fn validate(&self) -> Result<(), InvalidConfig> {
        if !self.dt.is_finite() || self.dt <= T::zero() {
            return Err(InvalidConfig("dt must be positive".into()));
        }
        let limits = self.max_rate.to_array();
        if limits.iter().any(|r| !r.is_finite() || *r <= T::zero()) {
            return Err(InvalidConfig("max_rate components must be positive".into()));
        }
        if !self.actuator_tau.is_finite() || self.actuator_tau < T::zero() {
            return Err(InvalidConfig("actuator_tau must be non-negative".into()));
        }
        let sigmas = [self.noise.length_std, self.noise.elevation_std, self.noise.azimuth_std];
        if sigmas.iter().any(|s| !s.is_finite() || *s < T::zero()) {
            return Err(InvalidConfig("noise standard deviations must be non-negative".into()));
        }
        if !(self.min_length.is_finite()
            && self.max_length.is_finite()
            && T::zero() < self.min_length
            && self.min_length < self.max_length)
        {
            return Err(InvalidConfig("tether limits must satisfy 0 < min_length < max_length".into()));
        }
        Ok(())
    }
}

/// Mutable plant state: true configuration, lagged actuator rate, noise rng.
#[derive(Debug, Clone)]
pub struct PlantState<T> {
    pub true_state: TetherState<T>,
    pub achieved_rate: ControlCommand<T>,
    rng: ChaCha8Rng,
}

impl<T: Real> PlantState<T> {
    /// Start at `initial` with the actuator at rest and a fresh noise stream.
    pub fn new(initial: TetherState<T>, params: &PlantParams<T>) -> Self {
        Self {
            true_state: initial,
            achieved_rate: ControlCommand::zero(),
            rng: ChaCha8Rng::seed_from_u64(params.seed),
        }
    }
}

#[inline]
fn clamp_abs<T: Real>(value: T, limit: T) -> T {
    value.max(-limit).min(limit)
}

/// Advance the plant by one step under `cmd`.
///
/// Order: clamp the command to the rate limits, lag the achieved rate toward
/// it (`tau <= dt` collapses to a jump), Euler-integrate, then clamp length
/// to its travel range, hold elevation inside `(-pi/2, pi/2)` by
/// [`ELEVATION_GUARD`], and wrap azimuth.
pub fn plant_step<T: Real>(
    mut state: PlantState<T>,
    cmd: ControlCommand<T>,
    params: &PlantParams<T>,
) -> PlantState<T> {
    let clamped = ControlCommand {
        length_rate: clamp_abs(cmd.length_rate, params.max_rate.length_rate),
        elevation_rate: clamp_abs(cmd.elevation_rate, params.max_rate.elevation_rate),
        azimuth_rate: clamp_abs(cmd.azimuth_rate, params.max_rate.azimuth_rate),
    };
    let blend = if params.actuator_tau <= params.dt {
        T::one()
    } else {
        params.dt / params.actuator_tau
    };
    let a = state.achieved_rate;
    let achieved = ControlCommand {
        length_rate: a.length_rate + (clamped.length_rate - a.length_rate) * blend,
        elevation_rate: a.elevation_rate + (clamped.elevation_rate - a.elevation_rate) * blend,
        azimuth_rate: a.azimuth_rate + (clamped.azimuth_rate - a.azimuth_rate) * blend,
    };

    let s = state.true_state;
    let guard = T::FRAC_PI_2() - T::of(ELEVATION_GUARD);
    state.true_state = TetherState {
        length: (s.length + achieved.length_rate * params.dt)
            .max(params.min_length)
            .min(params.max_length),
        elevation: (s.elevation + achieved.elevation_rate * params.dt)
            .max(-guard)
            .min(guard),
        azimuth: wrap_angle(s.azimuth + achieved.azimuth_rate * params.dt),
    };
    state.achieved_rate = achieved;
    state
}

/// Read the sensors: true state plus Gaussian noise per channel, with the
/// result re-normalized into the valid state domain. Draw order is fixed
/// (length, elevation, azimuth) so streams are reproducible.
pub fn sense<T: Real>(mut state: PlantState<T>, params: &PlantParams<T>) -> (TetherState<T>, PlantState<T>) {
    let nl = T::standard_normal(&mut state.rng) * params.noise.length_std;
    let ne = T::standard_normal(&mut state.rng) * params.noise.elevation_std;
    let na = T::standard_normal(&mut state.rng) * params.noise.azimuth_std;
    let s = state.true_state;
    let floor = T::of(1e-9);
    let sensed = TetherState {
        length: (s.length + nl).max(floor),
        elevation: (s.elevation + ne)
            .max(-T::FRAC_PI_2() + floor)
            .min(T::FRAC_PI_2()),
        azimuth: wrap_angle(s.azimuth + na),
    };
    (sensed, state)
}
