//! Tether-space kinematics.
//!
//! A UAV on a taut tether anchored at the origin is described by three
//! coordinates: tether length `L`, elevation `theta` measured from the
//! horizontal plane, and azimuth `phi` about the vertical axis. The frame is
//! reel-centered with `y` vertical; `phi = 0` points along `+z` and
//! `phi = pi/2` along `+x`.
//!
//! Forward map:
//!
//! ```text
//! x = L cos(theta) sin(phi)
//! y = L sin(theta)
//! z = L cos(theta) cos(phi)
//! ```
//!
//! The configuration `theta = pi/2` (straight overhead) is singular: azimuth
//! no longer moves the vehicle, the Jacobian drops to rank 2, and rate
//! inversion fails. [`singularity_margin`] (`cos theta`) quantifies the
//! distance to that configuration.

use thiserror::Error;

use crate::vec3;
use crate::Real;

/// Domain errors for tether-space maps and the velocity solve.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    /// The reel origin has no defined tether configuration.
    #[error("point at the reel origin has no tether configuration")]
    ZeroRadius,
    /// `cos(theta)` fell below the configured threshold; the Jacobian is too
    /// close to rank-deficient to invert.
    #[error("near-singular configuration: cos(elevation) = {margin:.6} < eps = {eps:.6}")]
    NearSingular { margin: f64, eps: f64 },
}

/// Tether configuration `(L, theta, phi)`.
///
/// Valid states have `L > 0`, `theta` in `(-pi/2, pi/2]`, `phi` in
/// `(-pi, pi]`. Elevation outside its range is an invariant violation, never
/// wrapped; azimuth is periodic and may be normalized with [`wrap_angle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TetherState<T> {
    /// Tether length in meters.
    pub length: T,
    /// Elevation above the horizontal plane, radians.
    pub elevation: T,
    /// Azimuth about the vertical axis, radians.
    pub azimuth: T,
}

impl<T: Real> TetherState<T> {
    /// Build a state, normalizing azimuth into `(-pi, pi]`.
    pub fn new(length: T, elevation: T, azimuth: T) -> Self {
        Self {
            length,
            elevation,
            azimuth: wrap_angle(azimuth),
        }
    }

    /// Whether all components are finite and inside the valid domain.
    pub fn is_valid(&self) -> bool {
        let half_pi = T::FRAC_PI_2();
        self.length.is_finite()
            && self.length > T::zero()
            && self.elevation.is_finite()
            && self.elevation > -half_pi
            && self.elevation <= half_pi
            && self.azimuth.is_finite()
            && self.azimuth > -T::PI()
            && self.azimuth <= T::PI()
    }
}

/// Cartesian position in the reel-centered frame, meters. `y` is vertical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianPoint<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> CartesianPoint<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [T; 3]) -> Self {
        Self {
            x: a[0],
            y: a[1],
            z: a[2],
        }
    }

    /// Euclidean distance to `other`.
    pub fn distance_to(self, other: Self) -> T {
        vec3::dist(self.to_array(), other.to_array())
    }

    /// Distance from the origin.
    pub fn norm(self) -> T {
        vec3::norm(self.to_array())
    }
}

/// Cartesian velocity, m/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianVelocity<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> CartesianVelocity<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm(self) -> T {
        vec3::norm(self.to_array())
    }
}

/// Tether-space rate command `(dL/dt, dtheta/dt, dphi/dt)` in (m/s, rad/s, rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlCommand<T> {
    pub length_rate: T,
    pub elevation_rate: T,
    pub azimuth_rate: T,
}

impl<T: Real> ControlCommand<T> {
    pub fn new(length_rate: T, elevation_rate: T, azimuth_rate: T) -> Self {
        Self {
            length_rate,
            elevation_rate,
            azimuth_rate,
        }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn to_array(self) -> [T; 3] {
        [self.length_rate, self.elevation_rate, self.azimuth_rate]
    }
}

/// Normalize an angle into `(-pi, pi]`.
pub fn wrap_angle<T: Real>(angle: T) -> T {
    let two_pi = T::TAU();
    let mut a = angle % two_pi;
    if a > T::PI() {
        a = a - two_pi;
    } else if a <= -T::PI() {
        a = a + two_pi;
    }
    a
}

/// Map a tether configuration to its Cartesian position.
pub fn tether_to_cartesian<T: Real>(s: TetherState<T>) -> CartesianPoint<T> {
    let (sin_t, cos_t) = s.elevation.sin_cos();
    let (sin_p, cos_p) = s.azimuth.sin_cos();
    CartesianPoint {
        x: s.length * cos_t * sin_p,
        y: s.length * sin_t,
        z: s.length * cos_t * cos_p,
    }
}

/// Recover the tether configuration of a Cartesian point.
///
/// Returns `L = |p|`, `theta = asin(y / L)`, `phi = atan2(x, z)`; the result
/// always satisfies the state invariants except that a point straight below
/// the reel yields `theta = -pi/2`, which no physical tether reaches.
pub fn cartesian_to_tether<T: Real>(p: CartesianPoint<T>) -> Result<TetherState<T>, GeometryError> {
    let length = p.norm();
    if length == T::zero() {
        return Err(GeometryError::ZeroRadius);
    }
    let ratio = (p.y / length).max(-T::one()).min(T::one());
    Ok(TetherState {
        length,
        elevation: ratio.asin(),
        azimuth: p.x.atan2(p.z),
    })
}

/// Jacobian of the forward map. Rows are `(x, y, z)`, columns `(L, theta, phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian3<T>(pub [[T; 3]; 3]);

impl<T: Real> Jacobian3<T> {
    /// Matrix-vector product `J * u`, mapping tether rates to Cartesian velocity.
    pub fn mul(&self, u: ControlCommand<T>) -> CartesianVelocity<T> {
        let m = &self.0;
        let v = u.to_array();
        CartesianVelocity {
            x: vec3::dot(m[0], v),
            y: vec3::dot(m[1], v),
            z: vec3::dot(m[2], v),
        }
    }

    /// Signed determinant by cofactor expansion. Equals `-L^2 cos(theta)` for
    /// a Jacobian taken at a valid state.
    pub fn det(&self) -> T {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Determinant magnitude, `L^2 cos(theta)` at a valid state. This is the
    /// volume-scale factor used when reasoning about closeness to the
    /// overhead singularity.
    pub fn det_magnitude(&self) -> T {
        self.det().abs()
    }

    /// Solve `J * u = v` by Gaussian elimination with partial pivoting.
    #[allow(clippy::needless_range_loop)] // index form mirrors the elimination
    fn solve(&self, v: [T; 3]) -> [T; 3] {
        let mut a = self.0;
        let mut b = v;
        for col in 0..3 {
            let mut pivot = col;
            for row in col + 1..3 {
                if a[row][col].abs() > a[pivot][col].abs() {
                    pivot = row;
                }
            }
            if pivot != col {
                a.swap(col, pivot);
                b.swap(col, pivot);
            }
            let p = a[col][col];
            debug_assert!(p != T::zero(), "pivot vanished despite margin check");
            for row in col + 1..3 {
                let f = a[row][col] / p;
                if f != T::zero() {
                    for k in col..3 {
                        a[row][k] = a[row][k] - f * a[col][k];
                    }
                    b[row] = b[row] - f * b[col];
                }
            }
        }
        let mut x = [T::zero(); 3];
        for row in (0..3).rev() {
            let mut s = b[row];
            for k in row + 1..3 {
                s = s - a[row][k] * x[k];
            }
            x[row] = s / a[row][row];
        }
        x
    }
}

/// Jacobian of the forward map at `s`.
pub fn jacobian<T: Real>(s: TetherState<T>) -> Jacobian3<T> {
    let (sin_t, cos_t) = s.elevation.sin_cos();
    let (sin_p, cos_p) = s.azimuth.sin_cos();
    let l = s.length;
    Jacobian3([
        [cos_t * sin_p, -l * sin_t * sin_p, l * cos_t * cos_p],
        [sin_t, l * cos_t, T::zero()],
        [cos_t * cos_p, -l * sin_t * cos_p, -l * cos_t * sin_p],
    ])
}

/// `cos(theta)`: 1 at the horizon, 0 straight overhead.
pub fn singularity_margin<T: Real>(s: TetherState<T>) -> T {
    s.elevation.cos()
}

/// Invert the Jacobian at `s` to find tether rates realizing the Cartesian
/// velocity `v`. Fails with [`GeometryError::NearSingular`] when
/// `cos(theta) < eps`; no damping or projection is attempted.
pub fn solve_velocity<T: Real>(
    s: TetherState<T>,
    v: CartesianVelocity<T>,
    eps: T,
) -> Result<ControlCommand<T>, GeometryError> {
    let margin = singularity_margin(s);
    if margin < eps {
        return Err(GeometryError::NearSingular {
            margin: margin.as_f64(),
            eps: eps.as_f64(),
        });
    }
    let u = jacobian(s).solve(v.to_array());
    Ok(ControlCommand {
        length_rate: u[0],
        elevation_rate: u[1],
        azimuth_rate: u[2],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

    fn state(l: f64, t: f64, p: f64) -> TetherState<f64> {
        TetherState::new(l, t, p)
    }

    #[test]
    fn forward_map_unit_cases() {
        let p = tether_to_cartesian(state(1.0, 0.0, 0.0));
        assert_relative_eq!(p.x, 0.0);
        assert_relative_eq!(p.y, 0.0);
        assert_relative_eq!(p.z, 1.0);

        let p = tether_to_cartesian(state(2.0, FRAC_PI_2, 0.0));
        assert_relative_eq!(p.x, 0.0, epsilon = 1e-15);
        assert_relative_eq!(p.y, 2.0);
        assert_relative_eq!(p.z, 0.0, epsilon = 1e-15);

        let p = tether_to_cartesian(state(2.0, FRAC_PI_4, FRAC_PI_4));
        assert_relative_eq!(p.x, 1.0, epsilon = 1e-15);
        assert_relative_eq!(p.y, SQRT_2, epsilon = 1e-15);
        assert_relative_eq!(p.z, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn inverse_map_unit_cases() {
        let s = cartesian_to_tether(CartesianPoint::new(0.0, 0.0, 2.0)).unwrap();
        assert_relative_eq!(s.length, 2.0);
        assert_relative_eq!(s.elevation, 0.0);
        assert_relative_eq!(s.azimuth, 0.0);

        // Third-quadrant horizontal point: azimuth comes back in (-pi, -pi/2).
        let s = cartesian_to_tether(CartesianPoint::new(-1.0, 0.0, -1.0)).unwrap();
        assert_relative_eq!(s.length, SQRT_2, epsilon = 1e-15);
        assert_relative_eq!(s.elevation, 0.0);
        assert_relative_eq!(s.azimuth, -3.0 * FRAC_PI_4, epsilon = 1e-15);
    }

    #[test]
    fn inverse_map_rejects_origin() {
        assert_eq!(
            cartesian_to_tether(CartesianPoint::new(0.0f64, 0.0, 0.0)),
            Err(GeometryError::ZeroRadius)
        );
    }

    #[test]
    fn roundtrip_spot_checks() {
        for &(l, t, p) in &[
            (1.0, 0.2, 0.3),
            (3.5, 0.27829965900511133, 1.1071487177940904),
            (0.5, -0.7, 2.9),
            (80.0, 1.2, -3.0),
        ] {
            let s = state(l, t, p);
            let back = cartesian_to_tether(tether_to_cartesian(s)).unwrap();
            assert_relative_eq!(back.length, s.length, epsilon = 1e-12 * l.max(1.0));
            assert_relative_eq!(back.elevation, s.elevation, epsilon = 1e-12);
            assert_relative_eq!(back.azimuth, s.azimuth, epsilon = 1e-12);
        }
    }

    #[test]
    fn jacobian_at_reference_state() {
        let j = jacobian(state(1.0, 0.0, 0.0)).0;
        let expected = [[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]];
        for r in 0..3 {
            for c in 0..3 {
                assert_relative_eq!(j[r][c], expected[r][c], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn jacobian_rank_two_at_vertical() {
        for &phi in &[0.0, 0.4, FRAC_PI_2, 2.0] {
            let j = jacobian(state(2.0, FRAC_PI_2, phi));
            assert!(j.det_magnitude() < 1e-15);
            // Some 2x2 minor must survive: the matrix is rank 2, not rank 1.
            let m = j.0;
            let mut max_minor = 0.0f64;
            for r0 in 0..3 {
                for r1 in r0 + 1..3 {
                    for c0 in 0..3 {
                        for c1 in c0 + 1..3 {
                            let minor = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
                            max_minor = max_minor.max(minor.abs());
                        }
                    }
                }
            }
            assert!(max_minor > 0.5, "rank collapsed below 2 at phi={phi}");
        }
    }

    #[test]
    fn determinant_matches_closed_form() {
        let j = jacobian(state(3.0, PI / 3.0, 0.7));
        assert_relative_eq!(j.det_magnitude(), 4.5, epsilon = 1e-12);
        // Signed value: the (L, theta, phi) ordering is left-handed here.
        assert_relative_eq!(j.det(), -4.5, epsilon = 1e-12);

        let j = jacobian(state(1.0, 0.0, 2.1));
        assert_relative_eq!(j.det_magnitude(), 1.0, epsilon = 1e-12);

        let j = jacobian(state(2.0, FRAC_PI_2, 0.3));
        assert_relative_eq!(j.det_magnitude(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn margin_examples() {
        assert_relative_eq!(
            singularity_margin(state(1.0, 80.0f64.to_radians(), 0.0)),
            0.17364817766693041,
            epsilon = 1e-12
        );
        assert_relative_eq!(singularity_margin(state(1.0, FRAC_PI_2, 0.0)), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn solve_velocity_reference_cases() {
        // At (1, 0, 0): dy needs elevation rate, dx needs azimuth rate.
        let s = state(1.0, 0.0, 0.0);
        let u = solve_velocity(s, CartesianVelocity::new(0.0, 0.5, 0.0), 0.05).unwrap();
        assert_relative_eq!(u.length_rate, 0.0, epsilon = 1e-12);
        assert_relative_eq!(u.elevation_rate, 0.5, epsilon = 1e-12);
        assert_relative_eq!(u.azimuth_rate, 0.0, epsilon = 1e-12);

        let u = solve_velocity(s, CartesianVelocity::new(0.3, 0.0, 0.0), 0.05).unwrap();
        assert_relative_eq!(u.length_rate, 0.0, epsilon = 1e-12);
        assert_relative_eq!(u.elevation_rate, 0.0, epsilon = 1e-12);
        assert_relative_eq!(u.azimuth_rate, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn solve_velocity_near_singular() {
        let s = state(2.0, 88.0f64.to_radians(), 0.4);
        let err = solve_velocity(s, CartesianVelocity::new(0.1, 0.0, 0.0), 0.05).unwrap_err();
        match err {
            GeometryError::NearSingular { margin, eps } => {
                assert!(margin < eps);
                assert_relative_eq!(eps, 0.05);
            }
            other => panic!("expected NearSingular, got {other:?}"),
        }
    }

    #[test]
    fn solve_residual_small_on_generic_state() {
        let s = state(3.5, 0.9, -2.2);
        let v = CartesianVelocity::new(0.21, -0.4, 0.13);
        let u = solve_velocity(s, v, 1e-6).unwrap();
        let r = jacobian(s).mul(u);
        assert_relative_eq!(r.x, v.x, epsilon = 1e-12);
        assert_relative_eq!(r.y, v.y, epsilon = 1e-12);
        assert_relative_eq!(r.z, v.z, epsilon = 1e-12);
    }

    #[test]
    fn wrap_angle_range_and_seam() {
        assert_relative_eq!(wrap_angle(6.0f64), 6.0 - 2.0 * PI, epsilon = 1e-12);
        assert_relative_eq!(wrap_angle(-PI), PI);
        assert_relative_eq!(wrap_angle(PI), PI);
        assert_relative_eq!(wrap_angle(3.0 * PI), PI, epsilon = 1e-12);
        assert_relative_eq!(wrap_angle(0.0f64), 0.0);
        for k in -8..=8 {
            let a = 0.37 + 0.91 * k as f64;
            let w = wrap_angle(a);
            assert!(w > -PI && w <= PI, "wrap left the target interval: {w}");
            // Same direction modulo a full turn.
            assert_relative_eq!((a - w).rem_euclid(2.0 * PI).min((w - a).rem_euclid(2.0 * PI)), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn generic_scalar_f32_smoke() {
        let s = TetherState::new(2.0f32, 0.5, 1.0);
        let p = tether_to_cartesian(s);
        let back = cartesian_to_tether(p).unwrap();
        assert!((back.length - s.length).abs() < 1e-5);
        assert!((back.elevation - s.elevation).abs() < 1e-5);
        assert!((back.azimuth - s.azimuth).abs() < 1e-5);
    }
}
