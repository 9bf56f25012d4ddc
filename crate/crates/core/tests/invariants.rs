//! Randomized invariants over the geometry, control and plant layers.
//!
//! Tolerances are scaled by max(1, magnitude) so that a long tether does not
//! fail an absolute bound that is only meaningful near the unit sphere.

use proptest::prelude::*;

use tethernav_core::control::{
    tether_error, PdGains, PositionControllerState, VelocityControllerParams,
    position_step, velocity_step,
};
use tethernav_core::executor::densify_path;
use tethernav_core::geometry::{
    cartesian_to_tether, jacobian, solve_velocity, tether_to_cartesian, wrap_angle,
    CartesianPoint, ControlCommand, TetherState,
};
use tethernav_core::metrics::{cross_track_error, path_smoothness, IdealPath};
use tethernav_core::plant::{plant_step, PlantParams, PlantState, SensorNoise};

const PI: f64 = std::f64::consts::PI;

/// States comfortably inside the domain: the elevation cap of 1.4 rad keeps
/// cos(theta) >= 0.17, clear of the singularity threshold.
fn state_strategy() -> impl Strategy<Value = TetherState<f64>> {
    (0.2f64..30.0, -1.4f64..1.4, -PI..PI)
        .prop_map(|(l, th, ph)| TetherState::new(l, th, ph))
}

fn point_strategy() -> impl Strategy<Value = CartesianPoint<f64>> {
    (-20.0f64..20.0, -20.0f64..20.0, -20.0f64..20.0)
        .prop_map(|(x, y, z)| CartesianPoint::new(x, y, z))
        .prop_filter("away from the reel", |p| p.norm() > 0.1)
}

fn wrapped_diff(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

proptest! {
    #[test]
    fn roundtrip_tether_cartesian_tether(s in state_strategy()) {
        let back = cartesian_to_tether(tether_to_cartesian(s)).unwrap();
        let tol = 1e-9 * s.length.max(1.0);
        prop_assert!((back.length - s.length).abs() <= tol);
        prop_assert!((back.elevation - s.elevation).abs() <= 1e-9);
        prop_assert!(wrapped_diff(back.azimuth, s.azimuth) <= 1e-9);
    }

    #[test]
    fn roundtrip_cartesian_tether_cartesian(p in point_strategy()) {
        let fwd = tether_to_cartesian(cartesian_to_tether(p).unwrap());
        prop_assert!(p.distance_to(fwd) <= 1e-9 * p.norm().max(1.0));
    }

    #[test]
    fn jacobian_matches_finite_differences(s in state_strategy()) {
        let j = jacobian(s).0;
        let h = 1e-6;
        let perturb = |dl: f64, dth: f64, dph: f64| {
            tether_to_cartesian(TetherState {
                length: s.length + dl,
                elevation: s.elevation + dth,
                azimuth: s.azimuth + dph,
            })
            .to_array()
        };
        let tol = 1e-5 * s.length.max(1.0);
        #[allow(clippy::needless_range_loop)] // col indexes j and the offset table together
        for col in 0..3 {
            let (d, offs) = match col {
                0 => (h, (h, 0.0, 0.0)),
                1 => (h, (0.0, h, 0.0)),
                _ => (h, (0.0, 0.0, h)),
            };
            let plus = perturb(offs.0, offs.1, offs.2);
            let minus = perturb(-offs.0, -offs.1, -offs.2);
            for row in 0..3 {
                let fd = (plus[row] - minus[row]) / (2.0 * d);
                prop_assert!(
                    (j[row][col] - fd).abs() <= tol,
                    "entry ({row},{col}): analytic {} vs fd {}",
                    j[row][col],
                    fd
                );
            }
        }
    }

    #[test]
    fn determinant_closed_form(s in state_strategy()) {
        let j = jacobian(s);
        let expected = s.length * s.length * s.elevation.cos();
        let tol = 1e-9 * expected.max(1.0);
        prop_assert!((j.det_magnitude() - expected).abs() <= tol);
        prop_assert!((j.det() + expected).abs() <= tol);
    }

    #[test]
    fn solve_velocity_residual_is_tiny(
        s in state_strategy(),
        vx in -1.0f64..1.0,
        vy in -1.0f64..1.0,
        vz in -1.0f64..1.0,
    ) {
        prop_assume!(s.elevation.cos() >= 0.1);
        let v = tethernav_core::geometry::CartesianVelocity::new(vx, vy, vz);
        let u = solve_velocity(s, v, 0.05).unwrap();
        let achieved = jacobian(s).mul(u);
        let residual = ((achieved.x - v.x).powi(2)
            + (achieved.y - v.y).powi(2)
            + (achieved.z - v.z).powi(2))
        .sqrt();
        prop_assert!(residual <= 1e-9 * s.length.max(1.0));
    }

    #[test]
    fn velocity_command_realizes_requested_speed(
        s in state_strategy(),
        wp in point_strategy(),
        speed in 0.1f64..2.0,
    ) {
        prop_assume!(s.elevation.cos() >= 0.1);
        let here = tether_to_cartesian(s);
        prop_assume!(here.distance_to(wp) > 1e-3);
        let params = VelocityControllerParams {
            speed,
            singularity_eps: 0.05,
            arrival_slowdown_radius: 0.0,
        };
        let u = velocity_step(&params, wp, s).unwrap();
        let realized = jacobian(s).mul(u).norm();
        prop_assert!((realized - speed).abs() <= 1e-9 * speed.max(1.0));
    }

    #[test]
    fn azimuth_error_stays_within_half_turn(
        a in state_strategy(),
        b in state_strategy(),
    ) {
        let e = tether_error(a, b);
        prop_assert!(e.azimuth.abs() <= PI + 1e-12);
    }

    #[test]
    fn wrap_angle_is_canonical(x in -50.0f64..50.0) {
        let w = wrap_angle(x);
        prop_assert!(-PI < w && w <= PI);
        prop_assert!((wrap_angle(w) - w).abs() <= 1e-15);
        // Shifting by full turns does not change the canonical angle.
        let shifted = wrap_angle(x + 4.0 * PI);
        prop_assert!(wrapped_diff(shifted, w) <= 1e-9);
    }

    #[test]
    fn first_position_step_is_pure_proportional(
        waypoint in point_strategy(),
        sensed in state_strategy(),
        kp in 0.1f64..2.0,
    ) {
        let gains = PdGains::uniform(kp, 0.3);
        let state = PositionControllerState::new(gains, 0.7);
        let (cmd, _) = position_step(state, waypoint, sensed, 0.01).unwrap();
        let e = tether_error(cartesian_to_tether(waypoint).unwrap(), sensed);
        prop_assert!((cmd.length_rate - kp * e.length).abs() <= 1e-12 * e.length.abs().max(1.0));
        prop_assert!((cmd.elevation_rate - kp * e.elevation).abs() <= 1e-12);
        prop_assert!((cmd.azimuth_rate - kp * e.azimuth).abs() <= 1e-12);
    }

    #[test]
    fn plant_obeys_rate_limits_and_domain(
        s in state_strategy(),
        cl in -100.0f64..100.0,
        ce in -100.0f64..100.0,
        ca in -100.0f64..100.0,
        tau in 0.0f64..0.5,
    ) {
        let params = PlantParams {
            max_rate: ControlCommand::new(1.0, 1.0, 1.0),
            actuator_tau: tau,
            noise: SensorNoise::none(),
            min_length: 0.1,
            max_length: 50.0,
            dt: 0.01,
            seed: 7,
        };
        let mut plant = PlantState::new(s, &params);
        for _ in 0..5 {
            plant = plant_step(plant, ControlCommand::new(cl, ce, ca), &params);
            let r = plant.achieved_rate.to_array();
            for v in r {
                prop_assert!(v.abs() <= 1.0 + 1e-12);
            }
            let t = plant.true_state;
            prop_assert!(t.length >= params.min_length && t.length <= params.max_length);
            prop_assert!(t.elevation.abs() <= std::f64::consts::FRAC_PI_2);
            prop_assert!(-PI < t.azimuth && t.azimuth <= PI);
            prop_assert!(t.is_valid());
        }
    }

    #[test]
    fn plant_noise_stream_is_deterministic(s in state_strategy(), seed in any::<u64>()) {
        let params = PlantParams {
            max_rate: ControlCommand::new(1.0, 1.0, 1.0),
            actuator_tau: 0.15,
            noise: SensorNoise { length_std: 0.01, elevation_std: 0.005, azimuth_std: 0.005 },
            min_length: 0.1,
            max_length: 50.0,
            dt: 0.01,
            seed,
        };
        let run = |mut plant: PlantState<f64>| {
            let mut out = Vec::new();
            for _ in 0..4 {
                let (sensed, next) = tethernav_core::plant::sense(plant, &params);
                plant = plant_step(next, ControlCommand::new(0.3, -0.2, 0.1), &params);
                out.push([sensed.length, sensed.elevation, sensed.azimuth]);
            }
            out
        };
        let a = run(PlantState::new(s, &params));
        let b = run(PlantState::new(s, &params));
        for (x, y) in a.iter().zip(&b) {
            for k in 0..3 {
                prop_assert!(x[k].to_bits() == y[k].to_bits());
            }
        }
    }

    #[test]
    fn densified_count_matches_segment_sums(
        counts in proptest::collection::vec(1usize..15, 1..4),
        heading in -PI..PI,
        interval in prop_oneof![Just(0.2f64), Just(0.25), Just(0.5)],
        dy in -0.5f64..0.5,
    ) {
        let mut corners = vec![CartesianPoint::new(1.0, 1.0, 1.0)];
        for (i, &n) in counts.iter().enumerate() {
            let prev = *corners.last().unwrap();
            // Alternate heading so corners do not fold back onto the reel.
            let a = heading + i as f64;
            let h = n as f64 * interval;
            corners.push(CartesianPoint::new(prev.x + h * a.sin(), prev.y + dy, prev.z + h * a.cos()));
        }
        let dense = densify_path(&corners, interval).unwrap();
        let expected: usize = counts.iter().sum::<usize>() + 1;
        prop_assert_eq!(dense.len(), expected);
    }

    #[test]
    fn cross_track_error_is_rigid_motion_invariant(
        p in point_strategy(),
        corners in proptest::collection::vec(
            (-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0),
            2..5
        ),
        axis in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
        angle in -PI..PI,
        shift in (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0),
    ) {
        let pts: Vec<CartesianPoint<f64>> =
            corners.iter().map(|&(x, y, z)| CartesianPoint::new(x, y, z)).collect();
        let distinct = pts.windows(2).all(|w| w[0].distance_to(w[1]) >= 1e-3);
        prop_assume!(distinct);
        let axis_norm = (axis.0 * axis.0 + axis.1 * axis.1 + axis.2 * axis.2).sqrt();
        prop_assume!(axis_norm > 1e-3);
        let k = [axis.0 / axis_norm, axis.1 / axis_norm, axis.2 / axis_norm];
        let rotate = |p: CartesianPoint<f64>| {
            let v = p.to_array();
            let (c, s) = (angle.cos(), angle.sin());
            let kv = [
                k[1] * v[2] - k[2] * v[1],
                k[2] * v[0] - k[0] * v[2],
                k[0] * v[1] - k[1] * v[0],
            ];
            let kdv = k[0] * v[0] + k[1] * v[1] + k[2] * v[2];
            CartesianPoint::new(
                v[0] * c + kv[0] * s + k[0] * kdv * (1.0 - c) + shift.0,
                v[1] * c + kv[1] * s + k[1] * kdv * (1.0 - c) + shift.1,
                v[2] * c + kv[2] * s + k[2] * kdv * (1.0 - c) + shift.2,
            )
        };
        let ideal = IdealPath::new(pts.clone()).unwrap();
        let moved = IdealPath::new(pts.iter().map(|&q| rotate(q)).collect()).unwrap();
        let before = cross_track_error(p, &ideal);
        let after = cross_track_error(rotate(p), &moved);
        prop_assert!((before - after).abs() <= 1e-9 * before.max(1.0));
    }

    #[test]
    fn smoothness_is_scale_invariant(
        turns in proptest::collection::vec(-0.8f64..0.8, 6..12),
        scale in 0.3f64..4.0,
    ) {
        let mut heading: f64 = 0.0;
        let mut base = vec![CartesianPoint::new(0.0, 0.0, 0.0)];
        for &t in &turns {
            heading += t;
            let prev = *base.last().unwrap();
            base.push(CartesianPoint::new(prev.x + heading.cos(), prev.y, prev.z + heading.sin()));
        }
        let scaled: Vec<CartesianPoint<f64>> =
            base.iter().map(|p| CartesianPoint::new(p.x * scale, p.y * scale, p.z * scale)).collect();
        // 0.37 keeps resample targets away from the unit-length corner
        // boundaries, where rounding could flip a point between segments and
        // change the resample count.
        let s_base = path_smoothness(&base, 0.37).unwrap();
        let s_scaled = path_smoothness(&scaled, 0.37 * scale).unwrap();
        prop_assert!((s_base - s_scaled).abs() <= 1e-6);
    }
}
