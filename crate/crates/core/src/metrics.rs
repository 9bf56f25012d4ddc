//! Trajectory quality metrics.
//!
//! Two scalars summarize an executed trajectory against the ideal corner
//! polyline it was supposed to follow:
//!
//! * **Cross-track error**: distance from a point to the nearest closed
//!   segment of the ideal polyline, reported as mean and max over the
//!   trajectory's time samples.
//! * **Smoothness**: mean turning angle between consecutive chords after
//!   resampling the trajectory at uniform arc length. Resampling first makes
//!   the number comparable across trajectories recorded at different speeds;
//!   without it, slow segments would dominate the mean.

use thiserror::Error;

use crate::executor::{EpisodeResult, Outcome};
use crate::geometry::CartesianPoint;
use crate::vec3;
use crate::Real;

/// Metric evaluation errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("an ideal path needs at least two distinct corners")]
    DegenerateIdealPath,
    #[error("trajectory too short to evaluate: {got} of {needed} required {what}")]
    TooShort {
        what: &'static str,
        needed: usize,
        got: usize,
    },
}

/// The corner polyline a trajectory is judged against (not densified).
#[derive(Debug, Clone, PartialEq)]
pub struct IdealPath<T> {
    corners: Vec<CartesianPoint<T>>,
}

impl<T: Real> IdealPath<T> {
    pub fn new(corners: Vec<CartesianPoint<T>>) -> Result<Self, MetricsError> {
        if corners.len() < 2 {
            return Err(MetricsError::DegenerateIdealPath);
        }
        for pair in corners.windows(2) {
            if pair[0].distance_to(pair[1]) < T::of(1e-12) {
                return Err(MetricsError::DegenerateIdealPath);
            }
        }
        Ok(Self { corners })
    }

    pub fn corners(&self) -> &[CartesianPoint<T>] {
        &self.corners
    }
}

/// Distance from `point` to the closed segment `[a, b]`.
fn point_to_segment<T: Real>(point: [T; 3], a: [T; 3], b: [T; 3]) -> T {
    let ab = vec3::sub(b, a);
    let len_sq = vec3::dot(ab, ab);
    if len_sq == T::zero() {
        return vec3::dist(point, a);
    }
    let t = (vec3::dot(vec3::sub(point, a), ab) / len_sq)
        .max(T::zero())
        .min(T::one());
    vec3::dist(point, vec3::add(a, vec3::scale(ab, t)))
}

/// Distance from `point` to the nearest segment of `ideal`.
pub fn cross_track_error<T: Real>(point: CartesianPoint<T>, ideal: &IdealPath<T>) -> T {
    let p = point.to_array();
    let mut best = T::infinity();
    for pair in ideal.corners.windows(2) {
        let d = point_to_segment(p, pair[0].to_array(), pair[1].to_array());
        if d < best {
            best = d;
        }
    }
    best
}

/// Resample a polyline at uniform arc-length spacing `interval`, starting at
/// its first point. A trailing remainder shorter than `interval` is dropped.
fn resample_by_arc_length<T: Real>(points: &[CartesianPoint<T>], interval: T) -> Vec<[T; 3]> {
    let mut out = Vec::new();
    if points.is_empty() {
        return out;
    }
    out.push(points[0].to_array());
    let mut next_target = interval;
    let mut travelled = T::zero();
    for pair in points.windows(2) {
        let a = pair[0].to_array();
        let b = pair[1].to_array();
        let seg = vec3::dist(a, b);
        if seg == T::zero() {
            continue;
        }
        while travelled + seg >= next_target {
            let t = (next_target - travelled) / seg;
            out.push(vec3::add(a, vec3::scale(vec3::sub(b, a), t)));
            next_target = next_target + interval;
        }
        travelled = travelled + seg;
    }
    out
}

/// Mean turning angle, in `[0, pi]` radians, between consecutive chords of
/// the trajectory resampled at `resample_interval` arc length. Zero-length
/// chords (an exactly retraced path) are skipped.
pub fn path_smoothness<T: Real>(
    trajectory: &[CartesianPoint<T>],
    resample_interval: T,
) -> Result<T, MetricsError> {
    let resampled = resample_by_arc_length(trajectory, resample_interval);
    if resampled.len() < 3 {
        return Err(MetricsError::TooShort {
            what: "resampled points",
            needed: 3,
            got: resampled.len(),
        });
    }
    let mut sum = T::zero();
    let mut count = 0usize;
    for window in resampled.windows(3) {
        let v_in = vec3::sub(window[1], window[0]);
        let v_out = vec3::sub(window[2], window[1]);
        let n_in = vec3::norm(v_in);
        let n_out = vec3::norm(v_out);
        if n_in == T::zero() || n_out == T::zero() {
            continue;
        }
        let cos = (vec3::dot(v_in, v_out) / (n_in * n_out))
            .max(-T::one())
            .min(T::one());
        sum = sum + cos.acos();
        count += 1;
    }
    if count == 0 {
        return Err(MetricsError::TooShort {
            what: "turning angles",
            needed: 1,
            got: 0,
        });
    }
    Ok(sum / T::of(count as f64))
}

/// Summary of one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport<T> {
    pub mean_cross_track: T,
    pub max_cross_track: T,
    pub smoothness: T,
    pub outcome: Outcome,
    pub duration: T,
    pub n_samples: usize,
}

/// Evaluate an episode's true positions against `ideal`.
pub fn evaluate_episode<T: Real>(
    result: &EpisodeResult<T>,
    ideal: &IdealPath<T>,
    resample_interval: T,
) -> Result<MetricsReport<T>, MetricsError> {
    let n = result.trajectory.len();
    if n < 2 {
        return Err(MetricsError::TooShort {
            what: "trajectory samples",
            needed: 2,
            got: n,
        });
    }
    let positions: Vec<CartesianPoint<T>> = result.trajectory.iter().map(|s| s.true_position).collect();
    let mut sum = T::zero();
    let mut max = T::zero();
    for p in &positions {
        let d = cross_track_error(*p, ideal);
        sum = sum + d;
        if d > max {
            max = d;
        }
    }
    Ok(MetricsReport {
        mean_cross_track: sum / T::of(n as f64),
        max_cross_track: max,
        smoothness: path_smoothness(&positions, resample_interval)?,
        outcome: result.outcome,
        duration: result.elapsed,
        n_samples: n,
    })
}
