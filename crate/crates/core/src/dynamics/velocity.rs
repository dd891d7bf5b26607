//! Run-averaged planar velocities.

use crate::model::{Trajectory, VelocitySummary};
use crate::scalar::Real;
use crate::{Error, Result};

/// Default settling time discarded before averaging (s).
pub const DEFAULT_SETTLE: f64 = 1.0;

/// Mean body-frame planar velocity and yaw rate over `[settle, end]`.
///
/// Each sample-to-sample displacement is rotated into the heading frame at
/// the interval midpoint, so vibration inside an interval averages out instead
/// of aliasing into the result.
pub fn average_velocities<S: Real>(traj: &Trajectory<S>, settle: f64) -> Result<VelocitySummary> {
    let end = traj.end_time().map(|t| t.to_f64_lossy()).unwrap_or(f64::NAN);
    let start = traj.samples.iter().position(|s| s.t.to_f64_lossy() >= settle - 1e-12);
    let Some(start) = start else {
        return Err(Error::EmptyWindow { settle, end });
    };
    let window = &traj.samples[start..];
    if window.len() < 2 {
        return Err(Error::EmptyWindow { settle, end });
    }
    let (mut sx, mut sy) = (0.0, 0.0);
    for w in window.windows(2) {
        let (a, b) = (&w[0].planar, &w[1].planar);
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let (s, c) = (0.5 * (a.yaw + b.yaw)).sin_cos();
        sx += c * dx + s * dy;
        sy += -s * dx + c * dy;
    }
    let first = &window[0];
    let last = &window[window.len() - 1];
    let span = last.t.to_f64_lossy() - first.t.to_f64_lossy();
    if !(span > 0.0) {
        return Err(Error::EmptyWindow { settle, end });
    }
    let out = VelocitySummary::new(sx / span, sy / span, (last.planar.yaw - first.planar.yaw) / span);
    if !out.is_finite() {
        return Err(Error::NonFinite("velocity summary"));
    }
    Ok(out)
}
