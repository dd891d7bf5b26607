//! Domain types shared across the crate.
//!
//! Everything is SI internally (m, kg, s, rad). Frequencies stay in Hz since
//! the rotor rate is derived as `2 * pi * f` where needed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Quat, Vec3};
use crate::scalar::Real;

/// Legs in the fixed order used by every array in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Leg {
    FrontLeft,
    FrontRight,
    RearLeft,
    RearRight,
}

impl Leg {
    pub const ALL: [Leg; 4] = [Leg::FrontLeft, Leg::FrontRight, Leg::RearLeft, Leg::RearRight];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_left(self) -> bool {
        matches!(self, Leg::FrontLeft | Leg::RearLeft)
    }

    pub fn is_front(self) -> bool {
        matches!(self, Leg::FrontLeft | Leg::FrontRight)
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Leg::FrontLeft => "fl",
            Leg::FrontRight => "fr",
            Leg::RearLeft => "rl",
            Leg::RearRight => "rr",
        }
    }
}

/// Position plus unit-quaternion orientation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct Pose<S> {
    pub position: Vec3<S>,
    pub orientation: Quat<S>,
}

impl<S: Real> Pose<S> {
    pub fn identity() -> Self {
        Self { position: Vec3::zeros(), orientation: Quat::identity() }
    }

    pub fn planar(x: S, y: S, yaw: S) -> Self {
        Self { position: Vec3::new(x, y, S::zero()), orientation: Quat::from_yaw(yaw) }
    }

    pub fn yaw(&self) -> S {
        self.orientation.yaw()
    }

    pub fn to_planar(&self) -> PlanarPose {
        PlanarPose {
            x: self.position.x.to_f64_lossy(),
            y: self.position.y.to_f64_lossy(),
            yaw: self.yaw().to_f64_lossy(),
        }
    }

    pub fn is_normalized(&self) -> bool {
        (self.orientation.norm() - S::one()).abs() <= S::lit(1e-9).max(S::epsilon() * S::lit(8.0))
    }
}

/// Ground-plane projection of a pose.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanarPose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

/// Geometry and mass parameters of the robot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct DesignParams<S = f64> {
    pub body_length: S,
    pub body_width: S,
    pub body_thickness: S,
    pub leg_length: S,
    pub leg_width: S,
    pub leg_thickness: S,
    /// Cumulative twist between the first and last leg segment (rad).
    pub leg_twist: S,
    pub foot_length: S,
    pub foot_width: S,
    /// Rotor arm length `l`.
    pub rotor_arm: S,
    /// Vertical distance `h` between the two offset masses.
    pub rotor_separation: S,
    /// Offset mass `m` carried by each rotor.
    pub rotor_mass: S,
    pub total_mass: S,
    pub gravity: S,
    pub plate_mass: S,
    /// Mass of one compliant beam (all three segments).
    pub leg_mass: S,
    pub foot_mass: S,
    /// Height of the rotor-pair midpoint above the plate center.
    pub rotor_height: S,
}

impl<S: Real> Default for DesignParams<S> {
    fn default() -> Self {
        let l = S::lit;
        Self {
            body_length: l(0.220),
            body_width: l(0.120),
            body_thickness: l(0.0035),
            leg_length: l(0.050),
            leg_width: l(0.020),
            leg_thickness: l(0.003),
            leg_twist: l(90.0).deg_to_rad(),
            foot_length: l(0.085),
            foot_width: l(0.005),
            rotor_arm: l(0.028),
            rotor_separation: l(0.028),
            rotor_mass: l(0.012),
            total_mass: l(0.350),
            gravity: l(9.81),
            plate_mass: l(0.016),
            // TPU95A beam, 50 x 20 x 3 mm at ~1.2 g/cm^3
            leg_mass: l(0.0036),
            // PLA foot bar, 85 x 5 x 5 mm at ~1.24 g/cm^3
            foot_mass: l(0.0026),
            rotor_height: S::zero(),
        }
    }
}

impl<S: Real> DesignParams<S> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("body_length", self.body_length),
            ("body_width", self.body_width),
            ("body_thickness", self.body_thickness),
            ("leg_length", self.leg_length),
            ("leg_width", self.leg_width),
            ("leg_thickness", self.leg_thickness),
            ("foot_length", self.foot_length),
            ("foot_width", self.foot_width),
            ("rotor_arm", self.rotor_arm),
            ("rotor_separation", self.rotor_separation),
            ("rotor_mass", self.rotor_mass),
            ("total_mass", self.total_mass),
            ("plate_mass", self.plate_mass),
            ("leg_mass", self.leg_mass),
            ("foot_mass", self.foot_mass),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= S::zero() {
                return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !self.gravity.is_finite() || self.gravity < S::zero() {
            return Err(Error::invalid("gravity must be finite and non-negative"));
        }
        if !self.rotor_height.is_finite() {
            return Err(Error::NonFinite("rotor_height"));
        }
        if !(self.leg_twist >= S::zero() && self.leg_twist <= S::PI()) {
            return Err(Error::invalid("leg_twist must lie in [0, 180] deg"));
        }
        Ok(())
    }
}

/// Pseudo-rigid-body joint coefficients shared by all legs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct LegStiffness<S = f64> {
    /// N m / rad
    pub k_bend: S,
    /// N m s / rad
    pub b_bend: S,
    pub k_twist: S,
    pub b_twist: S,
}

impl<S: Real> LegStiffness<S> {
    pub fn new(k_bend: S, b_bend: S, k_twist: S, b_twist: S) -> Self {
        Self { k_bend, b_bend, k_twist, b_twist }
    }

    /// Identified single-leg coefficients of the prototype beam.
    pub fn baseline() -> Self {
        Self::new(S::lit(1.062072), S::lit(2.21209), S::lit(0.0024), S::lit(0.00183))
    }

    pub fn to_array(self) -> [S; 4] {
        [self.k_bend, self.b_bend, self.k_twist, self.b_twist]
    }

    pub fn from_array(a: [S; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn scaled(self, factor: S) -> Self {
        Self::from_array(self.to_array().map(|v| v * factor))
    }

    pub fn validate(&self) -> Result<()> {
        for v in self.to_array() {
            if !v.is_finite() || v < S::zero() {
                return Err(Error::invalid(format!("leg coefficients must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

impl<S: Real> Default for LegStiffness<S> {
    fn default() -> Self {
        Self::baseline()
    }
}

/// Calibrated friction coefficients per foot in leg order (fl, fr, rl, rr).
pub const DEFAULT_FRICTION: [f64; 4] = [0.646, 0.508, 0.451, 0.553];

/// Per-leg manufacturing errors and body mass corrections applied on top of
/// the baseline model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct ErrorParams<S = f64> {
    pub k_bend: [S; 4],
    pub b_bend: [S; 4],
    pub k_twist: [S; 4],
    pub b_twist: [S; 4],
    /// Tangential friction coefficient per foot.
    pub friction: [S; 4],
    /// Additive correction of the lumped body mass (kg).
    pub m_mag: S,
    /// Body center-of-mass offset along body x (m).
    pub m_x: S,
    /// Body center-of-mass offset along body y (m).
    pub m_y: S,
}

impl<S: Real> ErrorParams<S> {
    pub fn identity() -> Self {
        Self {
            k_bend: [S::one(); 4],
            b_bend: [S::one(); 4],
            k_twist: [S::one(); 4],
            b_twist: [S::one(); 4],
            friction: DEFAULT_FRICTION.map(S::lit),
            m_mag: S::zero(),
            m_x: S::zero(),
            m_y: S::zero(),
        }
    }

    /// Identity errors with the same friction on every foot.
    pub fn uniform_friction(mu: S) -> Self {
        Self { friction: [mu; 4], ..Self::identity() }
    }

    pub fn leg_stiffness(&self, base: &LegStiffness<S>, leg: Leg) -> LegStiffness<S> {
        let i = leg.index();
        LegStiffness::new(
            base.k_bend * self.k_bend[i],
            base.b_bend * self.b_bend[i],
            base.k_twist * self.k_twist[i],
            base.b_twist * self.b_twist[i],
        )
    }

    pub fn validate(&self) -> Result<()> {
        for arr in [&self.k_bend, &self.b_bend, &self.k_twist, &self.b_twist] {
            for &d in arr.iter() {
                if !d.is_finite() || d <= S::zero() {
                    return Err(Error::invalid(format!("proportional error factors must be > 0, got {d}")));
                }
            }
        }
        for &mu in &self.friction {
            if !(mu >= S::zero() && mu <= S::two()) {
                return Err(Error::invalid(format!("friction coefficient {mu} outside [0, 2]")));
            }
        }
        for v in [self.m_mag, self.m_x, self.m_y] {
            if !v.is_finite() {
                return Err(Error::NonFinite("mass error parameters"));
            }
        }
        Ok(())
    }
}

impl<S: Real> Default for ErrorParams<S> {
    fn default() -> Self {
        Self::identity()
    }
}

/// Shaker command: driving frequency (Hz, signed) and offset angle (rad).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct ActuationCommand<S = f64> {
    /// Positive values spin the top rotor clockwise.
    pub frequency: S,
    /// Offset of the force axis from the sagittal plane, clamped to [-pi/2, pi/2].
    pub theta: S,
}

impl<S: Real> ActuationCommand<S> {
    pub fn new(frequency: S, theta: S) -> Self {
        let lim = S::FRAC_PI_2();
        Self { frequency, theta: theta.max(-lim).min(lim) }
    }

    pub fn from_degrees(frequency: S, theta_deg: S) -> Self {
        Self::new(frequency, theta_deg.deg_to_rad())
    }

    pub fn idle() -> Self {
        Self { frequency: S::zero(), theta: S::zero() }
    }

    pub fn theta_deg(&self) -> S {
        self.theta.rad_to_deg()
    }

    /// Rotor angular rate (rad/s).
    pub fn rotor_rate(&self) -> S {
        S::two() * S::PI() * self.frequency
    }

    pub fn validate(&self, max_frequency: S) -> Result<()> {
        if !self.frequency.is_finite() || !self.theta.is_finite() {
            return Err(Error::NonFinite("actuation command"));
        }
        if self.frequency.abs() > max_frequency {
            return Err(Error::invalid(format!(
                "|f| = {} Hz exceeds the configured limit {} Hz",
                self.frequency.abs(),
                max_frequency
            )));
        }
        Ok(())
    }
}

/// Reflects a command through the sagittal plane: `(f, theta) -> (-f, -theta)`.
pub fn mirror_command<S: Real>(cmd: ActuationCommand<S>) -> ActuationCommand<S> {
    ActuationCommand { frequency: -cmd.frequency, theta: -cmd.theta }
}

/// Rotates a world-frame velocity into the heading frame of `pose`.
///
/// Only the yaw of the pose is used, so the vertical component passes through
/// unchanged and x/y become longitudinal/lateral velocities.
pub fn body_frame_velocity<S: Real>(pose: &Pose<S>, world_velocity: Vec3<S>) -> Result<Vec3<S>> {
    if !world_velocity.is_finite() || !pose.orientation.is_finite() || !pose.position.is_finite() {
        return Err(Error::NonFinite("body_frame_velocity input"));
    }
    let (s, c) = pose.yaw().sin_cos();
    let v = world_velocity;
    Ok(Vec3::new(c * v.x + s * v.y, -s * v.x + c * v.y, v.z))
}

/// Full simulator state of a floating-base (or fixed-base) articulated robot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct SimState<S = f64> {
    pub t: S,
    pub pose: Pose<S>,
    /// Velocity of the base origin, base coordinates.
    pub linear_velocity: Vec3<S>,
    /// Angular velocity of the base, base coordinates.
    pub angular_velocity: Vec3<S>,
    /// Joint angles, leg-major (fl, fr, rl, rr), six per leg.
    pub q: Vec<S>,
    pub qd: Vec<S>,
    /// Rotor phase (rad), integrated from the rotor rate.
    pub rotor_phase: S,
    /// Current rotor rate (rad/s); differs from the command only with motor lag.
    pub rotor_rate: S,
}

impl<S: Real> SimState<S> {
    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.pose.position.is_finite()
            && self.pose.orientation.is_finite()
            && self.linear_velocity.is_finite()
            && self.angular_velocity.is_finite()
            && self.q.iter().all(|v| v.is_finite())
            && self.qd.iter().all(|v| v.is_finite())
            && self.rotor_phase.is_finite()
            && self.rotor_rate.is_finite()
    }

    /// Base origin velocity in world coordinates.
    pub fn world_linear_velocity(&self) -> Vec3<S> {
        self.pose.orientation.rotate(&self.linear_velocity)
    }

    /// Yaw rate: world-frame angular velocity about the vertical axis.
    pub fn yaw_rate(&self) -> S {
        self.pose.orientation.rotate(&self.angular_velocity).z
    }
}

/// One recorded sample of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct TrajectorySample<S = f64> {
    pub t: S,
    pub pose: Pose<S>,
    /// Planar pose with continuous (unwrapped) yaw.
    pub planar: PlanarPose,
    pub vx_body: S,
    pub vy_body: S,
    pub yaw_rate: S,
}

/// Uniformly sampled record of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct Trajectory<S = f64> {
    pub sample_interval: S,
    pub samples: Vec<TrajectorySample<S>>,
}

impl<S: Real> Trajectory<S> {
    pub fn new(sample_interval: S) -> Self {
        Self { sample_interval, samples: Vec::new() }
    }

    /// Appends a sample, unwrapping its yaw against the previous sample.
    pub fn push(&mut self, t: S, pose: Pose<S>, vx_body: S, vy_body: S, yaw_rate: S) {
        let mut planar = pose.to_planar();
        if let Some(prev) = self.samples.last() {
            let mut d = planar.yaw - prev.planar.yaw;
            let two_pi = 2.0 * std::f64::consts::PI;
            d -= two_pi * (d / two_pi).round();
            planar.yaw = prev.planar.yaw + d;
        }
        self.samples.push(TrajectorySample { t, pose, planar, vx_body, vy_body, yaw_rate });
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start_time(&self) -> Option<S> {
        self.samples.first().map(|s| s.t)
    }

    pub fn end_time(&self) -> Option<S> {
        self.samples.last().map(|s| s.t)
    }

    /// Checks strictly increasing, uniformly spaced sample times.
    pub fn validate(&self) -> Result<()> {
        let h = self.sample_interval.to_f64_lossy();
        for w in self.samples.windows(2) {
            let dt = (w[1].t - w[0].t).to_f64_lossy();
            if dt <= 0.0 {
                return Err(Error::invalid("trajectory times are not strictly increasing"));
            }
            if (dt - h).abs() > 1e-12_f64.max(h * 1e-9) {
                return Err(Error::invalid(format!("non-uniform sample spacing {dt} vs {h}")));
            }
        }
        Ok(())
    }
}

/// Run-averaged planar velocities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VelocitySummary {
    /// Mean longitudinal velocity (m/s).
    pub vx: f64,
    /// Mean lateral velocity (m/s).
    pub vy: f64,
    /// Mean yaw rate (rad/s).
    pub w: f64,
}

impl VelocitySummary {
    pub fn new(vx: f64, vy: f64, w: f64) -> Self {
        Self { vx, vy, w }
    }

    pub fn channel(&self, d: Direction) -> f64 {
        match d {
            Direction::Longitudinal => self.vx,
            Direction::Lateral => self.vy,
            Direction::Turning => self.w,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.vx * s, self.vy * s, self.w * s)
    }

    pub fn is_finite(&self) -> bool {
        self.vx.is_finite() && self.vy.is_finite() && self.w.is_finite()
    }
}

/// Motion direction of a velocity channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Longitudinal,
    Lateral,
    Turning,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::Longitudinal, Direction::Lateral, Direction::Turning];

    pub fn name(self) -> &'static str {
        match self {
            Direction::Longitudinal => "longitudinal",
            Direction::Lateral => "lateral",
            Direction::Turning => "turning",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name() == s)
    }
}

/// Result of one grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CellResult {
    Ok(VelocitySummary),
    Failed(String),
}

impl CellResult {
    pub fn summary(&self) -> Option<&VelocitySummary> {
        match self {
            CellResult::Ok(s) => Some(s),
            CellResult::Failed(_) => None,
        }
    }
}

/// Velocity summaries over a rectangular (f, theta) grid, frequency-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    /// Frequencies (Hz), ascending.
    pub f_axis: Vec<f64>,
    /// Offset angles (deg), ascending.
    pub theta_axis: Vec<f64>,
    pub cells: Vec<CellResult>,
}

impl SweepGrid {
    pub fn new(f_axis: Vec<f64>, theta_axis: Vec<f64>, cells: Vec<CellResult>) -> Result<Self> {
        check_axis(&f_axis, "f")?;
        check_axis(&theta_axis, "theta")?;
        if cells.len() != f_axis.len() * theta_axis.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} cells for a {}x{} grid",
                cells.len(),
                f_axis.len(),
                theta_axis.len()
            )));
        }
        Ok(Self { f_axis, theta_axis, cells })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn index(&self, fi: usize, ti: usize) -> usize {
        fi * self.theta_axis.len() + ti
    }

    pub fn get(&self, fi: usize, ti: usize) -> &CellResult {
        &self.cells[self.index(fi, ti)]
    }

    /// (f Hz, theta deg) of a flat cell index.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let n = self.theta_axis.len();
        (self.f_axis[idx / n], self.theta_axis[idx % n])
    }

    pub fn command(&self, idx: usize) -> ActuationCommand<f64> {
        let (f, th) = self.point(idx);
        ActuationCommand::from_degrees(f, th)
    }

    pub fn find(&self, f: f64, theta_deg: f64) -> Option<usize> {
        let fi = self.f_axis.iter().position(|&v| (v - f).abs() < 1e-9)?;
        let ti = self.theta_axis.iter().position(|&v| (v - theta_deg).abs() < 1e-9)?;
        Some(self.index(fi, ti))
    }

    pub fn same_axes(&self, other: &SweepGrid) -> bool {
        self.f_axis == other.f_axis && self.theta_axis == other.theta_axis
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(|c| matches!(c, CellResult::Ok(_)))
    }
}

pub(crate) fn check_axis(axis: &[f64], name: &str) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::invalid(format!("{name} axis is empty")));
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("grid axis"));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!("{name} axis must be strictly ascending")));
    }
    Ok(())
}

/// Inclusive arithmetic axis `start, start + step, ..., end`.
pub fn linear_axis(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| start + step * i as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn body_frame_identity_and_turns() {
        let v = body_frame_velocity(&Pose::<f64>::identity(), Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(v, Vec3::new(1.0, 0.0, 0.0));

        let quarter = Pose::planar(0.0, 0.0, std::f64::consts::FRAC_PI_2);
        let v = body_frame_velocity(&quarter, Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(v.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.y, -1.0, epsilon = 1e-15);
        assert_eq!(v.z, 0.0);

        let half = Pose::planar(0.0, 0.0, std::f64::consts::PI);
        let v = body_frame_velocity(&half, Vec3::new(0.2, -0.1, 0.0)).unwrap();
        assert_abs_diff_eq!(v.x, -0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(v.y, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn body_frame_preserves_vertical() {
        let p = Pose::planar(1.0, 2.0, 0.4);
        let v = body_frame_velocity(&p, Vec3::new(0.3, 0.1, -0.25)).unwrap();
        assert_eq!(v.z, -0.25);
    }

    #[test]
    fn body_frame_rejects_nan() {
        let err = body_frame_velocity(&Pose::<f64>::identity(), Vec3::new(f64::NAN, 0.0, 0.0));
        assert!(err.is_err());
    }

    #[test]
    fn mirror_examples() {
        let c = mirror_command(ActuationCommand::from_degrees(20.0, 45.0));
        assert_eq!(c.frequency, -20.0);
        assert_abs_diff_eq!(c.theta_deg(), -45.0, epsilon = 1e-12);
        assert_eq!(mirror_command(ActuationCommand::<f64>::idle()), ActuationCommand::idle());
        let c = mirror_command(ActuationCommand::from_degrees(-35.0, 90.0));
        assert_eq!(c.frequency, 35.0);
        assert_abs_diff_eq!(c.theta_deg(), -90.0, epsilon = 1e-12);
    }

    #[test]
    fn theta_is_clamped() {
        let c = ActuationCommand::from_degrees(10.0, 120.0_f64);
        assert_abs_diff_eq!(c.theta_deg(), 90.0, epsilon = 1e-12);
    }

    #[test]
    fn identity_errors_leave_coefficients_untouched() {
        let base = LegStiffness::<f64>::baseline();
        let e = ErrorParams::identity();
        for leg in Leg::ALL {
            assert_eq!(e.leg_stiffness(&base, leg), base);
        }
    }

    #[test]
    fn default_axes() {
        assert_eq!(linear_axis(-35.0, 35.0, 5.0).len(), 15);
        assert_eq!(linear_axis(-90.0, 90.0, 15.0).len(), 13);
    }

    #[test]
    fn design_defaults_validate() {
        DesignParams::<f64>::default().validate().unwrap();
        let mut d = DesignParams::<f64>::default();
        d.leg_length = -1.0;
        assert!(d.validate().is_err());
    }

    #[test]
    fn types_roundtrip_through_json() {
        let e = ErrorParams::<f64> { m_x: 0.013, ..ErrorParams::identity() };
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(serde_json::from_str::<ErrorParams<f64>>(&s).unwrap(), e);
        let d = DesignParams::<f64>::default();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<DesignParams<f64>>(&s).unwrap(), d);
    }

    proptest! {
        #[test]
        fn mirror_is_involution(f in -35.0f64..35.0, th in -90.0f64..90.0) {
            let c = ActuationCommand::from_degrees(f, th);
            prop_assert_eq!(mirror_command(mirror_command(c)), c);
        }

        #[test]
        fn command_roundtrips_exactly(f in -35.0f64..35.0, th in -1.5f64..1.5) {
            let c = ActuationCommand::new(f, th);
            let s = serde_json::to_string(&c).unwrap();
            prop_assert_eq!(serde_json::from_str::<ActuationCommand<f64>>(&s).unwrap(), c);
        }
    }
}
