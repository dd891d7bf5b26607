//! Heading-feedback switching controller and the two closed-loop tasks:
//! waypoint tracking and return to origin under disturbances.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::dynamics::{RobotModel, SimConfig, Simulator};
use crate::math::{Quat, Vec3};
use crate::model::{ActuationCommand, PlanarPose};
use crate::{Error, Result};

/// An actuation pair as written in tables: frequency (Hz) and offset (deg).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub f_hz: f64,
    pub theta_deg: f64,
}

impl Pair {
    pub const fn new(f_hz: f64, theta_deg: f64) -> Self {
        Self { f_hz, theta_deg }
    }

    pub fn command(&self) -> ActuationCommand<f64> {
        ActuationCommand::from_degrees(self.f_hz, self.theta_deg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActuationTable {
    pub linear: Pair,
    pub left_turn: Pair,
    pub right_turn: Pair,
    pub left_strafe: Pair,
    pub right_strafe: Pair,
}

impl Default for ActuationTable {
    /// Pairs selected for the prototype.
    fn default() -> Self {
        Self {
            linear: Pair::new(-30.0, 30.0),
            left_turn: Pair::new(-30.0, 90.0),
            right_turn: Pair::new(30.0, 90.0),
            left_strafe: Pair::new(30.0, 30.0),
            right_strafe: Pair::new(-30.0, -60.0),
        }
    }
}

impl ActuationTable {
    pub fn validate(&self) -> Result<()> {
        for p in [self.linear, self.left_turn, self.right_turn, self.left_strafe, self.right_strafe] {
            if !(p.f_hz.abs() <= 35.0) || !(p.theta_deg.abs() <= 90.0) {
                return Err(Error::invalid(format!("actuation pair ({}, {}) outside f in [-35, 35] Hz, theta in [-90, 90] deg", p.f_hz, p.theta_deg)));
            }
        }
        Ok(())
    }

    pub fn command(&self, state: ControlState) -> ActuationCommand<f64> {
        match state {
            ControlState::Left => self.left_turn.command(),
            ControlState::Right => self.right_turn.command(),
            ControlState::Translate => self.linear.command(),
            ControlState::Idle => ActuationCommand::idle(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    /// Heading-error band (rad) inside which the turn state is held.
    pub deadband: f64,
    /// Control period (s).
    pub period: f64,
    /// Use the translation pair inside the deadband instead of holding.
    pub three_state: bool,
    /// Waypoint capture radius (m).
    pub capture_radius: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self { deadband: 0.1, period: 0.1, three_state: false, capture_radius: 0.1 }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.deadband >= 0.0) || !(self.period > 0.0) || !(self.capture_radius >= 0.0) {
            return Err(Error::invalid("controller needs deadband >= 0, period > 0 and capture radius >= 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControlState {
    Left,
    Right,
    Translate,
    /// Actuator off (target reached).
    Idle,
}

impl ControlState {
    pub fn name(self) -> &'static str {
        match self {
            ControlState::Left => "left_turn",
            ControlState::Right => "right_turn",
            ControlState::Translate => "translate",
            ControlState::Idle => "idle",
        }
    }
}

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

/// Signed angle from the heading to the bearing of `target`; positive when
/// the target lies to the left.
pub fn heading_error(pose: &PlanarPose, target: [f64; 2]) -> Result<f64> {
    let (dx, dy) = (target[0] - pose.x, target[1] - pose.y);
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::invalid("target coincides with the robot position"));
    }
    Ok(wrap_angle(dy.atan2(dx) - pose.yaw))
}

/// Next controller state. Outside the deadband the sign of the error picks
/// the turn; inside it the previous turn is held, or the translation state is
/// used when enabled.
pub fn switching_command(error: f64, previous: ControlState, cfg: &ControllerConfig) -> ControlState {
    if error > cfg.deadband {
        ControlState::Left
    } else if error < -cfg.deadband {
        ControlState::Right
    } else if cfg.three_state {
        ControlState::Translate
    } else {
        match previous {
            ControlState::Left | ControlState::Right => previous,
            // no turn to hold yet
            _ if error >= 0.0 => ControlState::Left,
            _ => ControlState::Right,
        }
    }
}

/// Something the controller can drive.
pub trait Plant {
    fn pose(&self) -> PlanarPose;
    fn time(&self) -> f64;
    /// Applies `state` (through `cmd`) for `duration` seconds.
    fn advance(&mut self, state: ControlState, cmd: &ActuationCommand<f64>, duration: f64) -> Result<()>;
    /// Externally imposed rigid displacement.
    fn displace(&mut self, dx: f64, dy: f64, dyaw: f64);
}

/// Kinematic unicycle: constant forward speed, turn rate +/- `turn_rate`
/// in the turn states, at rest when idle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Unicycle {
    pub speed: f64,
    pub turn_rate: f64,
    pub pose: PlanarPose,
    pub t: f64,
    /// Integration substep (s).
    pub substep: f64,
}

impl Unicycle {
    pub fn new(speed: f64, turn_rate: f64) -> Self {
        Self { speed, turn_rate, pose: PlanarPose::default(), t: 0.0, substep: 0.01 }
    }
}

impl Default for Unicycle {
    fn default() -> Self {
        Self::new(0.05, 1.0)
    }
}

impl Plant for Unicycle {
    fn pose(&self) -> PlanarPose {
        self.pose
    }

    fn time(&self) -> f64 {
        self.t
    }

    fn advance(&mut self, state: ControlState, _cmd: &ActuationCommand<f64>, duration: f64) -> Result<()> {
        let (v, w) = match state {
            ControlState::Left => (self.speed, self.turn_rate),
            ControlState::Right => (self.speed, -self.turn_rate),
            ControlState::Translate => (self.speed, 0.0),
            ControlState::Idle => (0.0, 0.0),
        };
        let n = (duration / self.substep).ceil().max(1.0) as usize;
        let h = duration / n as f64;
        for _ in 0..n {
            // exact arc over the substep
            let yaw = self.pose.yaw;
            if w == 0.0 {
                self.pose.x += v * h * yaw.cos();
                self.pose.y += v * h * yaw.sin();
            } else {
                let y1 = yaw + w * h;
                self.pose.x += v / w * (y1.sin() - yaw.sin());
                self.pose.y -= v / w * (y1.cos() - yaw.cos());
                self.pose.yaw = y1;
            }
        }
        self.t += duration;
        Ok(())
    }

    fn displace(&mut self, dx: f64, dy: f64, dyaw: f64) {
        self.pose.x += dx;
        self.pose.y += dy;
        self.pose.yaw += dyaw;
    }
}

/// The full simulated robot as a plant.
pub struct SimulatedRobot<'m> {
    sim: Simulator<'m, f64>,
    yaw_offset: f64,
    last_yaw: f64,
}

impl<'m> SimulatedRobot<'m> {
    pub fn new(model: &'m RobotModel<f64>, cfg: SimConfig<f64>) -> Result<Self> {
        Ok(Self { sim: Simulator::new(model, cfg)?, yaw_offset: 0.0, last_yaw: 0.0 })
    }
}

impl Plant for SimulatedRobot<'_> {
    fn pose(&self) -> PlanarPose {
        let mut p = self.sim.tree_state().root_pose.to_planar();
        p.yaw = self.last_yaw + wrap_angle(p.yaw + self.yaw_offset - self.last_yaw);
        p
    }

    fn time(&self) -> f64 {
        self.sim.time()
    }

    fn advance(&mut self, _state: ControlState, cmd: &ActuationCommand<f64>, duration: f64) -> Result<()> {
        let steps = (duration / self.sim.config().dt).round().max(1.0) as u64;
        for _ in 0..steps {
            self.sim.step(cmd)?;
        }
        self.last_yaw = self.pose().yaw;
        Ok(())
    }

    fn displace(&mut self, dx: f64, dy: f64, dyaw: f64) {
        let st = self.sim.tree_state_mut();
        st.root_pose.position = st.root_pose.position + Vec3::new(dx, dy, 0.0);
        st.root_pose.orientation = Quat::from_yaw(dyaw).mul(&st.root_pose.orientation).normalize();
        self.last_yaw += dyaw;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum EventKind {
    WaypointCaptured { index: usize, x: f64, y: f64 },
    Disturbance { dx: f64, dy: f64, dyaw: f64, magnitude: f64 },
    Arrived { distance: f64 },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::WaypointCaptured { .. } => "waypoint_captured",
            EventKind::Disturbance { .. } => "disturbance",
            EventKind::Arrived { .. } => "arrived",
        }
    }

    /// Compact `key=value` payload for the events file.
    pub fn payload(&self) -> String {
        match self {
            EventKind::WaypointCaptured { index, x, y } => format!("index={index};x={x};y={y}"),
            EventKind::Disturbance { dx, dy, dyaw, magnitude } => format!("dx={dx};dy={dy};dyaw={dyaw};magnitude={magnitude}"),
            EventKind::Arrived { distance } => format!("distance={distance}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSample {
    pub t: f64,
    pub pose: PlanarPose,
    pub error: Option<f64>,
    pub state: ControlState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskLog {
    pub samples: Vec<ControlSample>,
    pub events: Vec<Event>,
    pub captured: usize,
    pub completed: bool,
    pub completion_time: Option<f64>,
    pub final_distance: f64,
}

impl TaskLog {
    fn new() -> Self {
        Self { samples: Vec::new(), events: Vec::new(), captured: 0, completed: false, completion_time: None, final_distance: f64::NAN }
    }
}

fn distance(p: &PlanarPose, target: [f64; 2]) -> f64 {
    (target[0] - p.x).hypot(target[1] - p.y)
}

/// Drives the plant through `waypoints` in order until all are captured or
/// `duration` elapses.
pub fn run_tracking<P: Plant + ?Sized>(
    plant: &mut P,
    waypoints: &[[f64; 2]],
    cfg: &ControllerConfig,
    table: &ActuationTable,
    duration: f64,
) -> Result<TaskLog> {
    cfg.validate()?;
    if waypoints.is_empty() {
        return Err(Error::invalid("tracking needs at least one waypoint"));
    }
    let mut log = TaskLog::new();
    let mut state = ControlState::Idle;
    let t_end = plant.time() + duration;
    let mut k = 0;
    loop {
        let pose = plant.pose();
        while k < waypoints.len() && distance(&pose, waypoints[k]) < cfg.capture_radius {
            log.events.push(Event { t: plant.time(), kind: EventKind::WaypointCaptured { index: k, x: pose.x, y: pose.y } });
            log.captured += 1;
            k += 1;
        }
        if k == waypoints.len() {
            log.completed = true;
            log.completion_time = Some(plant.time());
            log.samples.push(ControlSample { t: plant.time(), pose, error: None, state: ControlState::Idle });
            break;
        }
        if plant.time() >= t_end - 1e-9 {
            log.samples.push(ControlSample { t: plant.time(), pose, error: None, state });
            break;
        }
        let error = heading_error(&pose, waypoints[k]).ok();
        if let Some(e) = error {
            state = switching_command(e, state, cfg);
        }
        log.samples.push(ControlSample { t: plant.time(), pose, error, state });
        plant.advance(state, &table.command(state), cfg.period)?;
    }
    log.final_distance = distance(&plant.pose(), waypoints[waypoints.len() - 1]);
    Ok(log)
}

/// Closed two-lobe path (lemniscate of Gerono) through `center`:
/// `center + (2 r sin s, r sin 2s)`, sampled at `s = 2 pi k / (count - 1)`.
/// The first and last points coincide with the center.
pub fn figure_eight_waypoints(center: [f64; 2], lobe_radius: f64, count: usize) -> Result<Vec<[f64; 2]>> {
    if !(lobe_radius > 0.0) || count < 4 {
        return Err(Error::invalid("figure eight needs radius > 0 and at least 4 points"));
    }
    Ok((0..count)
        .map(|k| {
            let s = TAU * k as f64 / (count - 1) as f64;
            [center[0] + 2.0 * lobe_radius * s.sin(), center[1] + lobe_radius * (2.0 * s).sin()]
        })
        .collect())
}

/// A displacement applied to the plant at time `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    pub t: f64,
    pub dx: f64,
    pub dy: f64,
    #[serde(default)]
    pub dyaw: f64,
}

impl Disturbance {
    pub fn magnitude(&self) -> f64 {
        self.dx.hypot(self.dy)
    }
}

/// Steers to `origin`, stops inside the capture radius and resumes whenever
/// a disturbance pushes it out. Success is judged on the final pose.
pub fn return_to_origin<P: Plant + ?Sized>(
    plant: &mut P,
    origin: [f64; 2],
    cfg: &ControllerConfig,
    table: &ActuationTable,
    disturbances: &[Disturbance],
    duration: f64,
) -> Result<TaskLog> {
    cfg.validate()?;
    let mut pending: Vec<Disturbance> = disturbances.to_vec();
    pending.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut next = 0;
    let mut log = TaskLog::new();
    let mut state = ControlState::Idle;
    let mut inside = false;
    let t0 = plant.time();
    let t_end = t0 + duration;
    while plant.time() < t_end - 1e-9 {
        while next < pending.len() && pending[next].t <= plant.time() - t0 + 1e-9 {
            let d = pending[next];
            plant.displace(d.dx, d.dy, d.dyaw);
            log.events.push(Event { t: t0 + d.t, kind: EventKind::Disturbance { dx: d.dx, dy: d.dy, dyaw: d.dyaw, magnitude: d.magnitude() } });
            next += 1;
        }
        let pose = plant.pose();
        let dist = distance(&pose, origin);
        let mut error = None;
        if dist < cfg.capture_radius {
            if !inside {
                log.events.push(Event { t: plant.time(), kind: EventKind::Arrived { distance: dist } });
                inside = true;
            }
            state = ControlState::Idle;
        } else {
            inside = false;
            error = heading_error(&pose, origin).ok();
            if let Some(e) = error {
                state = switching_command(e, state, cfg);
            }
        }
        log.samples.push(ControlSample { t: plant.time(), pose, error, state });
        let step = cfg.period.min(t_end - plant.time());
        plant.advance(state, &table.command(state), step)?;
    }
    let pose = plant.pose();
    log.samples.push(ControlSample { t: plant.time(), pose, error: None, state });
    log.final_distance = distance(&pose, origin);
    log.completed = log.final_distance < cfg.capture_radius;
    if log.completed {
        log.completion_time = log.events.iter().rev().find(|e| matches!(e.kind, EventKind::Arrived { .. })).map(|e| e.t);
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn at(x: f64, y: f64, yaw: f64) -> PlanarPose {
        PlanarPose { x, y, yaw }
    }

    #[test]
    fn heading_error_examples() {
        assert_eq!(heading_error(&at(0.0, 0.0, 0.0), [1.0, 0.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(heading_error(&at(0.0, 0.0, 0.0), [0.0, 1.0]).unwrap(), PI / 2.0, epsilon = 1e-15);
        let e = heading_error(&at(0.0, 0.0, 0.0), [-1.0, -1e-9]).unwrap();
        assert!(e < 0.0 && (e + PI).abs() < 1e-8, "{e}");
        assert!(heading_error(&at(1.0, 2.0, 0.3), [1.0, 2.0]).is_err());
    }

    #[test]
    fn wrap_is_half_open() {
        assert_eq!(wrap_angle(PI), PI);
        assert_abs_diff_eq!(wrap_angle(-PI), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn switching_examples() {
        let cfg = ControllerConfig { deadband: 0.1, ..Default::default() };
        let table = ActuationTable::default();
        let s = switching_command(0.5, ControlState::Right, &cfg);
        assert_eq!(table.command(s), ActuationCommand::from_degrees(-30.0, 90.0));
        let s = switching_command(-0.5, ControlState::Left, &cfg);
        assert_eq!(table.command(s), ActuationCommand::from_degrees(30.0, 90.0));
        assert_eq!(switching_command(0.05, ControlState::Right, &cfg), ControlState::Right);
        let three = ControllerConfig { three_state: true, ..cfg };
        assert_eq!(table.command(switching_command(0.05, ControlState::Left, &three)), ActuationCommand::from_degrees(-30.0, 30.0));
    }

    #[test]
    fn unicycle_turns_in_place_on_arc() {
        let mut u = Unicycle::default();
        u.advance(ControlState::Left, &ActuationCommand::idle(), TAU).unwrap();
        // one full circle of radius v / w
        assert_abs_diff_eq!(u.pose.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(u.pose.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(u.pose.yaw, TAU, epsilon = 1e-12);
        u.advance(ControlState::Left, &ActuationCommand::idle(), PI).unwrap();
        assert_abs_diff_eq!(u.pose.y, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn figure_eight_shape() {
        let w = figure_eight_waypoints([1.0, -1.0], 0.5, 8).unwrap();
        assert_eq!(w.len(), 8);
        assert_abs_diff_eq!(w[0][0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[7][0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[7][1], -1.0, epsilon = 1e-12);
        assert!(figure_eight_waypoints([0.0, 0.0], 0.5, 3).is_err());
    }

    #[test]
    fn empty_log_iff_nothing_captured() {
        let mut u = Unicycle::default();
        let log = run_tracking(&mut u, &[[5.0, 0.0]], &ControllerConfig::default(), &ActuationTable::default(), 1.0).unwrap();
        assert_eq!(log.captured, 0);
        assert!(log.events.is_empty());
    }

    #[test]
    fn waypoint_behind_saturates_one_turn() {
        let mut u = Unicycle::default();
        let cfg = ControllerConfig::default();
        let log = run_tracking(&mut u, &[[-1.0, 0.2]], &cfg, &ActuationTable::default(), 2.0).unwrap();
        let first = log.samples[0].state;
        assert_eq!(first, ControlState::Left);
        assert!(log.samples.iter().take_while(|s| s.error.map_or(false, |e| e.abs() > cfg.deadband)).all(|s| s.state == first));
    }

    #[test]
    fn figure_eight_tracked_by_surrogate() {
        let w = figure_eight_waypoints([0.0, 0.0], 0.5, 8).unwrap();
        let mut u = Unicycle::default();
        let log = run_tracking(&mut u, &w, &ControllerConfig::default(), &ActuationTable::default(), 600.0).unwrap();
        assert!(log.completed, "captured {} of {}", log.captured, w.len());
        assert_eq!(log.captured, 8);
        assert!(log.completion_time.unwrap().is_finite());
    }

    #[test]
    fn return_home_without_and_with_pushes() {
        let cfg = ControllerConfig::default();
        let table = ActuationTable::default();
        let mut u = Unicycle::default();
        u.pose = at(0.4, -0.3, 1.0);
        assert!(return_to_origin(&mut u, [0.0, 0.0], &cfg, &table, &[], 60.0).unwrap().completed);

        let mut u = Unicycle::default();
        let pushes = [
            Disturbance { t: 5.0, dx: 0.5, dy: 0.0, dyaw: 0.0 },
            Disturbance { t: 40.0, dx: 0.0, dy: -0.5, dyaw: 1.0 },
            Disturbance { t: 80.0, dx: -0.3, dy: 0.4, dyaw: -2.0 },
        ];
        let log = return_to_origin(&mut u, [0.0, 0.0], &cfg, &table, &pushes, 120.0).unwrap();
        assert!(log.completed, "final distance {}", log.final_distance);
        let d: Vec<_> = log.events.iter().filter(|e| matches!(e.kind, EventKind::Disturbance { .. })).collect();
        assert_eq!(d.len(), 3);
        assert_abs_diff_eq!(d[0].t, 5.0, epsilon = 1e-9);
        match d[0].kind {
            EventKind::Disturbance { magnitude, .. } => assert_abs_diff_eq!(magnitude, 0.5, epsilon = 1e-12),
            _ => unreachable!(),
        }
    }

    proptest::proptest! {
        #[test]
        fn no_turn_flip_inside_deadband(errors in proptest::collection::vec(-3.5f64..3.5, 1..200), band in 0.0f64..0.5, three in proptest::bool::ANY) {
            let cfg = ControllerConfig { deadband: band, three_state: three, ..Default::default() };
            let mut prev = ControlState::Idle;
            for e in errors {
                let next = switching_command(e, prev, &cfg);
                if prev == ControlState::Left && next == ControlState::Right {
                    proptest::prop_assert!(e < -band);
                }
                if prev == ControlState::Right && next == ControlState::Left {
                    proptest::prop_assert!(e > band);
                }
                prev = next;
            }
        }
    }
}
