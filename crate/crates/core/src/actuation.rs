//! Counter-rotating dual-rotor shaker.
//!
//! Two offset masses `m` on arms of length `l`, separated vertically by `h`,
//! spin at `+Omega` (top) and `-Omega` (bottom) with a common offset angle
//! `theta`. Their centrifugal forces add along `(cos theta, sin theta)` and
//! cancel across it. Quantities are in the body frame, about the rotor-pair
//! midpoint.

use serde::{Deserialize, Serialize};

use crate::math::Vec3;
use crate::model::{ActuationCommand, DesignParams};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct RotorGeometry<S = f64> {
    /// Arm length `l` (m).
    pub arm: S,
    /// Vertical separation `h` (m).
    pub separation: S,
    /// Offset mass `m` per rotor (kg).
    pub mass: S,
    pub gravity: S,
}

impl<S: Real> RotorGeometry<S> {
    pub fn from_design(d: &DesignParams<S>) -> Self {
        Self { arm: d.rotor_arm, separation: d.rotor_separation, mass: d.rotor_mass, gravity: d.gravity }
    }
}

impl<S: Real> Default for RotorGeometry<S> {
    fn default() -> Self {
        Self::from_design(&DesignParams::default())
    }
}

/// Positions of the two offset masses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct RotorState<S = f64> {
    pub r1: Vec3<S>,
    pub r2: Vec3<S>,
    /// Rotor phase `Omega * t` (rad).
    pub phase: S,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct Wrench<S = f64> {
    pub force: Vec3<S>,
    pub torque: Vec3<S>,
}

impl<S: Real> Wrench<S> {
    pub fn zero() -> Self {
        Self { force: Vec3::zeros(), torque: Vec3::zeros() }
    }
}

pub fn rotor_positions<S: Real>(t: S, cmd: &ActuationCommand<S>, geom: &RotorGeometry<S>) -> RotorState<S> {
    let phase = cmd.rotor_rate() * t;
    let half_h = geom.separation * S::half();
    let (s1, c1) = (phase + cmd.theta).sin_cos();
    let (s2, c2) = (-phase + cmd.theta).sin_cos();
    RotorState {
        r1: Vec3::new(geom.arm * c1, geom.arm * s1, half_h),
        r2: Vec3::new(geom.arm * c2, geom.arm * s2, -half_h),
        phase,
    }
}

/// Closed-form net force at rotor phase `phase` and rate `rate`.
pub fn force_at_phase<S: Real>(phase: S, rate: S, theta: S, geom: &RotorGeometry<S>) -> Vec3<S> {
    let amp = S::two() * geom.mass * rate * rate * geom.arm * phase.cos();
    let (st, ct) = theta.sin_cos();
    Vec3::new(amp * ct, amp * st, -S::two() * geom.mass * geom.gravity)
}

/// Closed-form net torque at rotor phase `phase` and rate `rate`.
pub fn torque_at_phase<S: Real>(phase: S, rate: S, theta: S, geom: &RotorGeometry<S>) -> Vec3<S> {
    let (m, l, h, g) = (geom.mass, geom.arm, geom.separation, geom.gravity);
    let (sp, cp) = phase.sin_cos();
    let (st, ct) = theta.sin_cos();
    let shake = h * m * rate * rate * l * sp;
    let grav = S::two() * m * g * l * cp;
    Vec3::new(-shake * ct - grav * st, -shake * st + grav * ct, S::zero())
}

pub fn wrench_at_phase<S: Real>(phase: S, rate: S, theta: S, geom: &RotorGeometry<S>) -> Wrench<S> {
    Wrench { force: force_at_phase(phase, rate, theta, geom), torque: torque_at_phase(phase, rate, theta, geom) }
}

/// Net force of both rotors including their weight.
pub fn net_force<S: Real>(t: S, cmd: &ActuationCommand<S>, geom: &RotorGeometry<S>) -> Vec3<S> {
    let rate = cmd.rotor_rate();
    force_at_phase(rate * t, rate, cmd.theta, geom)
}

/// Net torque about the rotor-pair midpoint, including the moment of the
/// rotor weights. The vertical component is identically zero.
pub fn net_torque<S: Real>(t: S, cmd: &ActuationCommand<S>, geom: &RotorGeometry<S>) -> Vec3<S> {
    let rate = cmd.rotor_rate();
    torque_at_phase(rate * t, rate, cmd.theta, geom)
}

/// Wrench summed rotor by rotor from the centrifugal forces and weights.
/// Independent of the closed forms above.
pub fn rotor_wrench_numeric<S: Real>(t: S, cmd: &ActuationCommand<S>, geom: &RotorGeometry<S>) -> Wrench<S> {
    let rate = cmd.rotor_rate();
    let rotors = rotor_positions(t, cmd, geom);
    let weight = Vec3::new(S::zero(), S::zero(), -geom.mass * geom.gravity);
    let centrifugal = geom.mass * rate * rate;
    let mut w = Wrench::zero();
    for r in [rotors.r1, rotors.r2] {
        // r is already l * (cos, sin, .); the centrifugal force points along its
        // horizontal projection with magnitude m * Omega^2 * l.
        let f = Vec3::new(r.x, r.y, S::zero()) * centrifugal;
        let applied = f + weight;
        w.force += applied;
        w.torque += r.cross(&applied);
    }
    w
}

/// Peak horizontal shaking force `2 m Omega^2 l` at frequency `f` (Hz).
pub fn max_force<S: Real>(f: S, geom: &RotorGeometry<S>) -> S {
    let rate = S::two() * S::PI() * f;
    S::two() * geom.mass * rate * rate * geom.arm
}

/// One envelope sample: time within the period plus the closed-form wrench.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeSample<S = f64> {
    pub t: S,
    pub wrench: Wrench<S>,
}

/// Samples the closed-form wrench at `n` uniform times over one rotor period.
/// For `f = 0` the "period" is one second.
pub fn envelope<S: Real>(cmd: &ActuationCommand<S>, geom: &RotorGeometry<S>, n: usize) -> Vec<EnvelopeSample<S>> {
    let period = if cmd.frequency == S::zero() { S::one() } else { S::one() / cmd.frequency.abs() };
    (0..n)
        .map(|k| {
            let t = period * S::from_usize(k).unwrap() / S::from_usize(n).unwrap();
            EnvelopeSample { t, wrench: Wrench { force: net_force(t, cmd, geom), torque: net_torque(t, cmd, geom) } }
        })
        .collect()
}
