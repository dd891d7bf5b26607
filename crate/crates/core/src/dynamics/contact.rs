//! Penalty ground contact with regularized Coulomb friction.
//!
//! The ground is the plane `z = 0`. A contact point below it is pushed back
//! by a spring-damper normal force; tangential friction is `-mu N sat(v_t / v_eps)`
//! so it never exceeds the Coulomb bound `mu N`.

use serde::{Deserialize, Serialize};

use crate::math::{Mat3, Vec3};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct ContactParams<S = f64> {
    /// Normal stiffness (N/m).
    pub stiffness: S,
    /// Normal damping (N s/m).
    pub damping: S,
    /// Tangential regularization velocity (m/s).
    pub slip_velocity: S,
    /// Torsional friction coefficient (m). Point feet carry no torsional
    /// friction; kept for configuration compatibility.
    pub torsional: S,
}

impl<S: Real> Default for ContactParams<S> {
    fn default() -> Self {
        Self { stiffness: S::lit(2.0e4), damping: S::lit(50.0), slip_velocity: S::lit(1.0e-3), torsional: S::zero() }
    }
}

impl<S: Real> ContactParams<S> {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.stiffness > S::zero()) || !(self.damping >= S::zero()) || !(self.slip_velocity > S::zero()) {
            return Err(crate::Error::invalid("contact requires k_n > 0, d_n >= 0 and v_eps > 0"));
        }
        if !(self.torsional >= S::zero()) {
            return Err(crate::Error::invalid("torsional friction must be >= 0"));
        }
        Ok(())
    }
}

/// World-frame position and velocity of a contact point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointState<S> {
    pub position: Vec3<S>,
    pub velocity: Vec3<S>,
}

/// Contact force on the point (world frame).
pub fn contact_force<S: Real>(point: &PointState<S>, mu: S, params: &ContactParams<S>) -> Vec3<S> {
    let z = point.position.z;
    if z > S::zero() {
        return Vec3::zeros();
    }
    let normal = (-params.stiffness * z - params.damping * point.velocity.z).max(S::zero());
    if normal == S::zero() {
        return Vec3::zeros();
    }
    let (vx, vy) = (point.velocity.x, point.velocity.y);
    let speed = vx.hypot(vy);
    let scale = mu * normal / speed.max(params.slip_velocity);
    Vec3::new(-scale * vx, -scale * vy, normal)
}

/// Linearization of the contact force for the implicit solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactLinearization<S> {
    pub force: Vec3<S>,
    /// `-dF/dv` (positive semi-definite).
    pub damping: Mat3<S>,
    /// `-dF/dz` acting on the normal direction only.
    pub normal_stiffness: S,
}

pub fn linearize_contact<S: Real>(point: &PointState<S>, mu: S, params: &ContactParams<S>) -> ContactLinearization<S> {
    let force = contact_force(point, mu, params);
    let normal = force.z;
    if normal <= S::zero() {
        return ContactLinearization { force, damping: Mat3::zeros(), normal_stiffness: S::zero() };
    }
    let (vx, vy) = (point.velocity.x, point.velocity.y);
    let speed = vx.hypot(vy);
    let mut d = Mat3::zeros();
    if speed <= params.slip_velocity {
        let c = mu * normal / params.slip_velocity;
        d.m[0][0] = c;
        d.m[1][1] = c;
    } else {
        // Saturated: only the direction of slip changes with v.
        let c = mu * normal / speed;
        let (tx, ty) = (vx / speed, vy / speed);
        d.m[0][0] = c * (S::one() - tx * tx);
        d.m[0][1] = -c * tx * ty;
        d.m[1][0] = -c * tx * ty;
        d.m[1][1] = c * (S::one() - ty * ty);
    }
    d.m[2][2] = params.damping;
    ContactLinearization { force, damping: d, normal_stiffness: params.stiffness }
}
