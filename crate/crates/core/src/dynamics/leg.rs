//! Twisted compliant beam approximated by three rigid segments joined by
//! bend/twist spring-damper pairs.
//!
//! Leg frame: Y runs along the beam from base to tip, X across its width and
//! Z through its thickness. Bending is about X, twisting about Y.

use serde::{Deserialize, Serialize};

use crate::math::{Mat3, Vec3};
use crate::model::{DesignParams, LegStiffness};
use crate::scalar::Real;
use crate::{Error, Result};

use super::multibody::{Body, Multibody};
use super::spatial::{RigidInertia, Transform};

pub const SEGMENTS: usize = 3;
/// Joints per leg: one bend and one twist per connection.
pub const JOINTS_PER_LEG: usize = 2 * SEGMENTS;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct PrbmLeg<S = f64> {
    pub segment_length: S,
    pub segment_mass: S,
    /// Box size of one segment (width, length, thickness).
    pub segment_size: Vec3<S>,
    /// Mounting twist about Y at each connection (rad).
    pub twist_offsets: [S; SEGMENTS],
    pub stiffness: LegStiffness<S>,
    pub foot_mass: S,
    /// Foot bar size in the distal segment frame.
    pub foot_size: Vec3<S>,
}

/// Linear torsional spring-damper law.
#[inline]
pub fn joint_torque<S: Real>(q: S, qdot: S, k: S, b: S) -> S {
    -k * q - b * qdot
}

pub fn build_leg<S: Real>(stiffness: &LegStiffness<S>, design: &DesignParams<S>) -> Result<PrbmLeg<S>> {
    stiffness.validate()?;
    let vals = [design.leg_length, design.leg_width, design.leg_thickness, design.leg_mass, design.foot_mass, design.foot_length, design.foot_width];
    if vals.iter().any(|v| !v.is_finite() || *v <= S::zero()) {
        return Err(Error::invalid("leg dimensions and masses must be positive and finite"));
    }
    if !design.leg_twist.is_finite() || design.leg_twist < S::zero() {
        return Err(Error::invalid("leg twist must be finite and non-negative"));
    }
    let n = S::lit(SEGMENTS as f64);
    let seg_len = design.leg_length / n;
    let half_twist = design.leg_twist * S::half();
    Ok(PrbmLeg {
        segment_length: seg_len,
        segment_mass: design.leg_mass / n,
        segment_size: Vec3::new(design.leg_width, seg_len, design.leg_thickness),
        twist_offsets: [S::zero(), half_twist, half_twist],
        stiffness: *stiffness,
        foot_mass: design.foot_mass,
        foot_size: Vec3::new(design.foot_length, design.foot_width, design.foot_width),
    })
}

impl<S: Real> PrbmLeg<S> {
    pub fn segment_inertia(&self) -> RigidInertia<S> {
        RigidInertia::solid_box(self.segment_mass, Vec3::new(S::zero(), self.segment_length * S::half(), S::zero()), self.segment_size)
    }

    pub fn foot_inertia(&self) -> RigidInertia<S> {
        let c = Vec3::new(S::zero(), self.segment_length + self.foot_size.y * S::half(), S::zero());
        RigidInertia::solid_box(self.foot_mass, c, self.foot_size)
    }

    /// Ground contact point in the distal segment frame.
    pub fn contact_point(&self) -> Vec3<S> {
        Vec3::new(S::zero(), self.segment_length + self.foot_size.y, S::zero())
    }

    pub fn total_mass(&self) -> S {
        self.segment_mass * S::lit(SEGMENTS as f64) + self.foot_mass
    }

    /// Rotation of the distal segment relative to the leg base at `q = 0`.
    pub fn rest_twist(&self) -> Mat3<S> {
        let y = Vec3::y_axis();
        self.twist_offsets.iter().fold(Mat3::identity(), |acc, &a| acc.mul_mat(&Mat3::rotation(y, a)))
    }

    /// Appends the leg's bodies to `mb` under `parent`, with the leg base frame
    /// placed at `mount`. `mirrored` reverses the twist sense. Returns the
    /// index of the distal segment.
    pub fn attach(&self, mb: &mut Multibody<S>, parent: Option<usize>, mount: Transform<S>, mirrored: bool) -> usize {
        let sign = if mirrored { -S::one() } else { S::one() };
        let k = &self.stiffness;
        let mut parent = parent;
        for c in 0..SEGMENTS {
            let twist = Mat3::rotation(Vec3::y_axis(), sign * self.twist_offsets[c]);
            let tree = if c == 0 {
                Transform::new(mount.rot.mul_mat(&twist), mount.pos)
            } else {
                Transform::new(twist, Vec3::new(S::zero(), self.segment_length, S::zero()))
            };
            mb.bodies.push(Body {
                parent,
                tree,
                axis: Vec3::x_axis(),
                inertia: RigidInertia::zero(),
                stiffness: k.k_bend,
                damping: k.b_bend,
            });
            let bend = mb.bodies.len() - 1;
            let mut inertia = self.segment_inertia();
            if c == SEGMENTS - 1 {
                inertia = inertia.add(&self.foot_inertia());
            }
            mb.bodies.push(Body {
                parent: Some(bend),
                tree: Transform::identity(),
                axis: Vec3::y_axis(),
                inertia,
                stiffness: k.k_twist,
                damping: k.b_twist,
            });
            parent = Some(mb.bodies.len() - 1);
        }
        mb.bodies.len() - 1
    }
}
