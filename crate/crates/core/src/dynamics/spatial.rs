//! Spatial (6D) motion/force vectors and rigid-body inertia in body coordinates.

use crate::math::{Mat3, Vec3};
use crate::scalar::Real;

/// Spatial motion vector: angular part first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Motion<S> {
    pub ang: Vec3<S>,
    pub lin: Vec3<S>,
}

/// Spatial force vector: moment first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Force<S> {
    pub ang: Vec3<S>,
    pub lin: Vec3<S>,
}

impl<S: Real> Motion<S> {
    pub fn zero() -> Self {
        Self { ang: Vec3::zeros(), lin: Vec3::zeros() }
    }

    pub fn new(ang: Vec3<S>, lin: Vec3<S>) -> Self {
        Self { ang, lin }
    }

    #[inline]
    pub fn add(&self, o: &Self) -> Self {
        Self { ang: self.ang + o.ang, lin: self.lin + o.lin }
    }

    #[inline]
    pub fn scale(&self, s: S) -> Self {
        Self { ang: self.ang * s, lin: self.lin * s }
    }

    /// `self x m` (motion cross product).
    #[inline]
    pub fn cross_motion(&self, m: &Motion<S>) -> Motion<S> {
        Motion { ang: self.ang.cross(&m.ang), lin: self.ang.cross(&m.lin) + self.lin.cross(&m.ang) }
    }

    /// `self x* f` (force cross product).
    #[inline]
    pub fn cross_force(&self, f: &Force<S>) -> Force<S> {
        Force { ang: self.ang.cross(&f.ang) + self.lin.cross(&f.lin), lin: self.ang.cross(&f.lin) }
    }
}

impl<S: Real> Force<S> {
    pub fn zero() -> Self {
        Self { ang: Vec3::zeros(), lin: Vec3::zeros() }
    }

    #[inline]
    pub fn add(&self, o: &Self) -> Self {
        Self { ang: self.ang + o.ang, lin: self.lin + o.lin }
    }

    #[inline]
    pub fn sub(&self, o: &Self) -> Self {
        Self { ang: self.ang - o.ang, lin: self.lin - o.lin }
    }

    /// Force `f` applied at `point`, both in the same coordinates.
    pub fn at_point(point: Vec3<S>, f: Vec3<S>) -> Self {
        Self { ang: point.cross(&f), lin: f }
    }

    /// Power pairing with a motion vector.
    #[inline]
    pub fn dot(&self, m: &Motion<S>) -> S {
        self.ang.dot(&m.ang) + self.lin.dot(&m.lin)
    }
}

/// Placement of a child frame in its parent: `rot` maps child coordinates to
/// parent coordinates, `pos` is the child origin in parent coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transform<S> {
    pub rot: Mat3<S>,
    pub pos: Vec3<S>,
}

impl<S: Real> Transform<S> {
    pub fn identity() -> Self {
        Self { rot: Mat3::identity(), pos: Vec3::zeros() }
    }

    pub fn new(rot: Mat3<S>, pos: Vec3<S>) -> Self {
        Self { rot, pos }
    }

    /// `self` followed by `child` (child expressed in self's frame).
    pub fn compose(&self, child: &Transform<S>) -> Transform<S> {
        Transform { rot: self.rot.mul_mat(&child.rot), pos: self.pos + self.rot.mul_vec(&child.pos) }
    }

    pub fn apply_point(&self, p: &Vec3<S>) -> Vec3<S> {
        self.pos + self.rot.mul_vec(p)
    }

    pub fn inverse_apply_point(&self, p: &Vec3<S>) -> Vec3<S> {
        self.rot.tr_mul_vec(&(*p - self.pos))
    }

    /// Parent-coordinate motion expressed in child coordinates.
    #[inline]
    pub fn motion_to_child(&self, m: &Motion<S>) -> Motion<S> {
        Motion { ang: self.rot.tr_mul_vec(&m.ang), lin: self.rot.tr_mul_vec(&(m.lin + m.ang.cross(&self.pos))) }
    }

    /// Child-coordinate force expressed in parent coordinates.
    #[inline]
    pub fn force_to_parent(&self, f: &Force<S>) -> Force<S> {
        let lin = self.rot.mul_vec(&f.lin);
        Force { ang: self.rot.mul_vec(&f.ang) + self.pos.cross(&lin), lin }
    }
}

/// Rigid-body inertia about the body origin: mass, first moment `h = m c`,
/// and rotational inertia `i_o` about the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidInertia<S> {
    pub mass: S,
    pub h: Vec3<S>,
    pub i_o: Mat3<S>,
}

impl<S: Real> RigidInertia<S> {
    pub fn zero() -> Self {
        Self { mass: S::zero(), h: Vec3::zeros(), i_o: Mat3::zeros() }
    }

    /// From mass, center of mass and inertia about the center of mass.
    pub fn from_com(mass: S, com: Vec3<S>, i_com: Mat3<S>) -> Self {
        let h = com * mass;
        let sc = Mat3::skew(com);
        // I_o = I_c - m [c]x [c]x
        let i_o = i_com.sub(&sc.mul_mat(&sc).scale(mass));
        Self { mass, h, i_o }
    }

    pub fn point_mass(mass: S, at: Vec3<S>) -> Self {
        Self::from_com(mass, at, Mat3::zeros())
    }

    /// Solid box with edge lengths `size` centered at `center`.
    pub fn solid_box(mass: S, center: Vec3<S>, size: Vec3<S>) -> Self {
        let k = mass / S::lit(12.0);
        let (a, b, c) = (size.x * size.x, size.y * size.y, size.z * size.z);
        Self::from_com(mass, center, Mat3::diagonal(k * (b + c), k * (a + c), k * (a + b)))
    }

    pub fn is_zero(&self) -> bool {
        self.mass == S::zero() && self.h == Vec3::zeros() && self.i_o == Mat3::zeros()
    }

    pub fn com(&self) -> Vec3<S> {
        if self.mass > S::zero() {
            self.h * (S::one() / self.mass)
        } else {
            Vec3::zeros()
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { mass: self.mass + o.mass, h: self.h + o.h, i_o: self.i_o.add(&o.i_o) }
    }

    /// Inertia of this (child-frame) body expressed about the parent origin.
    pub fn to_parent(&self, x: &Transform<S>) -> Self {
        let h_rot = x.rot.mul_vec(&self.h);
        let i_rot = self.i_o.rotated_by(&x.rot);
        let sp = Mat3::skew(x.pos);
        let sh = Mat3::skew(h_rot);
        // shift origin by -pos: I' = I - ([h]x[p]x + [p]x[h]x) - m [p]x[p]x
        let i_o = i_rot
            .sub(&sh.mul_mat(&sp).add(&sp.mul_mat(&sh)))
            .sub(&sp.mul_mat(&sp).scale(self.mass));
        Self { mass: self.mass, h: h_rot + x.pos * self.mass, i_o }
    }

    /// Same mass distribution rigidly translated by `d` within the body frame.
    pub fn translated(&self, d: Vec3<S>) -> Self {
        self.to_parent(&Transform::new(Mat3::identity(), d))
    }

    #[inline]
    pub fn apply(&self, m: &Motion<S>) -> Force<S> {
        Force {
            ang: self.i_o.mul_vec(&m.ang) + self.h.cross(&m.lin),
            lin: m.lin * self.mass - self.h.cross(&m.ang),
        }
    }
}
