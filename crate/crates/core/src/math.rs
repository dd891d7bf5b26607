//! Small fixed-size linear algebra: 3-vectors, 3x3 matrices and unit quaternions.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct Vec3<S> {
    pub x: S,
    pub y: S,
    pub z: S,
}

impl<S: Real> Vec3<S> {
    #[inline]
    pub const fn new(x: S, y: S, z: S) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zeros() -> Self {
        Self::new(S::zero(), S::zero(), S::zero())
    }

    pub fn x_axis() -> Self {
        Self::new(S::one(), S::zero(), S::zero())
    }

    pub fn y_axis() -> Self {
        Self::new(S::zero(), S::one(), S::zero())
    }

    pub fn z_axis() -> Self {
        Self::new(S::zero(), S::zero(), S::one())
    }

    pub fn from_f64(x: f64, y: f64, z: f64) -> Self {
        Self::new(S::lit(x), S::lit(y), S::lit(z))
    }

    #[inline]
    pub fn dot(&self, o: &Self) -> S {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(&self, o: &Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_squared(&self) -> S {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> S {
        self.norm_squared().sqrt()
    }

    pub fn normalize(&self) -> Self {
        *self * (S::one() / self.norm())
    }

    #[inline]
    pub fn scale(&self, s: S) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [S; 3] {
        [self.x, self.y, self.z]
    }

    pub fn cast<T: Real>(self) -> Vec3<T> {
        Vec3::new(
            T::lit(self.x.to_f64_lossy()),
            T::lit(self.y.to_f64_lossy()),
            T::lit(self.z.to_f64_lossy()),
        )
    }
}

impl<S: Real> Add for Vec3<S> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<S: Real> Sub for Vec3<S> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<S: Real> Neg for Vec3<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<S: Real> Mul<S> for Vec3<S> {
    type Output = Self;
    #[inline]
    fn mul(self, s: S) -> Self {
        self.scale(s)
    }
}

impl<S: Real> AddAssign for Vec3<S> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<S: Real> SubAssign for Vec3<S> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<S> Index<usize> for Vec3<S> {
    type Output = S;
    fn index(&self, i: usize) -> &S {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

/// Row-major 3x3 matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct Mat3<S> {
    pub m: [[S; 3]; 3],
}

impl<S: Real> Mat3<S> {
    pub fn zeros() -> Self {
        Self { m: [[S::zero(); 3]; 3] }
    }

    pub fn identity() -> Self {
        Self::diagonal(S::one(), S::one(), S::one())
    }

    pub fn diagonal(a: S, b: S, c: S) -> Self {
        let mut m = Self::zeros();
        m.m[0][0] = a;
        m.m[1][1] = b;
        m.m[2][2] = c;
        m
    }

    /// Matrix whose columns are `a`, `b`, `c`.
    pub fn from_columns(a: Vec3<S>, b: Vec3<S>, c: Vec3<S>) -> Self {
        Self {
            m: [[a.x, b.x, c.x], [a.y, b.y, c.y], [a.z, b.z, c.z]],
        }
    }

    pub fn column(&self, j: usize) -> Vec3<S> {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    /// Cross-product matrix: `skew(v) * w == v x w`.
    pub fn skew(v: Vec3<S>) -> Self {
        let z = S::zero();
        Self {
            m: [[z, -v.z, v.y], [v.z, z, -v.x], [-v.y, v.x, z]],
        }
    }

    /// Rotation by `angle` about the unit `axis`.
    pub fn rotation(axis: Vec3<S>, angle: S) -> Self {
        let (s, c) = angle.sin_cos();
        let t = S::one() - c;
        let (x, y, z) = (axis.x, axis.y, axis.z);
        Self {
            m: [
                [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
                [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
                [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
            ],
        }
    }

    /// Same as `rotation`, with a shortcut for the coordinate axes.
    #[inline]
    pub fn axis_rotation(axis: Vec3<S>, angle: S) -> Self {
        let (o, z) = (S::one(), S::zero());
        if axis.y == z && axis.z == z && axis.x == o {
            let (s, c) = angle.sin_cos();
            Self { m: [[o, z, z], [z, c, -s], [z, s, c]] }
        } else if axis.x == z && axis.z == z && axis.y == o {
            let (s, c) = angle.sin_cos();
            Self { m: [[c, z, s], [z, o, z], [-s, z, c]] }
        } else if axis.x == z && axis.y == z && axis.z == o {
            let (s, c) = angle.sin_cos();
            Self { m: [[c, -s, z], [s, c, z], [z, z, o]] }
        } else {
            Self::rotation(axis, angle)
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                t.m[i][j] = self.m[j][i];
            }
        }
        t
    }

    #[inline]
    pub fn mul_vec(&self, v: &Vec3<S>) -> Vec3<S> {
        let m = &self.m;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    /// `self^T * v` without forming the transpose.
    #[inline]
    pub fn tr_mul_vec(&self, v: &Vec3<S>) -> Vec3<S> {
        let m = &self.m;
        Vec3::new(
            m[0][0] * v.x + m[1][0] * v.y + m[2][0] * v.z,
            m[0][1] * v.x + m[1][1] * v.y + m[2][1] * v.z,
            m[0][2] * v.x + m[1][2] * v.y + m[2][2] * v.z,
        )
    }

    pub fn mul_mat(&self, o: &Self) -> Self {
        let mut r = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                r.m[i][j] = self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j] + self.m[i][2] * o.m[2][j];
            }
        }
        r
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = *self;
        for i in 0..3 {
            for j in 0..3 {
                r.m[i][j] = r.m[i][j] + o.m[i][j];
            }
        }
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut r = *self;
        for i in 0..3 {
            for j in 0..3 {
                r.m[i][j] = r.m[i][j] - o.m[i][j];
            }
        }
        r
    }

    pub fn scale(&self, s: S) -> Self {
        let mut r = *self;
        for row in r.m.iter_mut() {
            for v in row.iter_mut() {
                *v = *v * s;
            }
        }
        r
    }

    /// `R * self * R^T`.
    pub fn rotated_by(&self, r: &Self) -> Self {
        r.mul_mat(self).mul_mat(&r.transpose())
    }

    pub fn determinant(&self) -> S {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Intrinsic X-Y-Z angles `(a, b, c)` with `self = Rx(a) Ry(b) Rz(c)`.
    pub fn intrinsic_xyz(&self) -> Vec3<S> {
        let m = &self.m;
        let sb = m[0][2].max(-S::one()).min(S::one());
        let b = sb.asin();
        let a = (-m[1][2]).atan2(m[2][2]);
        let c = (-m[0][1]).atan2(m[0][0]);
        Vec3::new(a, b, c)
    }
}

/// Unit quaternion `w + xi + yj + zk`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct Quat<S> {
    pub w: S,
    pub x: S,
    pub y: S,
    pub z: S,
}

impl<S: Real> Quat<S> {
    pub fn identity() -> Self {
        Self { w: S::one(), x: S::zero(), y: S::zero(), z: S::zero() }
    }

    pub fn from_axis_angle(axis: Vec3<S>, angle: S) -> Self {
        let (s, c) = (angle * S::half()).sin_cos();
        Self { w: c, x: axis.x * s, y: axis.y * s, z: axis.z * s }
    }

    pub fn from_yaw(yaw: S) -> Self {
        Self::from_axis_angle(Vec3::z_axis(), yaw)
    }

    pub fn norm(&self) -> S {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalize(&self) -> Self {
        let n = S::one() / self.norm();
        Self { w: self.w * n, x: self.x * n, y: self.y * n, z: self.z * n }
    }

    pub fn conjugate(&self) -> Self {
        Self { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }

    pub fn to_matrix(&self) -> Mat3<S> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        let one = S::one();
        let two = S::two();
        Mat3 {
            m: [
                [one - two * (y * y + z * z), two * (x * y - w * z), two * (x * z + w * y)],
                [two * (x * y + w * z), one - two * (x * x + z * z), two * (y * z - w * x)],
                [two * (x * z - w * y), two * (y * z + w * x), one - two * (x * x + y * y)],
            ],
        }
    }

    pub fn rotate(&self, v: &Vec3<S>) -> Vec3<S> {
        self.to_matrix().mul_vec(v)
    }

    pub fn inverse_rotate(&self, v: &Vec3<S>) -> Vec3<S> {
        self.to_matrix().tr_mul_vec(v)
    }

    /// Heading angle of the rotated body x axis projected on the ground plane.
    pub fn yaw(&self) -> S {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        (S::two() * (w * z + x * y)).atan2(S::one() - S::two() * (y * y + z * z))
    }

    /// Right-multiplies by the rotation `exp(omega * dt)` with `omega` in body coordinates.
    pub fn integrate_body_rate(&self, omega: &Vec3<S>, dt: S) -> Self {
        let angle = omega.norm() * dt;
        let dq = if angle > S::epsilon() {
            Self::from_axis_angle(omega.normalize(), angle)
        } else {
            let h = dt * S::half();
            Self { w: S::one(), x: omega.x * h, y: omega.y * h, z: omega.z * h }
        };
        self.mul(&dq).normalize()
    }

    pub fn is_finite(&self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}
