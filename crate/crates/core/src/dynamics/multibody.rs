//! Reduced-coordinate tree of rigid bodies connected by revolute spring-damper
//! joints, with an optional 6-DoF floating root.
//!
//! Generalized velocity layout: for a floating root `[omega, v]` of the root in
//! root coordinates, followed by one rate per joint. Bodies are stored so that
//! every parent precedes its children.

use crate::math::{Mat3, Quat, Vec3};
use crate::model::Pose;
use crate::scalar::Real;

use super::contact::{linearize_contact, ContactParams, PointState};
use super::spatial::{Force, Motion, RigidInertia, Transform};

/// One body hanging off a revolute joint.
#[derive(Clone, Debug, PartialEq)]
pub struct Body<S> {
    /// Parent body, `None` for the root.
    pub parent: Option<usize>,
    /// Joint frame in parent coordinates.
    pub tree: Transform<S>,
    /// Joint axis in joint coordinates (unit).
    pub axis: Vec3<S>,
    pub inertia: RigidInertia<S>,
    pub stiffness: S,
    pub damping: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Multibody<S> {
    pub floating: bool,
    pub root_inertia: RigidInertia<S>,
    pub bodies: Vec<Body<S>>,
    /// Gravity in world coordinates.
    pub gravity: Vec3<S>,
}

/// Point on a body that can touch the ground.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactSite<S> {
    /// Body index, `None` for the root.
    pub body: Option<usize>,
    pub point: Vec3<S>,
    pub mu: S,
}

/// Point load applied during a step (world-frame force).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointLoad<S> {
    pub body: Option<usize>,
    pub point: Vec3<S>,
    pub force: Vec3<S>,
}

pub const NO_PARENT: usize = usize::MAX;

#[derive(Clone, Copy, Debug)]
struct ActiveContact<S> {
    site: usize,
    point: Vec3<S>,
    damping: Mat3<S>,
    stiffness: S,
    vz: S,
}

/// Generalized state of the tree.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeState<S> {
    pub root_pose: Pose<S>,
    /// Root spatial velocity in root coordinates.
    pub root_velocity: Motion<S>,
    pub q: Vec<S>,
    pub qd: Vec<S>,
}

/// Scratch buffers reused across steps.
#[derive(Clone, Debug)]
pub struct Workspace<S> {
    x_local: Vec<Transform<S>>,
    x_world: Vec<Transform<S>>,
    root_world: Transform<S>,
    vel: Vec<Motion<S>>,
    acc: Vec<Motion<S>>,
    force: Vec<Force<S>>,
    f_ext: Vec<Force<S>>,
    root_ext: Force<S>,
    ic: Vec<RigidInertia<S>>,
    mass: Vec<S>,
    rhs: Vec<S>,
    jac: Vec<Vec3<S>>,
    gj: Vec<Vec3<S>>,
    chain: Vec<usize>,
    /// Parent dof of each dof (`NO_PARENT` for the first).
    lambda: Vec<usize>,
    v: Vec<S>,
    active: Vec<ActiveContact<S>>,
    /// Latest contact forces per site (world frame).
    pub contact_forces: Vec<Vec3<S>>,
}

impl<S: Real> Multibody<S> {
    pub fn root_dofs(&self) -> usize {
        if self.floating {
            6
        } else {
            0
        }
    }

    pub fn dofs(&self) -> usize {
        self.root_dofs() + self.bodies.len()
    }

    pub fn total_mass(&self) -> S {
        self.bodies.iter().fold(self.root_inertia.mass, |acc, b| acc + b.inertia.mass)
    }

    /// Parent dof of every dof: the root dofs form a chain, each joint hangs
    /// off its parent body's joint or the last root dof.
    pub fn dof_parents(&self) -> Vec<usize> {
        let nr = self.root_dofs();
        let mut lambda: Vec<usize> = (0..nr).map(|k| if k == 0 { NO_PARENT } else { k - 1 }).collect();
        for b in &self.bodies {
            lambda.push(match b.parent {
                Some(p) => nr + p,
                None if nr > 0 => nr - 1,
                None => NO_PARENT,
            });
        }
        lambda
    }

    pub fn workspace(&self) -> Workspace<S> {
        let nb = self.bodies.len();
        let n = self.dofs();
        Workspace {
            x_local: vec![Transform::identity(); nb],
            x_world: vec![Transform::identity(); nb],
            root_world: Transform::identity(),
            vel: vec![Motion::zero(); nb],
            acc: vec![Motion::zero(); nb],
            force: vec![Force::zero(); nb],
            f_ext: vec![Force::zero(); nb],
            root_ext: Force::zero(),
            ic: vec![RigidInertia::zero(); nb],
            mass: vec![S::zero(); n * n],
            rhs: vec![S::zero(); n],
            jac: vec![Vec3::zeros(); n],
            gj: vec![Vec3::zeros(); n],
            chain: Vec::with_capacity(n),
            lambda: self.dof_parents(),
            v: Vec::with_capacity(n),
            active: Vec::new(),
            contact_forces: Vec::new(),
        }
    }

    /// Local and world placement of every body.
    pub fn kinematics(&self, ws: &mut Workspace<S>, root_pose: &Pose<S>, q: &[S]) {
        ws.root_world = Transform::new(root_pose.orientation.to_matrix(), root_pose.position);
        for (i, b) in self.bodies.iter().enumerate() {
            let joint = Mat3::axis_rotation(b.axis, q[i]);
            let local = Transform::new(b.tree.rot.mul_mat(&joint), b.tree.pos);
            let parent_world = match b.parent {
                Some(p) => ws.x_world[p],
                None => ws.root_world,
            };
            ws.x_local[i] = local;
            ws.x_world[i] = parent_world.compose(&local);
        }
    }

    /// World placement of a body (after `kinematics`).
    pub fn world_transform(&self, ws: &Workspace<S>, body: Option<usize>) -> Transform<S> {
        match body {
            Some(i) => ws.x_world[i],
            None => ws.root_world,
        }
    }

    fn velocities(&self, ws: &mut Workspace<S>, root_vel: &Motion<S>, qd: &[S]) {
        for (i, b) in self.bodies.iter().enumerate() {
            let vp = match b.parent {
                Some(p) => ws.vel[p],
                None => *root_vel,
            };
            let mut v = ws.x_local[i].motion_to_child(&vp);
            v.ang += b.axis * qd[i];
            ws.vel[i] = v;
        }
    }

    /// World velocity of a body-fixed point (after kinematics and velocities).
    fn point_velocity(&self, ws: &Workspace<S>, root_vel: &Motion<S>, body: Option<usize>, local: &Vec3<S>) -> Vec3<S> {
        let (x, v) = match body {
            Some(i) => (ws.x_world[i], ws.vel[i]),
            None => (ws.root_world, *root_vel),
        };
        x.rot.mul_vec(&(v.lin + v.ang.cross(local)))
    }

    /// Recursive Newton-Euler with zero generalized acceleration: returns the
    /// generalized bias (Coriolis, gravity, minus external loads) in `ws.rhs`.
    fn bias(&self, ws: &mut Workspace<S>, root_vel: &Motion<S>, qd: &[S]) {
        let g_root = ws.root_world.rot.tr_mul_vec(&self.gravity);
        let root_acc = Motion::new(Vec3::zeros(), -g_root);
        for (i, b) in self.bodies.iter().enumerate() {
            let ap = match b.parent {
                Some(p) => ws.acc[p],
                None => root_acc,
            };
            let vj = Motion::new(b.axis * qd[i], Vec3::zeros());
            let a = ws.x_local[i].motion_to_child(&ap).add(&ws.vel[i].cross_motion(&vj));
            ws.acc[i] = a;
            if b.inertia.is_zero() {
                ws.force[i] = Force::zero().sub(&ws.f_ext[i]);
            } else {
                let iv = b.inertia.apply(&ws.vel[i]);
                ws.force[i] = b.inertia.apply(&a).add(&ws.vel[i].cross_force(&iv)).sub(&ws.f_ext[i]);
            }
        }
        let iv0 = self.root_inertia.apply(root_vel);
        let mut f_root = self.root_inertia.apply(&root_acc).add(&root_vel.cross_force(&iv0)).sub(&ws.root_ext);
        let nr = self.root_dofs();
        for i in (0..self.bodies.len()).rev() {
            let b = &self.bodies[i];
            ws.rhs[nr + i] = b.axis.dot(&ws.force[i].ang);
            let fp = ws.x_local[i].force_to_parent(&ws.force[i]);
            match b.parent {
                Some(p) => ws.force[p] = ws.force[p].add(&fp),
                None => f_root = f_root.add(&fp),
            }
        }
        if self.floating {
            for k in 0..3 {
                ws.rhs[k] = f_root.ang[k];
                ws.rhs[3 + k] = f_root.lin[k];
            }
        }
    }

    /// Composite-rigid-body mass matrix into `ws.mass` (row-major). Entries
    /// coupling dofs on different branches are not touched; they are zero in
    /// a fresh workspace.
    fn mass_matrix(&self, ws: &mut Workspace<S>) {
        let n = self.dofs();
        let nr = self.root_dofs();
        for (i, b) in self.bodies.iter().enumerate() {
            ws.ic[i] = b.inertia;
        }
        let mut ic_root = self.root_inertia;
        for i in (0..self.bodies.len()).rev() {
            let up = ws.ic[i].to_parent(&ws.x_local[i]);
            match self.bodies[i].parent {
                Some(p) => ws.ic[p] = ws.ic[p].add(&up),
                None => ic_root = ic_root.add(&up),
            }
        }
        for j in 0..self.bodies.len() {
            let bj = &self.bodies[j];
            let mut f = ws.ic[j].apply(&Motion::new(bj.axis, Vec3::zeros()));
            let dj = nr + j;
            ws.mass[dj * n + dj] = bj.axis.dot(&f.ang);
            let mut k = j;
            loop {
                f = ws.x_local[k].force_to_parent(&f);
                match self.bodies[k].parent {
                    Some(p) => {
                        k = p;
                        let dk = nr + k;
                        let h = self.bodies[k].axis.dot(&f.ang);
                        ws.mass[dk * n + dj] = h;
                        ws.mass[dj * n + dk] = h;
                    }
                    None => {
                        if self.floating {
                            let col = [f.ang.x, f.ang.y, f.ang.z, f.lin.x, f.lin.y, f.lin.z];
                            for (r, v) in col.into_iter().enumerate() {
                                ws.mass[r * n + dj] = v;
                                ws.mass[dj * n + r] = v;
                            }
                        }
                        break;
                    }
                }
            }
        }
        if self.floating {
            let sh = Mat3::skew(ic_root.h);
            for r in 0..3 {
                for c in 0..3 {
                    ws.mass[r * n + c] = ic_root.i_o.m[r][c];
                    ws.mass[r * n + 3 + c] = sh.m[r][c];
                    ws.mass[(3 + c) * n + r] = sh.m[r][c];
                }
                for c in 0..3 {
                    ws.mass[(3 + r) * n + 3 + c] = if r == c { ic_root.mass } else { S::zero() };
                }
            }
        }
    }

    /// World-frame Jacobian of a body-fixed point into `ws.jac`. Only the
    /// columns listed in `ws.chain` (the point's ancestor dofs) are written.
    fn point_jacobian(&self, ws: &mut Workspace<S>, body: Option<usize>, world_point: &Vec3<S>) {
        let nr = self.root_dofs();
        ws.chain.clear();
        let mut cur = body;
        while let Some(i) = cur {
            let xw = ws.x_world[i];
            let axis = xw.rot.mul_vec(&self.bodies[i].axis);
            ws.jac[nr + i] = axis.cross(&(*world_point - xw.pos));
            ws.chain.push(nr + i);
            cur = self.bodies[i].parent;
        }
        if self.floating {
            let r = ws.root_world.rot;
            let rb = ws.root_world.inverse_apply_point(world_point);
            let units = [Vec3::x_axis(), Vec3::y_axis(), Vec3::z_axis()];
            for k in 0..3 {
                ws.jac[k] = r.mul_vec(&units[k].cross(&rb));
                ws.jac[3 + k] = r.column(k);
            }
            ws.chain.extend(0..6);
        }
    }

    fn clear_loads(&self, ws: &mut Workspace<S>) {
        ws.f_ext.iter_mut().for_each(|f| *f = Force::zero());
        ws.root_ext = Force::zero();
    }

    fn add_point_load(&self, ws: &mut Workspace<S>, body: Option<usize>, world_point: &Vec3<S>, force: &Vec3<S>) {
        let x = self.world_transform(ws, body);
        let local_point = x.inverse_apply_point(world_point);
        let local_force = x.rot.tr_mul_vec(force);
        let f = Force::at_point(local_point, local_force);
        match body {
            Some(i) => ws.f_ext[i] = ws.f_ext[i].add(&f),
            None => ws.root_ext = ws.root_ext.add(&f),
        }
    }

    /// Kinetic energy `v^T M v / 2`.
    pub fn kinetic_energy(&self, ws: &mut Workspace<S>, state: &TreeState<S>) -> S {
        self.kinematics(ws, &state.root_pose, &state.q);
        self.velocities(ws, &state.root_velocity, &state.qd);
        let mut e = self.root_inertia.apply(&state.root_velocity).dot(&state.root_velocity);
        for (i, b) in self.bodies.iter().enumerate() {
            e = e + b.inertia.apply(&ws.vel[i]).dot(&ws.vel[i]);
        }
        e * S::half()
    }

    /// Gravity plus joint-spring potential energy.
    pub fn potential_energy(&self, ws: &mut Workspace<S>, state: &TreeState<S>) -> S {
        self.kinematics(ws, &state.root_pose, &state.q);
        let mut e = -self.root_inertia.mass * self.gravity.dot(&ws.root_world.apply_point(&self.root_inertia.com()));
        for (i, b) in self.bodies.iter().enumerate() {
            let c = ws.x_world[i].apply_point(&b.inertia.com());
            e = e - b.inertia.mass * self.gravity.dot(&c) + S::half() * b.stiffness * state.q[i] * state.q[i];
        }
        e
    }

    /// World position of a body-fixed point.
    pub fn point_position(&self, ws: &mut Workspace<S>, state: &TreeState<S>, body: Option<usize>, local: &Vec3<S>) -> Vec3<S> {
        self.kinematics(ws, &state.root_pose, &state.q);
        self.world_transform(ws, body).apply_point(local)
    }

    /// Generalized static force residual `-K q + g(q) + J^T F_loads` at rest.
    pub fn static_residual(&self, ws: &mut Workspace<S>, state: &TreeState<S>, loads: &[PointLoad<S>], out: &mut [S]) {
        let zero_qd = vec![S::zero(); self.bodies.len()];
        self.kinematics(ws, &state.root_pose, &state.q);
        self.velocities(ws, &Motion::zero(), &zero_qd);
        self.clear_loads(ws);
        for l in loads {
            let wp = self.world_transform(ws, l.body).apply_point(&l.point);
            self.add_point_load(ws, l.body, &wp, &l.force);
        }
        self.bias(ws, &Motion::zero(), &zero_qd);
        let nr = self.root_dofs();
        for i in 0..self.dofs() {
            out[i] = -ws.rhs[i];
            if i >= nr {
                out[i] = out[i] - self.bodies[i - nr].stiffness * state.q[i - nr];
            }
        }
    }

    /// Advances `state` by one linearly-implicit Euler step.
    ///
    /// Joint springs/dampers and contact normal/friction forces enter the
    /// system matrix `M + dt D + dt^2 K`; gravity, Coriolis and the applied
    /// loads are explicit. Positions are then updated with the new velocities.
    pub fn step(
        &self,
        ws: &mut Workspace<S>,
        state: &mut TreeState<S>,
        root_wrench: Option<&Force<S>>,
        loads: &[PointLoad<S>],
        contacts: &[ContactSite<S>],
        contact: &ContactParams<S>,
        dt: S,
    ) -> bool {
        let n = self.dofs();
        let nr = self.root_dofs();
        self.kinematics(ws, &state.root_pose, &state.q);
        self.velocities(ws, &state.root_velocity, &state.qd);
        self.clear_loads(ws);
        if let Some(w) = root_wrench {
            ws.root_ext = ws.root_ext.add(w);
        }
        for l in loads {
            let wp = self.world_transform(ws, l.body).apply_point(&l.point);
            self.add_point_load(ws, l.body, &wp, &l.force);
        }

        // Contacts: explicit force now, linearization folded into the system matrix.
        ws.contact_forces.clear();
        ws.active.clear();
        for (ci, c) in contacts.iter().enumerate() {
            let x = self.world_transform(ws, c.body);
            let wp = x.apply_point(&c.point);
            if wp.z > S::zero() {
                ws.contact_forces.push(Vec3::zeros());
                continue;
            }
            let vel = self.point_velocity(ws, &state.root_velocity, c.body, &c.point);
            let lin = linearize_contact(&PointState { position: wp, velocity: vel }, c.mu, contact);
            ws.contact_forces.push(lin.force);
            if lin.force.z > S::zero() {
                self.add_point_load(ws, c.body, &wp, &lin.force);
                ws.active.push(ActiveContact { site: ci, point: wp, damping: lin.damping, stiffness: lin.normal_stiffness, vz: vel.z });
            }
        }

        self.bias(ws, &state.root_velocity, &state.qd);
        self.mass_matrix(ws);

        // rhs = dt * (tau - bias) - dt^2 K v
        let dt2 = dt * dt;
        ws.v.clear();
        if self.floating {
            ws.v.extend_from_slice(&state.root_velocity.ang.to_array());
            ws.v.extend_from_slice(&state.root_velocity.lin.to_array());
        }
        ws.v.extend_from_slice(&state.qd);

        for i in 0..n {
            ws.rhs[i] = -ws.rhs[i] * dt;
        }
        for (j, b) in self.bodies.iter().enumerate() {
            let d = nr + j;
            let tau = -b.stiffness * state.q[j] - b.damping * state.qd[j];
            ws.rhs[d] = ws.rhs[d] + dt * tau - dt2 * b.stiffness * state.qd[j];
            ws.mass[d * n + d] = ws.mass[d * n + d] + dt * b.damping + dt2 * b.stiffness;
        }
        for k in 0..ws.active.len() {
            let ac = ws.active[k];
            self.point_jacobian(ws, contacts[ac.site].body, &ac.point);
            // A += J^T (dt D + dt^2 K) J ; rhs -= dt^2 J^T K (J v)
            let mut g = ac.damping.scale(dt);
            g.m[2][2] = g.m[2][2] + dt2 * ac.stiffness;
            for &c in &ws.chain {
                ws.gj[c] = g.mul_vec(&ws.jac[c]);
            }
            for &r in &ws.chain {
                let jr = ws.jac[r];
                for &c in &ws.chain {
                    ws.mass[r * n + c] = ws.mass[r * n + c] + jr.dot(&ws.gj[c]);
                }
                ws.rhs[r] = ws.rhs[r] - dt2 * ac.stiffness * jr.z * ac.vz;
            }
        }

        if !tree_cholesky_solve(&mut ws.mass, n, &ws.lambda, &mut ws.rhs) {
            return false;
        }

        for i in 0..n {
            ws.v[i] = ws.v[i] + ws.rhs[i];
        }
        let v = &ws.v;
        if self.floating {
            let ang = Vec3::new(v[0], v[1], v[2]);
            let lin = Vec3::new(v[3], v[4], v[5]);
            state.root_velocity = Motion::new(ang, lin);
            let world_lin = ws.root_world.rot.mul_vec(&lin);
            state.root_pose.position += world_lin * dt;
            state.root_pose.orientation = state.root_pose.orientation.integrate_body_rate(&ang, dt);
        }
        for j in 0..self.bodies.len() {
            state.qd[j] = v[nr + j];
            state.q[j] = state.q[j] + dt * state.qd[j];
        }
        true
    }
}

impl<S: Real> TreeState<S> {
    pub fn at_rest(root_pose: Pose<S>, joints: usize) -> Self {
        Self { root_pose, root_velocity: Motion::zero(), q: vec![S::zero(); joints], qd: vec![S::zero(); joints] }
    }

    pub fn fixed(root_pose: Pose<S>, joints: usize) -> Self {
        Self::at_rest(root_pose, joints)
    }
}

/// In-place Cholesky solve of the SPD system `a x = b`; `b` receives `x`.
pub fn cholesky_solve<S: Real>(a: &mut [S], n: usize, b: &mut [S]) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d = d - a[j * n + k] * a[j * n + k];
        }
        if !(d > S::zero()) {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        let inv = S::one() / d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s * inv;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s = s - a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    true
}

/// Solves `a x = b` for an SPD matrix whose nonzeros follow the dof tree
/// (`a[i][j] != 0` only if one of i, j is an ancestor of the other), using
/// the branch-induced sparse `L^T L` factorization. `b` receives `x`.
pub fn tree_cholesky_solve<S: Real>(a: &mut [S], n: usize, lambda: &[usize], b: &mut [S]) -> bool {
    for k in (0..n).rev() {
        let d = a[k * n + k];
        if !(d > S::zero()) {
            return false;
        }
        let d = d.sqrt();
        a[k * n + k] = d;
        let inv = S::one() / d;
        let mut i = lambda[k];
        while i != NO_PARENT {
            a[k * n + i] = a[k * n + i] * inv;
            i = lambda[i];
        }
        let mut i = lambda[k];
        while i != NO_PARENT {
            let lki = a[k * n + i];
            let mut j = i;
            while j != NO_PARENT {
                a[i * n + j] = a[i * n + j] - lki * a[k * n + j];
                j = lambda[j];
            }
            i = lambda[i];
        }
    }
    // L^T y = b
    for i in (0..n).rev() {
        b[i] = b[i] / a[i * n + i];
        let yi = b[i];
        let mut j = lambda[i];
        while j != NO_PARENT {
            b[j] = b[j] - a[i * n + j] * yi;
            j = lambda[j];
        }
    }
    // L x = y
    for i in 0..n {
        let mut s = b[i];
        let mut j = lambda[i];
        while j != NO_PARENT {
            s = s - a[i * n + j] * b[j];
            j = lambda[j];
        }
        b[i] = s / a[i * n + i];
    }
    true
}

/// Quaternion helper kept here so callers do not need the math module.
pub fn pose_from_transform<S: Real>(rot: &Mat3<S>, pos: Vec3<S>) -> Pose<S> {
    // Shepperd's method
    let m = &rot.m;
    let tr = m[0][0] + m[1][1] + m[2][2];
    let one = S::one();
    let q = if tr > S::zero() {
        let s = (tr + one).sqrt() * S::two();
        Quat { w: S::lit(0.25) * s, x: (m[2][1] - m[1][2]) / s, y: (m[0][2] - m[2][0]) / s, z: (m[1][0] - m[0][1]) / s }
    } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
        let s = (one + m[0][0] - m[1][1] - m[2][2]).sqrt() * S::two();
        Quat { w: (m[2][1] - m[1][2]) / s, x: S::lit(0.25) * s, y: (m[0][1] + m[1][0]) / s, z: (m[0][2] + m[2][0]) / s }
    } else if m[1][1] > m[2][2] {
        let s = (one + m[1][1] - m[0][0] - m[2][2]).sqrt() * S::two();
        Quat { w: (m[0][2] - m[2][0]) / s, x: (m[0][1] + m[1][0]) / s, y: S::lit(0.25) * s, z: (m[1][2] + m[2][1]) / s }
    } else {
        let s = (one + m[2][2] - m[0][0] - m[1][1]).sqrt() * S::two();
        Quat { w: (m[1][0] - m[0][1]) / s, x: (m[0][2] + m[2][0]) / s, y: (m[1][2] + m[2][1]) / s, z: S::lit(0.25) * s }
    };
    Pose { position: pos, orientation: q.normalize() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Double pendulum with a fixed root, used to check the mass matrix
    /// against kinetic energy and the bias against finite differences.
    fn pendulum() -> Multibody<f64> {
        let link = |parent: Option<usize>, offset: f64| Body {
            parent,
            tree: Transform::new(Mat3::identity(), Vec3::new(0.0, offset, 0.0)),
            axis: Vec3::new(1.0, 0.0, 0.0),
            inertia: RigidInertia::solid_box(0.1, Vec3::new(0.0, 0.05, 0.0), Vec3::new(0.01, 0.1, 0.01)),
            stiffness: 0.0,
            damping: 0.0,
        };
        Multibody {
            floating: false,
            root_inertia: RigidInertia::zero(),
            bodies: vec![link(None, 0.0), link(Some(0), 0.1)],
            gravity: Vec3::new(0.0, 0.0, -9.81),
        }
    }

    fn floating_box() -> Multibody<f64> {
        let mut mb = pendulum();
        mb.floating = true;
        mb.root_inertia = RigidInertia::solid_box(0.5, Vec3::new(0.01, 0.0, 0.0), Vec3::new(0.2, 0.1, 0.02));
        mb
    }

    #[test]
    fn mass_matrix_reproduces_kinetic_energy() {
        let mb = floating_box();
        let mut ws = mb.workspace();
        let state = TreeState {
            root_pose: Pose { position: Vec3::new(0.0, 0.0, 0.3), orientation: Quat::from_axis_angle(Vec3::new(0.0, 0.6, 0.8), 0.4) },
            root_velocity: Motion::new(Vec3::new(0.1, -0.3, 0.7), Vec3::new(0.2, 0.05, -0.1)),
            q: vec![0.3, -0.8],
            qd: vec![1.2, -0.4],
        };
        let ke = mb.kinetic_energy(&mut ws, &state);
        mb.kinematics(&mut ws, &state.root_pose, &state.q);
        mb.mass_matrix(&mut ws);
        let v = [0.1, -0.3, 0.7, 0.2, 0.05, -0.1, 1.2, -0.4];
        let n = mb.dofs();
        let mut e = 0.0;
        for r in 0..n {
            for c in 0..n {
                e += 0.5 * v[r] * ws.mass[r * n + c] * v[c];
            }
        }
        assert_relative_eq!(e, ke, max_relative = 1e-12);
    }

    #[test]
    fn free_fall_accelerates_at_g() {
        let mut mb = floating_box();
        mb.bodies.clear();
        let mut ws = mb.workspace();
        let mut st = TreeState::at_rest(Pose::identity(), 0);
        let dt = 1e-3;
        for _ in 0..100 {
            assert!(mb.step(&mut ws, &mut st, None, &[], &[], &ContactParams::default(), dt));
        }
        let vz = st.root_pose.orientation.rotate(&st.root_velocity.lin).z;
        assert_relative_eq!(vz, -9.81 * 0.1, max_relative = 1e-9);
    }

    fn energy_drift(dt: f64) -> f64 {
        let mb = pendulum();
        let mut ws = mb.workspace();
        let mut st = TreeState::fixed(Pose::identity(), 2);
        st.q = vec![0.5, 0.2];
        let e0 = mb.kinetic_energy(&mut ws, &st) + mb.potential_energy(&mut ws, &st);
        let steps = (0.2 / dt).round() as usize;
        let mut worst: f64 = 0.0;
        for _ in 0..steps {
            mb.step(&mut ws, &mut st, None, &[], &[], &ContactParams::default(), dt);
            let e = mb.kinetic_energy(&mut ws, &st) + mb.potential_energy(&mut ws, &st);
            worst = worst.max((e - e0).abs());
        }
        worst
    }

    #[test]
    fn undamped_pendulum_energy_error_shrinks_with_step() {
        let coarse = energy_drift(1e-4);
        let fine = energy_drift(1e-5);
        assert!(coarse < 1e-2 * 0.1, "{coarse}");
        assert!(fine < 0.2 * coarse, "{fine} vs {coarse}");
    }

    #[test]
    fn tree_factorization_matches_dense_solve() {
        let mut mb = floating_box();
        // second branch off the root
        let extra = mb.bodies[0].clone();
        mb.bodies.push(Body { tree: Transform::new(Mat3::rotation(Vec3::new(0.0, 0.0, 1.0), 0.7), Vec3::new(-0.1, 0.02, 0.0)), ..extra });
        let mut ws = mb.workspace();
        mb.kinematics(&mut ws, &Pose::identity(), &[0.4, -0.3, 1.1]);
        mb.mass_matrix(&mut ws);
        let n = mb.dofs();
        let mut dense = ws.mass.clone();
        let mut sparse = ws.mass.clone();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let (mut x1, mut x2) = (b.clone(), b.clone());
        assert!(cholesky_solve(&mut dense, n, &mut x1));
        assert!(tree_cholesky_solve(&mut sparse, n, &mb.dof_parents(), &mut x2));
        for i in 0..n {
            assert_relative_eq!(x1[i], x2[i], max_relative = 1e-9, epsilon = 1e-12);
        }
    }

    #[test]
    fn cholesky_solves_small_system() {
        let mut a = vec![4.0, 2.0, 2.0, 3.0];
        let mut b = vec![2.0, 1.0];
        assert!(cholesky_solve(&mut a, 2, &mut b));
        assert_relative_eq!(b[0], 0.5, max_relative = 1e-14);
        assert_relative_eq!(b[1], 0.0, epsilon = 1e-14);
        let mut a = vec![-1.0];
        assert!(!cholesky_solve(&mut a, 1, &mut [1.0]));
    }

    #[test]
    fn quaternion_from_matrix_roundtrip() {
        for (axis, ang) in [(Vec3::<f64>::new(1.0, 0.0, 0.0), 2.9f64), (Vec3::new(0.0, 1.0, 1.0).normalize(), -1.3), (Vec3::new(0.2, 0.3, -0.9).normalize(), 3.1)] {
            let r = Mat3::rotation(axis, ang);
            let p = pose_from_transform(&r, Vec3::zeros());
            let back = p.orientation.to_matrix();
            for i in 0..3 {
                for j in 0..3 {
                    assert!((back.m[i][j] - r.m[i][j]).abs() < 1e-12);
                }
            }
        }
    }
}
