//! Single-leg bench rig: one beam clamped horizontally, loaded at the tip,
//! then released.
//!
//! Clamp frame: the beam runs along +x, its width along z and its thickness
//! along y. The load pulls along `(0, sin a, -cos a)` for a load angle `a`, so
//! `a = 0` is straight down.

use serde::{Deserialize, Serialize};

use crate::math::{Mat3, Vec3};
use crate::model::{DesignParams, LegStiffness, Pose};
use crate::scalar::Real;
use crate::{Error, Result};

use super::contact::ContactParams;
use super::leg::{build_leg, PrbmLeg, JOINTS_PER_LEG};
use super::multibody::{cholesky_solve, Multibody, PointLoad, TreeState, Workspace};
use super::spatial::Transform;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegExperimentConfig {
    /// Tip load mass (kg). Not reported for the prototype; 50 g by default.
    pub load_mass: f64,
    /// Extra bend angle (rad) added to every bend joint before release.
    pub deflection: f64,
    pub dt: f64,
    pub sample_interval: f64,
    /// Recording horizon after release (s).
    pub duration: f64,
    /// Stop early once the tip speed stays below this (m/s); 0 disables.
    pub settle_speed: f64,
}

impl Default for LegExperimentConfig {
    fn default() -> Self {
        Self { load_mass: 0.05, deflection: 0.0, dt: 2e-4, sample_interval: 0.01, duration: 3.0, settle_speed: 0.0 }
    }
}

/// Tip trajectory for one load angle. Rotations are intrinsic XYZ angles of
/// the tip frame relative to its straight-beam orientation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegSeries {
    pub angle_deg: f64,
    pub t: Vec<f64>,
    pub position: Vec<[f64; 3]>,
    pub rotation: Vec<[f64; 3]>,
}

impl LegSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

pub struct LegRig<S: Real = f64> {
    pub leg: PrbmLeg<S>,
    pub tree: Multibody<S>,
    pub clamp: Pose<S>,
    pub tip_body: usize,
    pub tip_point: Vec3<S>,
    rest_rotation: Mat3<S>,
}

impl<S: Real> LegRig<S> {
    /// Bare beam (no foot bar) clamped at the origin under gravity.
    pub fn new(stiffness: &LegStiffness<S>, design: &DesignParams<S>) -> Result<Self> {
        let mut leg = build_leg(stiffness, design)?;
        leg.foot_mass = S::zero();
        let mut tree = Multibody {
            floating: false,
            root_inertia: super::spatial::RigidInertia::zero(),
            bodies: Vec::with_capacity(JOINTS_PER_LEG),
            gravity: Vec3::new(S::zero(), S::zero(), -design.gravity),
        };
        let tip_body = leg.attach(&mut tree, None, Transform::identity(), false);
        let rot = Mat3::from_columns(Vec3::z_axis(), Vec3::x_axis(), Vec3::y_axis());
        let clamp = super::multibody::pose_from_transform(&rot, Vec3::zeros());
        let tip_point = Vec3::new(S::zero(), leg.segment_length, S::zero());
        let mut rig = Self { leg, tree, clamp, tip_body, tip_point, rest_rotation: Mat3::identity() };
        let mut ws = rig.tree.workspace();
        let st = TreeState::fixed(rig.clamp, JOINTS_PER_LEG);
        rig.tree.kinematics(&mut ws, &st.root_pose, &st.q);
        rig.rest_rotation = rig.tree.world_transform(&ws, Some(tip_body)).rot;
        Ok(rig)
    }

    pub fn workspace(&self) -> Workspace<S> {
        self.tree.workspace()
    }

    pub fn state(&self, q: Vec<S>) -> TreeState<S> {
        let mut st = TreeState::fixed(self.clamp, JOINTS_PER_LEG);
        st.q = q;
        st
    }

    pub fn load(&self, angle_deg: S, mass: S, gravity: S) -> PointLoad<S> {
        let a = angle_deg.deg_to_rad();
        let f = Vec3::new(S::zero(), a.sin(), -a.cos()) * (mass * gravity);
        PointLoad { body: Some(self.tip_body), point: self.tip_point, force: f }
    }

    /// Tip position and relative rotation angles for joint angles `q`.
    pub fn tip_pose(&self, ws: &mut Workspace<S>, q: &[S]) -> (Vec3<S>, Vec3<S>) {
        self.tree.kinematics(ws, &self.clamp, q);
        let x = self.tree.world_transform(ws, Some(self.tip_body));
        let rel = self.rest_rotation.transpose().mul_mat(&x.rot);
        (x.apply_point(&self.tip_point), rel.intrinsic_xyz())
    }

    pub fn energy(&self, ws: &mut Workspace<S>, st: &TreeState<S>) -> S {
        self.tree.kinetic_energy(ws, st) + self.tree.potential_energy(ws, st)
    }

    /// Static equilibrium joint angles under `loads` (Newton on the force
    /// balance with a finite-difference stiffness matrix).
    pub fn static_equilibrium(&self, loads: &[PointLoad<S>]) -> Result<Vec<S>> {
        let n = JOINTS_PER_LEG;
        let mut ws = self.workspace();
        let mut st = self.state(vec![S::zero(); n]);
        let mut r = vec![S::zero(); n];
        let mut rp = vec![S::zero(); n];
        let mut rm = vec![S::zero(); n];
        let h = S::lit(1e-6);
        let tol = S::lit(1e-13);
        for _ in 0..60 {
            self.tree.static_residual(&mut ws, &st, loads, &mut r);
            let norm = r.iter().fold(S::zero(), |a, v| a + *v * *v).sqrt();
            if norm < tol {
                return Ok(st.q);
            }
            // -dr/dq is the (symmetric) tangent stiffness
            let mut kt = vec![S::zero(); n * n];
            for j in 0..n {
                let q0 = st.q[j];
                st.q[j] = q0 + h;
                self.tree.static_residual(&mut ws, &st, loads, &mut rp);
                st.q[j] = q0 - h;
                self.tree.static_residual(&mut ws, &st, loads, &mut rm);
                st.q[j] = q0;
                for i in 0..n {
                    kt[i * n + j] = -(rp[i] - rm[i]) / (S::two() * h);
                }
            }
            for i in 0..n {
                for j in 0..i {
                    let s = (kt[i * n + j] + kt[j * n + i]) * S::half();
                    kt[i * n + j] = s;
                    kt[j * n + i] = s;
                }
            }
            let mut dq = r.clone();
            if !cholesky_solve(&mut kt, n, &mut dq) {
                return Err(Error::invalid("leg has no stable static equilibrium under this load"));
            }
            for i in 0..n {
                st.q[i] = st.q[i] + dq[i];
            }
        }
        Err(Error::invalid("static equilibrium did not converge"))
    }

    /// Load, settle, release and record the tip recovery.
    pub fn release_experiment(&self, angle_deg: f64, cfg: &LegExperimentConfig, gravity: S) -> Result<LegSeries> {
        if !(cfg.dt > 0.0 && cfg.dt <= 1e-3) || !(cfg.sample_interval >= cfg.dt) || !(cfg.duration > 0.0) {
            return Err(Error::invalid("leg experiment needs 0 < dt <= 1e-3, sample interval >= dt and positive duration"));
        }
        if !(cfg.load_mass >= 0.0) || !cfg.deflection.is_finite() {
            return Err(Error::invalid("load mass must be >= 0 and deflection finite"));
        }
        let load = self.load(S::lit(angle_deg), S::lit(cfg.load_mass), gravity);
        let mut q = self.static_equilibrium(&[load])?;
        for (i, v) in q.iter_mut().enumerate() {
            if i % 2 == 0 {
                *v = *v + S::lit(cfg.deflection);
            }
        }
        let mut st = self.state(q);
        let mut ws = self.workspace();
        let dt = S::lit(cfg.dt);
        let per = ((cfg.sample_interval / cfg.dt).round() as usize).max(1);
        let steps = (cfg.duration / cfg.dt).round() as usize;
        let contact = ContactParams::default();
        let mut out = LegSeries { angle_deg, t: Vec::new(), position: Vec::new(), rotation: Vec::new() };
        let mut push = |k: usize, st: &TreeState<S>, ws: &mut Workspace<S>| {
            let (p, r) = self.tip_pose(ws, &st.q);
            out.t.push(k as f64 * cfg.dt);
            out.position.push(p.to_array().map(|v| v.to_f64_lossy()));
            out.rotation.push(r.to_array().map(|v| v.to_f64_lossy()));
            p
        };
        let mut prev = push(0, &st, &mut ws);
        for k in 1..=steps {
            if !self.tree.step(&mut ws, &mut st, None, &[], &[], &contact, dt) {
                return Err(Error::Divergence { time: k as f64 * cfg.dt, reason: "system matrix lost positive definiteness".into() });
            }
            if st.qd.iter().any(|v| !v.is_finite() || v.abs() > S::lit(1e4)) {
                return Err(Error::Divergence { time: k as f64 * cfg.dt, reason: "joint speed out of range".into() });
            }
            if k % per == 0 {
                let p = push(k, &st, &mut ws);
                let speed = (p - prev).norm().to_f64_lossy() / cfg.sample_interval;
                prev = p;
                if cfg.settle_speed > 0.0 && speed < cfg.settle_speed {
                    break;
                }
            }
        }
        Ok(out)
    }
}
