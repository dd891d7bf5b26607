//! Helpers shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use vibrowalk::dynamics::multibody::Workspace;
use vibrowalk::dynamics::{simulate, ContactParams, LegRig, RobotModel, RobotSpec, SimConfig};
use vibrowalk::math::Vec3;
use vibrowalk::model::{DesignParams, LegStiffness};
use vibrowalk::model::{mirror_command, ActuationCommand, ErrorParams, Trajectory};

/// Left/right symmetric robot: default geometry, equal friction on all feet.
pub fn symmetric_model() -> RobotModel<f64> {
    let spec = RobotSpec { errors: ErrorParams::uniform_friction(0.55), ..RobotSpec::default() };
    RobotModel::build(spec).unwrap()
}

/// Six (f, theta) pairs: the four grid corners, a mid-grid point and the center.
pub const MIRROR_PAIRS: [(f64, f64); 6] = [(35.0, 90.0), (35.0, -90.0), (-35.0, 90.0), (-35.0, -90.0), (20.0, 45.0), (0.0, 0.0)];

fn rms(v: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for x in v {
        s += x * x;
        n += 1;
    }
    (s / n.max(1) as f64).sqrt()
}

/// Per-channel (x, y, yaw) RMS mismatch between `a` and the reflection of `b`,
/// relative to the larger RMS magnitude of the two channels. Channels whose
/// magnitude stays below `floor` are compared against `floor` instead.
pub fn mirror_mismatch(a: &Trajectory<f64>, b: &Trajectory<f64>, floor: [f64; 3]) -> [f64; 3] {
    let n = a.samples.len().min(b.samples.len());
    let ch = |t: &Trajectory<f64>, c: usize, sign: f64| -> Vec<f64> {
        t.samples[..n]
            .iter()
            .map(|s| sign * [s.planar.x, s.planar.y, s.planar.yaw][c])
            .collect()
    };
    let mut out = [0.0; 3];
    for c in 0..3 {
        let sign = if c == 0 { 1.0 } else { -1.0 };
        let (u, v) = (ch(a, c, 1.0), ch(b, c, sign));
        let diff = rms(u.iter().zip(&v).map(|(p, q)| p - q));
        let mag = rms(u.iter().copied()).max(rms(v.iter().copied())).max(floor[c]);
        out[c] = diff / mag;
    }
    out
}

/// Simulates a command and its mirror image for `duration` seconds.
pub fn mirror_runs(model: &RobotModel<f64>, f: f64, theta_deg: f64, duration: f64) -> (Trajectory<f64>, Trajectory<f64>) {
    let cfg = SimConfig::default();
    let cmd = ActuationCommand::from_degrees(f, theta_deg);
    let a = simulate(model, &cmd, duration, &cfg).unwrap();
    let b = simulate(model, &mirror_command(cmd), duration, &cfg).unwrap();
    (a, b)
}

/// Total mechanical energy of a single leg after every step of a free
/// release from a deflected, loaded equilibrium (dt = 2e-4, no contact).
pub fn released_energy(stiffness: LegStiffness<f64>, deflection: f64, steps: usize) -> Vec<f64> {
    let rig = LegRig::new(&stiffness, &DesignParams::default()).unwrap();
    let q: Vec<f64> = rig
        .static_equilibrium(&[rig.load(30.0, 0.05, 9.81)])
        .unwrap()
        .iter()
        .enumerate()
        .map(|(i, v)| if i % 2 == 0 { v + deflection } else { *v })
        .collect();
    let mut st = rig.state(q);
    let mut ws = rig.workspace();
    let contact = ContactParams::default();
    let mut e = vec![rig.energy(&mut ws, &st)];
    for _ in 0..steps {
        assert!(rig.tree.step(&mut ws, &mut st, None, &[], &[], &contact, 2e-4));
        e.push(rig.energy(&mut ws, &st));
    }
    e
}

/// Total potential of the loaded beam: springs and gravity from the rig,
/// minus the work of the constant tip force.
fn loaded_potential(rig: &LegRig<f64>, ws: &mut Workspace<f64>, q: &[f64], force: Vec3<f64>) -> f64 {
    let st = rig.state(q.to_vec());
    let pe = rig.tree.potential_energy(ws, &st);
    let tip = rig.tip_pose(ws, q).0;
    pe - force.dot(&tip)
}

/// Damped Newton on the potential with finite-difference derivatives taken
/// from energy values only.
pub fn minimize_potential(rig: &LegRig<f64>, force: Vec3<f64>) -> Vec<f64> {
    let n = vibrowalk::dynamics::leg::JOINTS_PER_LEG;
    let mut ws = rig.workspace();
    let mut q = vec![0.0; n];
    let h = 1e-4;
    let mut e = |q: &[f64]| loaded_potential(rig, &mut ws, q, force);
    for _ in 0..50 {
        let e0 = e(&q);
        let mut g = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut p = q.clone();
            p[i] += h;
            let ep = e(&p);
            p[i] -= 2.0 * h;
            let em = e(&p);
            g[i] = (ep - em) / (2.0 * h);
            hess[(i, i)] = (ep - 2.0 * e0 + em) / (h * h);
            for j in 0..i {
                let mut p = q.clone();
                let mut v = [0.0; 4];
                for (k, (si, sj)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)].iter().enumerate() {
                    p[i] = q[i] + si * h;
                    p[j] = q[j] + sj * h;
                    v[k] = e(&p);
                }
                let x = (v[0] - v[1] - v[2] + v[3]) / (4.0 * h * h);
                hess[(i, j)] = x;
                hess[(j, i)] = x;
            }
        }
        let step = hess.cholesky().expect("potential is not convex here").solve(&(-&g));
        let mut a = 1.0;
        loop {
            let trial: Vec<f64> = q.iter().zip(step.iter()).map(|(x, d)| x + a * d).collect();
            if e(&trial) <= e0 || a < 1e-6 {
                q = trial;
                break;
            }
            a *= 0.5;
        }
        if step.norm() < 1e-12 {
            break;
        }
    }
    q
}

