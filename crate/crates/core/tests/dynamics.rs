mod common;

use proptest::prelude::*;
use vibrowalk::dynamics::*;
use vibrowalk::math::Vec3;
use vibrowalk::model::*;

fn default_model() -> RobotModel<f64> {
    RobotModel::build(RobotSpec::default()).unwrap()
}

#[test]
fn identical_inputs_give_bit_identical_trajectories() {
    let m = default_model();
    let cmd = ActuationCommand::from_degrees(25.0, 30.0);
    let cfg = SimConfig::default();
    let a = simulate(&m, &cmd, 1.0, &cfg).unwrap();
    let b = simulate(&m, &cmd, 1.0, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn eight_second_run_spans_the_horizon() {
    let m = default_model();
    let cfg = SimConfig::default();
    let tr = simulate(&m, &ActuationCommand::from_degrees(30.0, 0.0), 8.0, &cfg).unwrap();
    tr.validate().unwrap();
    assert!(tr.start_time().unwrap().abs() < 1e-12);
    assert!((tr.end_time().unwrap() - 8.0).abs() < 1e-9);
    assert_eq!(tr.len(), 801);
}

#[test]
fn unexcited_robot_does_not_wander() {
    let m = default_model();
    let tr = simulate(&m, &ActuationCommand::idle(), 8.0, &SimConfig::default()).unwrap();
    let (a, b) = (&tr.samples[0].planar, &tr.samples.last().unwrap().planar);
    assert!((b.x - a.x).hypot(b.y - a.y) < 1e-3);
}

#[test]
fn resting_robot_settles_without_deep_penetration() {
    let m = default_model();
    let mut sim = Simulator::new(&m, SimConfig::default()).unwrap();
    let mut tr = Trajectory::new(0.01);
    sim.run(&ActuationCommand::idle(), 5000, Some(&mut tr)).unwrap();
    let n = tr.len();
    let dz = tr.samples[n - 1].pose.position.z - tr.samples[n - 2].pose.position.z;
    assert!(dz.abs() < 1e-7, "dz = {dz}");

    let k_n = m.spec.contact.stiffness;
    let mut ws = m.tree.workspace();
    let forces = sim.contact_forces().to_vec();
    for (site, f) in m.contacts.iter().zip(&forces) {
        let p = m.tree.point_position(&mut ws, sim.tree_state(), site.body, &site.point);
        let depth = (-p.z).max(0.0);
        assert!(depth < f.z / k_n + 1e-6, "depth {depth} vs N/k {}", f.z / k_n);
        assert!(f.z > 0.0);
    }
    let weight = m.total_mass() * m.spec.design.gravity;
    let total: f64 = forces.iter().map(|f| f.z).sum();
    assert!((total - weight).abs() < 1e-3 * weight, "{total} vs {weight}");
}

#[test]
fn weightless_robot_at_rest_stays_put() {
    let mut spec = RobotSpec::<f64>::default();
    spec.design.gravity = 0.0;
    let m = RobotModel::build(spec).unwrap();
    let mut st = m.rest_state();
    st.root_pose.position.z = 0.5;
    let mut sim = Simulator::from_state(&m, SimConfig::default(), st.clone()).unwrap();
    sim.run(&ActuationCommand::idle(), 2000, None).unwrap();
    assert_eq!(sim.tree_state().root_pose, st.root_pose);
    assert_eq!(sim.tree_state().q, st.q);
    assert!(sim.tree_state().qd.iter().all(|v| *v == 0.0));
}

#[test]
fn contact_cone_holds_during_a_run() {
    let m = default_model();
    let mut sim = Simulator::new(&m, SimConfig::default()).unwrap();
    let cmd = ActuationCommand::from_degrees(35.0, 60.0);
    for _ in 0..5000 {
        sim.step(&cmd).unwrap();
        for (site, f) in m.contacts.iter().zip(sim.contact_forces()) {
            assert!(f.z >= 0.0);
            assert!(f.x.hypot(f.y) <= site.mu * f.z * (1.0 + 1e-12) + 1e-15);
        }
    }
}

#[test]
fn mirrored_commands_stay_mirrored_before_chaos_sets_in() {
    let m = common::symmetric_model();
    for (f, th) in common::MIRROR_PAIRS {
        let (a, b) = common::mirror_runs(&m, f, th, 0.2);
        for (s, r) in a.samples.iter().zip(&b.samples) {
            assert!((s.planar.x - r.planar.x).abs() < 1e-12);
            assert!((s.planar.y + r.planar.y).abs() < 1e-12);
            assert!((s.planar.yaw + r.planar.yaw).abs() < 1e-12);
        }
    }
}

#[test]
fn moderate_command_mirrors_over_two_seconds() {
    let m = common::symmetric_model();
    for (f, th) in [(20.0, 45.0), (0.0, 0.0)] {
        let (a, b) = common::mirror_runs(&m, f, th, 2.0);
        let e = common::mirror_mismatch(&a, &b, [1e-6; 3]);
        assert!(e.iter().all(|v| *v < 0.05), "({f}, {th}): {e:?}");
    }
}

#[test]
fn single_precision_model_runs() {
    let m = RobotModel::<f32>::build(RobotSpec::<f32>::default()).unwrap();
    let tr = simulate(&m, &ActuationCommand::<f32>::from_degrees(25.0, 30.0), 0.5, &SimConfig::<f32>::default()).unwrap();
    assert_eq!(tr.len(), 51);
    assert!(tr.samples.iter().all(|s| s.pose.position.is_finite()));
    let d = m.total_mass() - default_model().total_mass() as f32;
    assert!(d.abs() < 1e-5);
}

#[test]
fn averaged_velocity_of_a_forward_drift() {
    let mut tr = Trajectory::new(0.01);
    for k in 0..=300 {
        let t = k as f64 * 0.01;
        tr.push(t, Pose::planar(0.1 * t, 0.0, 0.0), 0.1, 0.0, 0.0);
    }
    let v = average_velocities(&tr, 1.0).unwrap();
    assert!((v.vx - 0.1).abs() < 1e-12 && v.vy.abs() < 1e-12 && v.w.abs() < 1e-12);
}

#[test]
fn circling_gives_forward_body_velocity() {
    // constant-speed circle of radius R: body-frame velocity is (wR, 0)
    let (r, w) = (0.3, 0.8);
    let mut tr = Trajectory::new(0.01);
    for k in 0..=500 {
        let t = k as f64 * 0.01;
        let a = w * t;
        tr.push(t, Pose::planar(r * a.sin(), r * (1.0 - a.cos()), a), w * r, 0.0, w);
    }
    let v = average_velocities(&tr, 1.0).unwrap();
    assert!((v.vx - w * r).abs() < 1e-3 * w * r, "{v:?}");
    assert!(v.vy.abs() < 1e-3 * w * r);
    assert!((v.w - w).abs() < 1e-9);
}

proptest! {
    #[test]
    fn friction_never_leaves_the_cone(
        z in -2e-3f64..1e-3, vz in -0.5f64..0.5, vx in -1.0f64..1.0, vy in -1.0f64..1.0, mu in 0.0f64..1.5,
    ) {
        let p = PointState { position: Vec3::new(0.0, 0.0, z), velocity: Vec3::new(vx, vy, vz) };
        let f = contact_force(&p, mu, &ContactParams::default());
        prop_assert!(f.z >= 0.0);
        prop_assert!(f.x.hypot(f.y) <= mu * f.z * (1.0 + 1e-12));
        if z > 0.0 {
            prop_assert_eq!(f, Vec3::zeros());
        }
    }
}
