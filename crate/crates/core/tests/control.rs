use vibrowalk::control::*;
use vibrowalk::dynamics::{RobotModel, RobotSpec, SimConfig};

/// Every Left <-> Right switch happens on a sample whose error lies beyond
/// the far edge of the deadband.
fn no_flip_without_crossing(log: &TaskLog, deadband: f64) -> bool {
    log.samples.windows(2).all(|w| match (w[0].state, w[1].state, w[1].error) {
        (ControlState::Left, ControlState::Right, e) => e.map_or(false, |e| e < -deadband),
        (ControlState::Right, ControlState::Left, e) => e.map_or(false, |e| e > deadband),
        _ => true,
    })
}

#[test]
fn surrogate_flies_the_figure_eight() {
    let cfg = ControllerConfig::default();
    let wps = figure_eight_waypoints([0.0, 0.0], 0.5, 8).unwrap();
    let mut plant = Unicycle::default();
    let log = run_tracking(&mut plant, &wps, &cfg, &ActuationTable::default(), 600.0).unwrap();
    assert!(log.completed);
    assert_eq!(log.captured, 8);
    assert!(no_flip_without_crossing(&log, cfg.deadband));
}

#[test]
fn surrogate_comes_home_after_three_pushes() {
    let cfg = ControllerConfig::default();
    let pushes = [
        Disturbance { t: 5.0, dx: 0.5, dy: 0.0, dyaw: 0.0 },
        Disturbance { t: 30.0, dx: 0.0, dy: -0.5, dyaw: 1.0 },
        Disturbance { t: 60.0, dx: -0.3, dy: 0.4, dyaw: 0.0 },
    ];
    let mut plant = Unicycle::default();
    let log = return_to_origin(&mut plant, [0.0, 0.0], &cfg, &ActuationTable::default(), &pushes, 120.0).unwrap();
    assert!(log.completed, "final distance {}", log.final_distance);
    let hits: Vec<f64> = log.events.iter().filter_map(|e| matches!(e.kind, EventKind::Disturbance { .. }).then_some(e.t)).collect();
    assert_eq!(hits, vec![5.0, 30.0, 60.0]);
    assert!(log.events.iter().filter(|e| matches!(e.kind, EventKind::Arrived { .. })).count() >= 3);
    assert!(no_flip_without_crossing(&log, cfg.deadband));
}

#[test]
fn full_model_runs_in_the_loop() {
    let m = RobotModel::build(RobotSpec::default()).unwrap();
    let mut plant = SimulatedRobot::new(&m, SimConfig::with_dt(5e-4)).unwrap();
    let cfg = ControllerConfig::default();
    let log = run_tracking(&mut plant, &[[0.0, 1.0]], &cfg, &ActuationTable::default(), 1.0).unwrap();
    assert!((plant.time() - 1.0).abs() < 1e-6);
    assert!(log.samples.len() >= 10);
    assert!(log.samples.iter().all(|s| s.pose.x.is_finite() && s.pose.yaw.is_finite()));
    // the target lies to the left, so the first decision is a left turn
    assert_eq!(log.samples[0].state, ControlState::Left);
    plant.displace(0.2, 0.0, 0.0);
    assert!((plant.pose().x - log.samples.last().unwrap().pose.x - 0.2).abs() < 1e-9);
}
