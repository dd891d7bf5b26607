use proptest::prelude::*;
use vibrowalk::analysis::*;
use vibrowalk::dynamics::{RobotModel, RobotSpec, SimConfig};
use vibrowalk::model::{CellResult, Direction, SweepGrid, VelocitySummary};

fn quick_sweep() -> SweepConfig {
    SweepConfig { duration: 0.5, settle: 0.2, sim: SimConfig::with_dt(1e-3), ..Default::default() }
}

fn grid_of(vs: &[(f64, f64, f64)]) -> SweepGrid {
    let cells = vs.iter().map(|&(a, b, c)| CellResult::Ok(VelocitySummary::new(a, b, c))).collect();
    SweepGrid::new(vec![10.0], (0..vs.len()).map(|i| i as f64 * 10.0).collect(), cells).unwrap()
}

#[test]
fn index_matches_hand_rmse() {
    let v: [f64; 4] = [0.08, 0.12, 0.09, 0.11];
    let rmse = (v.iter().map(|x| (x - 0.10) * (x - 0.10)).sum::<f64>() / 4.0).sqrt();
    assert!((rmse - 0.015811).abs() < 1e-6);
    let i = index_value(0.10, &v, &IndexCap::default());
    assert!((i - 6.3246).abs() < 1e-4, "{i}");
    assert!((i - 0.10 / rmse).abs() < 1e-12);
    assert_eq!(index_value(0.10, &[0.10; 4], &IndexCap::default()), 1e3);
    assert_eq!(index_value(0.0, &v, &IndexCap::default()), 0.0);
}

#[test]
fn performance_index_over_grids() {
    let reference = grid_of(&[(0.10, 0.0, 0.0), (0.0, 0.02, -0.3)]);
    let variants: Vec<SweepGrid> = [0.08, 0.12, 0.09, 0.11].iter().map(|&x| grid_of(&[(x, 0.0, 0.0), (0.0, 0.02, -0.3)])).collect();
    let refs: Vec<&SweepGrid> = variants.iter().collect();
    let i = performance_index(&reference, &refs, Direction::Longitudinal, &IndexCap::default()).unwrap();
    assert!((i[0].unwrap() - 6.3246).abs() < 1e-4);
    assert_eq!(i[1], Some(0.0));
    let t = performance_index(&reference, &refs, Direction::Turning, &IndexCap::default()).unwrap();
    assert_eq!(t[1], Some(1e3));

    let other = SweepGrid::new(vec![20.0], vec![0.0, 10.0], reference.cells.clone()).unwrap();
    assert!(performance_index(&reference, &[&other], Direction::Lateral, &IndexCap::default()).is_err());
}

#[test]
fn robustness_masks_slow_heading_cells() {
    let reference = grid_of(&[(0.03, 0.0, 0.0), (0.10, 0.0, 0.0), (-0.07, 0.01, 0.2), (0.049, 0.0, 0.0)]);
    let ones = |v: f64| -> DirectionIndices { [vec![Some(v); 4], vec![Some(v); 4], vec![Some(v); 4]] };
    let g = robustness_index(&ones(6.0), &ones(4.0), &reference, &RobustnessOptions::default()).unwrap();
    assert_eq!(g.excluded_set(), vec![0, 3]);
    assert_eq!(g.cells[0].excluded.as_deref(), Some(HEADING_EXCLUSION));
    assert!(g.cells[0].directions.iter().all(|d| d.p.is_none()));
    assert_eq!(g.cells[1].directions[0].p, Some(5.0));
    assert_eq!(g.cells[2].directions[0].sign, -1);
    assert_eq!(g.cells[2].directions[2].sign, 1);
    assert_eq!(robustness_value(6.0, 4.0), 5.0);

    let z = robustness_index(&ones(0.0), &ones(0.0), &reference, &RobustnessOptions::default()).unwrap();
    for c in z.cells.iter().filter(|c| c.excluded.is_none()) {
        assert!(c.directions.iter().all(|d| d.p == Some(0.0)));
    }
}

#[test]
fn selection_prefers_robust_on_axis_cells() {
    let reference = grid_of(&[(0.10, 0.0, 0.0), (0.12, 0.06, 0.0), (0.08, 0.0, 0.0), (0.10, 0.0, -0.8)]);
    let p = |v: [f64; 4]| -> DirectionIndices { [v.map(Some).to_vec(), v.map(Some).to_vec(), v.map(Some).to_vec()] };
    let g = robustness_index(&p([6.0, 8.0, 2.0, 1.0]), &p([4.0, 8.0, 2.0, 1.0]), &reference, &RobustnessOptions::default()).unwrap();
    let sel = select_pairs(&g, &SelectionCriteria::default());
    let lt = sel.iter().find(|s| s.mode == LocomotionMode::LinearTranslation).unwrap();
    // cell 1 has P = 8 but 0.06 m/s of sideways drift: 8 - 0.5 * 0.6 = 7.7
    assert_eq!(lt.picks[0].theta_deg, 10.0);
    assert!((lt.picks[0].score - 7.7).abs() < 1e-12);
    assert_eq!(lt.picks[1].theta_deg, 0.0);
    let rt = sel.iter().find(|s| s.mode == LocomotionMode::RightTurn).unwrap();
    assert_eq!(rt.picks.len(), 1);
    let lt_turn = sel.iter().find(|s| s.mode == LocomotionMode::LeftTurn).unwrap();
    assert!(lt_turn.picks.is_empty() && lt_turn.diagnostic.is_some());
}

#[test]
fn variants_follow_the_protocol() {
    let spec = RobotSpec::default();
    let set = make_variants(&spec, &VariantProtocol::default()).unwrap();
    assert_eq!(set.all().len(), 9);
    let base = RobotModel::build(spec).unwrap().total_mass();
    let models = set.build_models().unwrap();
    for m in &models[1..5] {
        assert!((m.total_mass() - base - 0.050).abs() < 1e-12);
    }
    let minus = &set.friction[0].spec.errors.friction;
    assert!((minus[0] - 0.271).abs() < 5e-4 && (minus[2] - 0.189).abs() < 5e-4);
    let plus = &set.friction[2].spec.errors.friction;
    assert!((plus[0] - 0.7106).abs() < 1e-12 && (plus[2] - 0.4961).abs() < 1e-12);
    assert_eq!(minus[1], 0.508);
}

#[test]
fn default_axes_give_195_cells() {
    let f = vibrowalk::model::linear_axis(-35.0, 35.0, 5.0);
    let t = vibrowalk::model::linear_axis(-90.0, 90.0, 15.0);
    assert_eq!((f.len(), t.len()), (15, 13));
}

#[test]
fn unexcited_column_is_stationary() {
    let m = RobotModel::build(RobotSpec::default()).unwrap();
    let g = sweep(&m, &[0.0], &[-90.0, 0.0, 45.0], &SweepConfig { duration: 2.0, settle: 1.0, ..Default::default() }).unwrap();
    for l in classify_grid(&g, &ModeThresholds::default()) {
        assert_eq!(l, Some(LocomotionMode::Stationary));
    }
}

#[test]
fn sweep_result_does_not_depend_on_worker_count() {
    let m = RobotModel::build(RobotSpec::default()).unwrap();
    let f = [-30.0, -10.0, 20.0];
    let t = [-60.0, 0.0, 90.0];
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| sweep(&m, &f, &t, &quick_sweep()).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert!(one.is_complete());
    let many = {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
        pool.install(|| sweep_many(&[&m, &m], &f, &t, &quick_sweep()).unwrap())
    };
    assert_eq!(many[0], one);
    assert_eq!(many[1], one);
}

#[test]
fn classification_examples() {
    let th = ModeThresholds::default();
    assert_eq!(classify_mode(&VelocitySummary::new(0.10, 0.004, 0.05), &th), LocomotionMode::LinearTranslation);
    assert_eq!(classify_mode(&VelocitySummary::new(0.02, 0.001, 0.9), &th), LocomotionMode::LeftTurn);
    assert_eq!(classify_mode(&VelocitySummary::new(0.01, -0.08, 0.02), &th), LocomotionMode::RightStrafe);
}

proptest! {
    // Dominance labels only compare channel ratios; the floors can only turn
    // a still cell into a moving one when a channel sits in [floor/2, floor).
    #[test]
    fn doubling_all_channels_keeps_labels(vx in -0.3f64..0.3, vy in -0.3f64..0.3, w in -2.0f64..2.0) {
        let th = ModeThresholds::default();
        let s = VelocitySummary::new(vx, vy, w);
        let a = classify_mode(&s, &th);
        let b = classify_mode(&s.scaled(2.0), &th);
        if a != LocomotionMode::Stationary {
            prop_assert_eq!(a, b);
        } else if vx.abs() < th.linear_floor / 2.0 && vy.abs() < th.linear_floor / 2.0 && w.abs() < th.turn_floor / 2.0 {
            prop_assert_eq!(b, LocomotionMode::Stationary);
        }
    }
}
