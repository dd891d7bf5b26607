//! Two-stage identification: single-leg joint coefficients from release
//! experiments, then per-leg error factors, friction and body mass from
//! averaged robot velocities.

pub mod optimize;
pub mod reference;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{run_cell, SweepConfig};
use crate::dynamics::{LegExperimentConfig, LegRig, LegSeries, RobotModel, RobotSpec};
use crate::model::{ActuationCommand, DesignParams, ErrorParams, LegStiffness, VelocitySummary};
use crate::{Error, Result};

pub use optimize::{EliteSearch, Evaluation, Minimizer, OptBudget, OptResult, ParamBound};
pub use reference::{
    ingest_reference_csv, write_leg_reference, write_robot_reference, LegReference, Reference, RobotReference, RobotSample,
};

/// Load angles of the release protocol (deg).
pub const LEG_LOAD_ANGLES: [f64; 3] = [-60.0, 0.0, 60.0];

/// Per-channel weights of the leg RMSE: position x/y/z (per m), rotation
/// x/y/z (per rad).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegWeights {
    pub position: [f64; 3],
    pub rotation: [f64; 3],
}

impl Default for LegWeights {
    fn default() -> Self {
        Self { position: [1.0; 3], rotation: [1.0; 3] }
    }
}

/// Per-channel weights of the robot RMSE: vx, vy (per m/s), w (per rad/s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocityWeights(pub [f64; 3]);

impl Default for VelocityWeights {
    fn default() -> Self {
        Self([1.0; 3])
    }
}

pub fn leg_release_experiment(
    stiffness: &LegStiffness<f64>,
    design: &DesignParams<f64>,
    angle_deg: f64,
    cfg: &LegExperimentConfig,
) -> Result<LegSeries> {
    LegRig::new(stiffness, design)?.release_experiment(angle_deg, cfg, design.gravity)
}

/// Runs the release protocol at every angle and packages it as a reference.
pub fn synthetic_leg_reference(
    stiffness: &LegStiffness<f64>,
    design: &DesignParams<f64>,
    angles: &[f64],
    cfg: &LegExperimentConfig,
) -> Result<LegReference> {
    let rig = LegRig::new(stiffness, design)?;
    let series = angles.iter().map(|&a| rig.release_experiment(a, cfg, design.gravity)).collect::<Result<Vec<_>>>()?;
    LegReference::new(series)
}

fn interp(t: &[f64], v: &[f64], x: f64) -> f64 {
    let k = t.partition_point(|&s| s <= x);
    if k == 0 {
        return v[0];
    }
    if k >= t.len() {
        return v[t.len() - 1];
    }
    let (t0, t1) = (t[k - 1], t[k]);
    let a = (x - t0) / (t1 - t0);
    v[k - 1] + a * (v[k] - v[k - 1])
}

/// Uniform timebase over the overlap of two series, `n` points.
fn common_timebase(a: &[f64], b: &[f64], n: usize) -> Result<Vec<f64>> {
    let lo = a[0].max(b[0]);
    let hi = a[a.len() - 1].min(b[b.len() - 1]);
    if !(hi > lo) || n < 2 {
        return Err(Error::ShapeMismatch(format!("series do not overlap in time ([{}, {}] vs [{}, {}])", a[0], a[a.len() - 1], b[0], b[b.len() - 1])));
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

/// Pooled RMSE between simulated and reference tip series: both are
/// resampled linearly onto the reference's sample count over their common
/// time span, weighted per channel, and pooled as one root mean square over
/// every channel and sample.
pub fn leg_rmse(simulated: &[LegSeries], reference: &LegReference, weights: &LegWeights) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    let w: Vec<f64> = weights.position.iter().chain(weights.rotation.iter()).copied().collect();
    for r in &reference.series {
        let s = simulated
            .iter()
            .find(|s| (s.angle_deg - r.angle_deg).abs() < 1e-9)
            .ok_or_else(|| Error::ShapeMismatch(format!("no simulated series at {} deg", r.angle_deg)))?;
        if s.len() < 2 {
            return Err(Error::ShapeMismatch(format!("simulated series at {} deg is too short", s.angle_deg)));
        }
        let tb = common_timebase(&s.t, &r.t, r.len())?;
        for c in 0..6 {
            let chan = |x: &LegSeries| -> Vec<f64> { (0..x.len()).map(|i| if c < 3 { x.position[i][c] } else { x.rotation[i][c - 3] }).collect() };
            let (sv, rv) = (chan(s), chan(r));
            for &t in &tb {
                let e = w[c] * (interp(&s.t, &sv, t) - interp(&r.t, &rv, t));
                sum += e * e;
            }
            count += tb.len();
        }
    }
    Ok((sum / count as f64).sqrt())
}

/// Objective of the leg stage for one candidate.
pub fn leg_objective(
    candidate: &LegStiffness<f64>,
    reference: &LegReference,
    design: &DesignParams<f64>,
    cfg: &LegExperimentConfig,
    weights: &LegWeights,
) -> Result<f64> {
    let rig = LegRig::new(candidate, design)?;
    let run = LegExperimentConfig { duration: reference.duration(), settle_speed: 0.0, ..*cfg };
    let sims = reference
        .series
        .iter()
        .map(|r| rig.release_experiment(r.angle_deg, &run, design.gravity))
        .collect::<Result<Vec<_>>>()?;
    leg_rmse(&sims, reference, weights)
}

/// Default search box for the leg coefficients, log-scaled.
pub fn default_leg_bounds() -> Vec<ParamBound> {
    vec![
        ParamBound::log("k_bend", 0.2, 5.0),
        ParamBound::log("b_bend", 0.3, 10.0),
        ParamBound::log("k_twist", 4e-4, 1.5e-2),
        ParamBound::log("b_twist", 3e-4, 1e-2),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegFit {
    pub stiffness: LegStiffness<f64>,
    pub objective: f64,
    pub result: OptResult,
}

pub fn identify_leg(
    reference: &LegReference,
    design: &DesignParams<f64>,
    cfg: &LegExperimentConfig,
    weights: &LegWeights,
    budget: &OptBudget,
) -> Result<LegFit> {
    if budget.dims() != 4 {
        return Err(Error::ShapeMismatch(format!("leg identification needs 4 bounds, got {}", budget.dims())));
    }
    reference.validate()?;
    let f = |p: &[f64]| {
        let s = LegStiffness::new(p[0], p[1], p[2], p[3]);
        leg_objective(&s, reference, design, cfg, weights).unwrap_or(f64::INFINITY)
    };
    let result = EliteSearch.minimize(&f, budget, None)?;
    let b = &result.best;
    Ok(LegFit { stiffness: LegStiffness::new(b[0], b[1], b[2], b[3]), objective: result.best_value, result })
}

/// What a diverged cell costs in the robot objective.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DivergencePenalty {
    /// Multiple of the largest finite weighted channel error of the same evaluation.
    Relative(f64),
    /// Fixed weighted channel error.
    Fixed(f64),
}

impl Default for DivergencePenalty {
    fn default() -> Self {
        DivergencePenalty::Relative(10.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullRunConfig {
    pub sweep: SweepConfig,
    pub weights: VelocityWeights,
    pub penalty: DivergencePenalty,
}

impl Default for FullRunConfig {
    fn default() -> Self {
        Self { sweep: SweepConfig::default(), weights: VelocityWeights::default(), penalty: DivergencePenalty::default() }
    }
}

/// Pooled weighted RMSE over (vx, vy, w) and every reference entry. `None`
/// entries are diverged runs and take the penalty on all three channels.
pub fn velocity_rmse(simulated: &[Option<VelocitySummary>], reference: &RobotReference, weights: &VelocityWeights, penalty: DivergencePenalty) -> Result<f64> {
    if simulated.len() != reference.len() {
        return Err(Error::ShapeMismatch(format!("{} simulated entries for {} reference entries", simulated.len(), reference.len())));
    }
    let mut sum = 0.0;
    let mut worst: f64 = 0.0;
    let mut diverged = 0usize;
    for (s, r) in simulated.iter().zip(&reference.samples) {
        match s {
            Some(v) => {
                let e = [v.vx - r.velocity.vx, v.vy - r.velocity.vy, v.w - r.velocity.w];
                for c in 0..3 {
                    let x = weights.0[c] * e[c];
                    worst = worst.max(x.abs());
                    sum += x * x;
                }
            }
            None => diverged += 1,
        }
    }
    if diverged > 0 {
        let p = match penalty {
            DivergencePenalty::Relative(k) if diverged < simulated.len() => k * worst,
            DivergencePenalty::Relative(_) => return Ok(f64::INFINITY),
            DivergencePenalty::Fixed(v) => v,
        };
        sum += 3.0 * diverged as f64 * p * p;
    }
    Ok((sum / (3 * simulated.len()) as f64).sqrt())
}

/// Robot-stage objective for a candidate error set.
pub fn full_objective(errors: &ErrorParams<f64>, base: &RobotSpec<f64>, reference: &RobotReference, run: &FullRunConfig) -> Result<f64> {
    reference.validate()?;
    let spec = RobotSpec { errors: errors.clone(), ..base.clone() };
    let model = RobotModel::build(spec)?;
    let sims: Vec<Option<VelocitySummary>> = reference
        .samples
        .par_iter()
        .map(|s| run_cell(&model, &ActuationCommand::from_degrees(s.f_hz, s.theta_deg), &run.sweep).summary().copied())
        .collect();
    velocity_rmse(&sims, reference, &run.weights, run.penalty)
}

/// Whether friction is searched or held at the template's values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrictionMode {
    #[default]
    CoOptimize,
    Fixed,
}

const LEGS: [&str; 4] = ["fl", "fr", "rl", "rr"];

/// Flat parameter vector of an error set, in the order
/// k_bend[4], b_bend[4], k_twist[4], b_twist[4], (friction[4]), m_mag, m_x, m_y.
pub fn error_parameter_names(mode: FrictionMode) -> Vec<String> {
    let mut names = Vec::new();
    for group in ["k_bend", "b_bend", "k_twist", "b_twist"] {
        for leg in LEGS {
            names.push(format!("{group}_{leg}"));
        }
    }
    if mode == FrictionMode::CoOptimize {
        for leg in LEGS {
            names.push(format!("friction_{leg}"));
        }
    }
    names.extend(["m_mag", "m_x", "m_y"].map(String::from));
    names
}

pub fn error_to_vector(x: &ErrorParams<f64>, mode: FrictionMode) -> Vec<f64> {
    let mut v = Vec::with_capacity(23);
    for arr in [&x.k_bend, &x.b_bend, &x.k_twist, &x.b_twist] {
        v.extend_from_slice(arr);
    }
    if mode == FrictionMode::CoOptimize {
        v.extend_from_slice(&x.friction);
    }
    v.extend([x.m_mag, x.m_x, x.m_y]);
    v
}

pub fn error_from_vector(v: &[f64], template: &ErrorParams<f64>, mode: FrictionMode) -> Result<ErrorParams<f64>> {
    let n = error_parameter_names(mode).len();
    if v.len() != n {
        return Err(Error::ShapeMismatch(format!("{} values for {n} error parameters", v.len())));
    }
    let four = |k: usize| -> [f64; 4] { [v[k], v[k + 1], v[k + 2], v[k + 3]] };
    let mut x = template.clone();
    x.k_bend = four(0);
    x.b_bend = four(4);
    x.k_twist = four(8);
    x.b_twist = four(12);
    let mut k = 16;
    if mode == FrictionMode::CoOptimize {
        x.friction = four(16);
        k = 20;
    }
    x.m_mag = v[k];
    x.m_x = v[k + 1];
    x.m_y = v[k + 2];
    Ok(x)
}

/// Default search box: error factors in [0.5, 2] (log), friction in
/// [0.1, 1.2], body mass correction within +/-50 g, COM offsets within +/-20 mm.
pub fn default_error_bounds(mode: FrictionMode) -> Vec<ParamBound> {
    error_parameter_names(mode)
        .into_iter()
        .map(|n| {
            if n.starts_with("friction") {
                ParamBound::new(n, 0.1, 1.2)
            } else if n == "m_mag" {
                ParamBound::new(n, -0.05, 0.05)
            } else if n == "m_x" || n == "m_y" {
                ParamBound::new(n, -0.02, 0.02)
            } else {
                ParamBound::log(n, 0.5, 2.0)
            }
        })
        .collect()
}

/// Degenerate box pinning every parameter to `x`.
pub fn pinned_error_bounds(x: &ErrorParams<f64>, mode: FrictionMode) -> Vec<ParamBound> {
    error_parameter_names(mode).into_iter().zip(error_to_vector(x, mode)).map(|(n, v)| ParamBound::fixed(n, v)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullFit {
    pub errors: ErrorParams<f64>,
    pub objective: f64,
    pub mode: FrictionMode,
    pub result: OptResult,
}

/// Robot-stage calibration. The template supplies fixed friction (when not
/// searched) and the first candidate; the first trace entry is its objective.
pub fn calibrate_full(
    reference: &RobotReference,
    base: &RobotSpec<f64>,
    run: &FullRunConfig,
    mode: FrictionMode,
    budget: &OptBudget,
) -> Result<FullFit> {
    let n = error_parameter_names(mode).len();
    if budget.dims() != n {
        return Err(Error::ShapeMismatch(format!("calibration needs {n} bounds, got {}", budget.dims())));
    }
    reference.validate()?;
    let template = base.errors.clone();
    let start: Vec<f64> = error_to_vector(&template, mode).iter().zip(&budget.bounds).map(|(&v, b)| v.clamp(b.lower, b.upper)).collect();
    let f = |p: &[f64]| match error_from_vector(p, &template, mode) {
        Ok(x) => full_objective(&x, base, reference, run).unwrap_or(f64::INFINITY),
        Err(_) => f64::INFINITY,
    };
    let result = EliteSearch.minimize(&f, budget, Some(&start))?;
    let errors = error_from_vector(&result.best, &template, mode)?;
    Ok(FullFit { errors, objective: result.best_value, mode, result })
}

/// Plain-text calibration report: parameters, objective trace, seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub stage: String,
    pub seed: u64,
    pub evaluations: usize,
    pub objective: f64,
    pub parameters: Vec<(String, f64)>,
    pub trace: Vec<Option<f64>>,
    pub weights: Vec<f64>,
    pub config_hash: String,
}

impl CalibrationReport {
    pub fn new(stage: &str, bounds: &[ParamBound], result: &OptResult, weights: Vec<f64>, config_hash: String) -> Self {
        Self {
            stage: stage.to_string(),
            seed: result.seed,
            evaluations: result.trace.len(),
            objective: result.best_value,
            parameters: bounds.iter().map(|b| b.name.clone()).zip(result.best.iter().copied()).collect(),
            trace: result.trace.iter().map(|e| e.value).collect(),
            weights,
            config_hash,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("stage = {}\nseed = {}\nconfig_hash = {}\nevaluations = {}\nobjective = {:.10e}\n", self.stage, self.seed, self.config_hash, self.evaluations, self.objective));
        s.push_str(&format!("weights = {:?}\n\n[parameters]\n", self.weights));
        for (n, v) in &self.parameters {
            s.push_str(&format!("{n} = {v:.10e}\n"));
        }
        s.push_str("\n[trace]\n");
        for (i, v) in self.trace.iter().enumerate() {
            match v {
                Some(v) => s.push_str(&format!("{i} {v:.10e}\n")),
                None => s.push_str(&format!("{i} failed\n")),
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fake_series(angle: f64, n: usize, offset: [f64; 3]) -> LegSeries {
        let t: Vec<f64> = (0..n).map(|i| i as f64 * 0.01).collect();
        let position = t.iter().map(|&x| [0.05 + offset[0], -0.01 * x + offset[1], (x * 3.0).sin() * 1e-3 + offset[2]]).collect();
        let rotation = t.iter().map(|&x| [0.1 * x, 0.0, -0.2 * x]).collect();
        LegSeries { angle_deg: angle, t, position, rotation }
    }

    fn fake_reference(offset: [f64; 3]) -> LegReference {
        LegReference::new(LEG_LOAD_ANGLES.iter().map(|&a| fake_series(a, 150, offset)).collect()).unwrap()
    }

    #[test]
    fn leg_rmse_self_is_zero() {
        let r = fake_reference([0.0; 3]);
        assert_eq!(leg_rmse(&r.series, &r, &LegWeights::default()).unwrap(), 0.0);
    }

    #[test]
    fn leg_rmse_constant_offset() {
        let r = fake_reference([0.0; 3]);
        let s = fake_reference([0.0, 0.001, 0.0]);
        let v = leg_rmse(&s.series, &r, &LegWeights::default()).unwrap();
        assert_abs_diff_eq!(v, 0.001 / 6f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn leg_rmse_needs_every_angle() {
        let r = fake_reference([0.0; 3]);
        let err = leg_rmse(&r.series[..2], &r, &LegWeights::default()).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)));
    }

    #[test]
    fn velocity_rmse_single_channel() {
        let r = RobotReference::new(vec![RobotSample { f_hz: 30.0, theta_deg: 0.0, velocity: VelocitySummary::new(0.1, 0.0, 0.5) }]).unwrap();
        let v = velocity_rmse(&[Some(VelocitySummary::new(0.13, 0.0, 0.5))], &r, &VelocityWeights::default(), DivergencePenalty::default()).unwrap();
        assert_abs_diff_eq!(v, 0.03 / 3f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn velocity_rmse_penalizes_divergence() {
        let s = RobotSample { f_hz: 30.0, theta_deg: 0.0, velocity: VelocitySummary::default() };
        let r = RobotReference::new(vec![s, s]).unwrap();
        let one = Some(VelocitySummary::new(0.02, 0.0, 0.0));
        let v = velocity_rmse(&[one, None], &r, &VelocityWeights::default(), DivergencePenalty::Relative(10.0)).unwrap();
        // diverged cell carries 0.2 on each of its three channels
        assert_abs_diff_eq!(v, ((0.02f64.powi(2) + 3.0 * 0.04) / 6.0).sqrt(), epsilon = 1e-12);
        let all = velocity_rmse(&[None, None], &r, &VelocityWeights::default(), DivergencePenalty::Relative(10.0)).unwrap();
        assert!(all.is_infinite());
    }

    #[test]
    fn error_vector_round_trip() {
        let mut x = ErrorParams::<f64>::identity();
        x.k_bend[2] = 1.3;
        x.b_twist[3] = 0.7;
        x.friction[1] = 0.33;
        x.m_y = -0.004;
        for mode in [FrictionMode::CoOptimize, FrictionMode::Fixed] {
            let v = error_to_vector(&x, mode);
            assert_eq!(v.len(), error_parameter_names(mode).len());
            assert_eq!(error_from_vector(&v, &x, mode).unwrap(), x);
        }
        assert_eq!(error_parameter_names(FrictionMode::CoOptimize).len(), 23);
        assert_eq!(error_parameter_names(FrictionMode::Fixed).len(), 19);
    }

    #[test]
    fn interpolation_is_linear() {
        let t = [0.0, 1.0, 2.0];
        let v = [0.0, 10.0, 0.0];
        assert_eq!(interp(&t, &v, 0.25), 2.5);
        assert_eq!(interp(&t, &v, 1.5), 5.0);
        assert_eq!(interp(&t, &v, 3.0), 0.0);
    }
}
