//! Actuation-space sweeps, locomotion-mode classification, sensitivity
//! variants and the performance/robustness indices built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{average_velocities, simulate, Lump, RobotModel, RobotSpec, SimConfig};
use crate::math::Vec3;
use crate::model::{ActuationCommand, CellResult, Direction, Leg, SweepGrid, VelocitySummary};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LocomotionMode {
    LinearTranslation,
    LeftTurn,
    RightTurn,
    LeftStrafe,
    RightStrafe,
    Mixed,
    Stationary,
}

impl LocomotionMode {
    pub const ALL: [LocomotionMode; 7] = [
        LocomotionMode::LinearTranslation,
        LocomotionMode::LeftTurn,
        LocomotionMode::RightTurn,
        LocomotionMode::LeftStrafe,
        LocomotionMode::RightStrafe,
        LocomotionMode::Mixed,
        LocomotionMode::Stationary,
    ];

    /// Modes that can be selected for control.
    pub const TARGETS: [LocomotionMode; 5] = [
        LocomotionMode::LinearTranslation,
        LocomotionMode::LeftTurn,
        LocomotionMode::RightTurn,
        LocomotionMode::LeftStrafe,
        LocomotionMode::RightStrafe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LocomotionMode::LinearTranslation => "linear_translation",
            LocomotionMode::LeftTurn => "left_turn",
            LocomotionMode::RightTurn => "right_turn",
            LocomotionMode::LeftStrafe => "left_strafe",
            LocomotionMode::RightStrafe => "right_strafe",
            LocomotionMode::Mixed => "mixed",
            LocomotionMode::Stationary => "stationary",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Channel the mode is about, with the sign it requires.
    pub fn target(self) -> Option<(Direction, f64)> {
        match self {
            LocomotionMode::LinearTranslation => Some((Direction::Longitudinal, 1.0)),
            LocomotionMode::LeftTurn => Some((Direction::Turning, 1.0)),
            LocomotionMode::RightTurn => Some((Direction::Turning, -1.0)),
            LocomotionMode::LeftStrafe => Some((Direction::Lateral, 1.0)),
            LocomotionMode::RightStrafe => Some((Direction::Lateral, -1.0)),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeThresholds {
    /// Below this |Vx| and |Vy| (m/s) a channel counts as still.
    pub linear_floor: f64,
    /// Below this |w| (rad/s) the turn channel counts as still.
    pub turn_floor: f64,
    /// Channel scales (Vx, Vy, w) used before comparing magnitudes.
    pub normalizers: [f64; 3],
    pub dominance_ratio: f64,
}

impl Default for ModeThresholds {
    fn default() -> Self {
        Self { linear_floor: 0.02, turn_floor: 0.1, normalizers: [0.1, 0.1, 0.5], dominance_ratio: 3.0 }
    }
}

impl ModeThresholds {
    pub fn is_stationary(&self, s: &VelocitySummary) -> bool {
        s.vx.abs() < self.linear_floor && s.vy.abs() < self.linear_floor && s.w.abs() < self.turn_floor
    }
}

pub fn classify_mode(s: &VelocitySummary, th: &ModeThresholds) -> LocomotionMode {
    if th.is_stationary(s) {
        return LocomotionMode::Stationary;
    }
    let n = [s.vx.abs() / th.normalizers[0], s.vy.abs() / th.normalizers[1], s.w.abs() / th.normalizers[2]];
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| n[b].total_cmp(&n[a]));
    let (top, second) = (order[0], order[1]);
    if n[top] < th.dominance_ratio * n[second] {
        return LocomotionMode::Mixed;
    }
    match top {
        0 => LocomotionMode::LinearTranslation,
        1 if s.vy > 0.0 => LocomotionMode::LeftStrafe,
        1 => LocomotionMode::RightStrafe,
        _ if s.w > 0.0 => LocomotionMode::LeftTurn,
        _ => LocomotionMode::RightTurn,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Run length per cell (s).
    pub duration: f64,
    /// Initial transient excluded from averaging (s).
    pub settle: f64,
    pub sim: SimConfig<f64>,
    /// Largest |f| accepted on the frequency axis (Hz).
    pub max_frequency: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { duration: 8.0, settle: crate::dynamics::DEFAULT_SETTLE, sim: SimConfig::default(), max_frequency: 35.0 }
    }
}

/// Simulates and averages one command; failures become `CellResult::Failed`.
pub fn run_cell(model: &RobotModel<f64>, cmd: &ActuationCommand<f64>, cfg: &SweepConfig) -> CellResult {
    match simulate(model, cmd, cfg.duration, &cfg.sim).and_then(|t| average_velocities(&t, cfg.settle)) {
        Ok(v) => CellResult::Ok(v),
        Err(e) => CellResult::Failed(e.to_string()),
    }
}

fn check_axes(f_axis: &[f64], theta_axis: &[f64], cfg: &SweepConfig) -> Result<()> {
    crate::model::check_axis(f_axis, "f")?;
    crate::model::check_axis(theta_axis, "theta")?;
    if f_axis.iter().any(|f| f.abs() > cfg.max_frequency) {
        return Err(Error::invalid(format!("frequency axis exceeds +/-{} Hz", cfg.max_frequency)));
    }
    if theta_axis.iter().any(|t| t.abs() > 90.0) {
        return Err(Error::invalid("theta axis must lie in [-90, 90] deg"));
    }
    Ok(())
}

/// One summary per (f, theta) grid point. Cells run in parallel on the
/// current rayon pool; results are stored by grid index.
pub fn sweep(model: &RobotModel<f64>, f_axis: &[f64], theta_axis: &[f64], cfg: &SweepConfig) -> Result<SweepGrid> {
    check_axes(f_axis, theta_axis, cfg)?;
    let nt = theta_axis.len();
    let cells: Vec<CellResult> = (0..f_axis.len() * nt)
        .into_par_iter()
        .map(|idx| run_cell(model, &ActuationCommand::from_degrees(f_axis[idx / nt], theta_axis[idx % nt]), cfg))
        .collect();
    SweepGrid::new(f_axis.to_vec(), theta_axis.to_vec(), cells)
}

/// Several models over the same grid, flattened into one parallel job list.
pub fn sweep_many(models: &[&RobotModel<f64>], f_axis: &[f64], theta_axis: &[f64], cfg: &SweepConfig) -> Result<Vec<SweepGrid>> {
    check_axes(f_axis, theta_axis, cfg)?;
    let nt = theta_axis.len();
    let per = f_axis.len() * nt;
    let cells: Vec<CellResult> = (0..models.len() * per)
        .into_par_iter()
        .map(|k| {
            let (m, idx) = (k / per, k % per);
            run_cell(models[m], &ActuationCommand::from_degrees(f_axis[idx / nt], theta_axis[idx % nt]), cfg)
        })
        .collect();
    cells.chunks(per.max(1)).map(|c| SweepGrid::new(f_axis.to_vec(), theta_axis.to_vec(), c.to_vec())).collect()
}

pub fn classify_grid(grid: &SweepGrid, th: &ModeThresholds) -> Vec<Option<LocomotionMode>> {
    grid.cells.iter().map(|c| c.summary().map(|s| classify_mode(s, th))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    Front,
    Rear,
    Left,
    Right,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Front, Edge::Rear, Edge::Left, Edge::Right];

    pub fn name(self) -> &'static str {
        match self {
            Edge::Front => "front",
            Edge::Rear => "rear",
            Edge::Left => "left",
            Edge::Right => "right",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantProtocol {
    /// Extra load per mass variant (kg).
    pub load_mass: f64,
    /// Load center distance from the named edge (m).
    pub edge_inset: f64,
    /// Load block size (m); sits on top of the plate.
    pub load_size: [f64; 3],
    /// Relative friction changes applied to the left feet.
    pub friction_changes: [f64; 4],
}

impl Default for VariantProtocol {
    fn default() -> Self {
        Self { load_mass: 0.050, edge_inset: 0.012, load_size: [0.02, 0.02, 0.01], friction_changes: [-0.58, -0.10, 0.10, 0.58] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub label: String,
    pub spec: RobotSpec<f64>,
}

/// Reference model plus the mass and friction perturbations around it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantSet {
    pub reference: Variant,
    pub mass: Vec<Variant>,
    pub friction: Vec<Variant>,
}

impl VariantSet {
    /// Reference first, then mass, then friction variants.
    pub fn all(&self) -> Vec<&Variant> {
        std::iter::once(&self.reference).chain(self.mass.iter()).chain(self.friction.iter()).collect()
    }

    pub fn build_models(&self) -> Result<Vec<RobotModel<f64>>> {
        self.all().into_iter().map(|v| RobotModel::build(v.spec.clone())).collect()
    }
}

fn pct_label(change: f64) -> String {
    let pct = (change * 100.0).round() as i64;
    if pct >= 0 {
        format!("friction_left_+{pct}pct")
    } else {
        format!("friction_left_{pct}pct")
    }
}

pub fn make_variants(spec: &RobotSpec<f64>, protocol: &VariantProtocol) -> Result<VariantSet> {
    if !spec.attachments.is_empty() {
        return Err(Error::invalid("variants need a reference model without attachments"));
    }
    let d = &spec.design;
    let z = d.body_thickness * 0.5 + protocol.load_size[2] * 0.5;
    let xi = d.body_length * 0.5 - protocol.edge_inset;
    let yi = d.body_width * 0.5 - protocol.edge_inset;
    let mass = Edge::ALL
        .iter()
        .map(|&e| {
            let c = match e {
                Edge::Front => Vec3::new(xi, 0.0, z),
                Edge::Rear => Vec3::new(-xi, 0.0, z),
                Edge::Left => Vec3::new(0.0, yi, z),
                Edge::Right => Vec3::new(0.0, -yi, z),
            };
            let mut s = spec.clone();
            let size = Vec3::new(protocol.load_size[0], protocol.load_size[1], protocol.load_size[2]);
            s.attachments.push(Lump { label: format!("load_{}", e.name()), mass: protocol.load_mass, center: c, size });
            Variant { label: format!("mass_{}", e.name()), spec: s }
        })
        .collect();
    let friction = protocol
        .friction_changes
        .iter()
        .map(|&ch| {
            let mut s = spec.clone();
            for leg in Leg::ALL.into_iter().filter(|l| l.is_left()) {
                s.errors.friction[leg.index()] *= 1.0 + ch;
            }
            Variant { label: pct_label(ch), spec: s }
        })
        .collect();
    Ok(VariantSet { reference: Variant { label: "reference".into(), spec: spec.clone() }, mass, friction })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexCap {
    /// RMSE below which a cell counts as error-free (channel units).
    pub epsilon: f64,
    pub max: f64,
}

impl Default for IndexCap {
    fn default() -> Self {
        Self { epsilon: 1e-4, max: 1e3 }
    }
}

/// `|V_ref| / RMSE(V_load - V_ref)` with the cap for near-zero error.
pub fn index_value(v_ref: f64, variants: &[f64], cap: &IndexCap) -> f64 {
    if v_ref == 0.0 || variants.is_empty() {
        return 0.0;
    }
    let mse = variants.iter().map(|v| (v - v_ref).powi(2)).sum::<f64>() / variants.len() as f64;
    let rmse = mse.sqrt();
    if rmse < cap.epsilon {
        return cap.max;
    }
    (v_ref.abs() / rmse).min(cap.max)
}

/// Per-cell index for one direction; `None` where any run failed.
pub fn performance_index(reference: &SweepGrid, variants: &[&SweepGrid], direction: Direction, cap: &IndexCap) -> Result<Vec<Option<f64>>> {
    for g in variants {
        if !reference.same_axes(g) {
            return Err(Error::AxisMismatch("variant grid axes differ from the reference grid".into()));
        }
    }
    Ok((0..reference.len())
        .map(|i| {
            let r = reference.cells[i].summary()?.channel(direction);
            let vs: Option<Vec<f64>> = variants.iter().map(|g| g.cells[i].summary().map(|s| s.channel(direction))).collect();
            Some(index_value(r, &vs?, cap))
        })
        .collect())
}

/// Per-direction index grids of one analysis (mass or friction), in
/// `Direction::ALL` order.
pub type DirectionIndices = [Vec<Option<f64>>; 3];

pub fn direction_indices(reference: &SweepGrid, variants: &[&SweepGrid], cap: &IndexCap) -> Result<DirectionIndices> {
    Ok([
        performance_index(reference, variants, Direction::Longitudinal, cap)?,
        performance_index(reference, variants, Direction::Lateral, cap)?,
        performance_index(reference, variants, Direction::Turning, cap)?,
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessOptions {
    /// |Vx_ref| below this is excluded (m/s).
    pub heading_speed_min: f64,
    /// Use the sum over the three directions as the analysis index instead of
    /// the per-direction index.
    pub summed_directions: bool,
}

impl Default for RobustnessOptions {
    fn default() -> Self {
        Self { heading_speed_min: 0.05, summed_directions: false }
    }
}

pub const HEADING_EXCLUSION: &str = "heading-speed exclusion";

/// Robustness index `P = (I'_mass + I'_friction) / 2`.
pub fn robustness_value(i_mass: f64, i_friction: f64) -> f64 {
    (i_mass + i_friction) / 2.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionEntry {
    pub i_mass: Option<f64>,
    pub i_friction: Option<f64>,
    /// Undefined on excluded or failed cells.
    pub p: Option<f64>,
    /// Sign of the reference channel (-1, 0, +1).
    pub sign: i8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexCell {
    pub directions: [DirectionEntry; 3],
    pub excluded: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexGrid {
    pub f_axis: Vec<f64>,
    pub theta_axis: Vec<f64>,
    pub cells: Vec<IndexCell>,
    /// Reference summaries, kept for ranking.
    pub reference: Vec<Option<VelocitySummary>>,
}

impl IndexGrid {
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let nt = self.theta_axis.len();
        (self.f_axis[idx / nt], self.theta_axis[idx % nt])
    }

    pub fn excluded_set(&self) -> Vec<usize> {
        self.cells.iter().enumerate().filter(|(_, c)| c.excluded.is_some()).map(|(i, _)| i).collect()
    }
}

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

pub fn robustness_index(i_mass: &DirectionIndices, i_friction: &DirectionIndices, reference: &SweepGrid, opts: &RobustnessOptions) -> Result<IndexGrid> {
    let n = reference.len();
    if i_mass.iter().chain(i_friction.iter()).any(|g| g.len() != n) {
        return Err(Error::AxisMismatch(format!("index grids must have {n} cells")));
    }
    let summed = |g: &DirectionIndices, i: usize| -> Option<f64> { Some(g[0][i]? + g[1][i]? + g[2][i]?) };
    let cells = (0..n)
        .map(|i| {
            let r = reference.cells[i].summary();
            let excluded = match r {
                Some(s) if s.vx.abs() < opts.heading_speed_min => Some(HEADING_EXCLUSION.to_string()),
                Some(_) => None,
                None => Some("failed reference run".to_string()),
            };
            let directions = [0, 1, 2].map(|d| {
                let (im, ifr) = if opts.summed_directions { (summed(i_mass, i), summed(i_friction, i)) } else { (i_mass[d][i], i_friction[d][i]) };
                let p = match (excluded.is_none(), im, ifr) {
                    (true, Some(a), Some(b)) => Some(robustness_value(a, b)),
                    _ => None,
                };
                DirectionEntry { i_mass: im, i_friction: ifr, p, sign: r.map(|s| sign_of(s.channel(Direction::ALL[d]))).unwrap_or(0) }
            });
            IndexCell { directions, excluded }
        })
        .collect();
    Ok(IndexGrid {
        f_axis: reference.f_axis.clone(),
        theta_axis: reference.theta_axis.clone(),
        cells,
        reference: reference.cells.iter().map(|c| c.summary().copied()).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionCriteria {
    pub w_target: f64,
    pub w_off: f64,
    /// Channel scales for the off-channel penalty (Vx, Vy, w).
    pub normalizers: [f64; 3],
    pub top_k: usize,
    /// Modes for which the heading-speed exclusion is ignored.
    pub exclusion_disabled: Vec<LocomotionMode>,
}

impl Default for SelectionCriteria {
    fn default() -> Self {
        Self { w_target: 1.0, w_off: 0.5, normalizers: [0.1, 0.1, 0.5], top_k: 3, exclusion_disabled: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pick {
    pub f_hz: f64,
    pub theta_deg: f64,
    pub score: f64,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSelection {
    pub mode: LocomotionMode,
    pub picks: Vec<Pick>,
    /// Why the list is empty, if it is.
    pub diagnostic: Option<String>,
}

/// Ranks cells per target mode by `w_target * P_d - w_off * sum(|V_off| / norm)`.
/// Cells must move in the mode's direction (sign of the target channel).
pub fn select_pairs(grid: &IndexGrid, criteria: &SelectionCriteria) -> Vec<ModeSelection> {
    LocomotionMode::TARGETS
        .iter()
        .map(|&mode| {
            let (dir, sign) = mode.target().expect("target modes have a channel");
            let d = Direction::ALL.iter().position(|x| *x == dir).unwrap();
            let ignore_exclusion = criteria.exclusion_disabled.contains(&mode);
            let mut picks: Vec<(usize, Pick)> = Vec::new();
            for (i, cell) in grid.cells.iter().enumerate() {
                let Some(r) = grid.reference[i] else { continue };
                if cell.excluded.is_some() && !(ignore_exclusion && cell.excluded.as_deref() == Some(HEADING_EXCLUSION)) {
                    continue;
                }
                let entry = &cell.directions[d];
                let p = match (entry.p, entry.i_mass, entry.i_friction) {
                    (Some(p), _, _) => p,
                    (None, Some(a), Some(b)) if ignore_exclusion => robustness_value(a, b),
                    _ => continue,
                };
                if r.channel(dir) * sign <= 0.0 {
                    continue;
                }
                let off: f64 = (0..3).filter(|&c| c != d).map(|c| r.channel(Direction::ALL[c]).abs() / criteria.normalizers[c]).sum();
                let (f_hz, theta_deg) = grid.point(i);
                picks.push((i, Pick { f_hz, theta_deg, score: criteria.w_target * p - criteria.w_off * off, p }));
            }
            picks.sort_by(|a, b| b.1.score.total_cmp(&a.1.score).then(a.0.cmp(&b.0)));
            picks.truncate(criteria.top_k);
            let diagnostic = picks.is_empty().then(|| format!("no qualifying cells for {}", mode.name()));
            ModeSelection { mode, picks: picks.into_iter().map(|p| p.1).collect(), diagnostic }
        })
        .collect()
}

/// Everything produced by the sensitivity pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    pub labels: Vec<String>,
    /// Reference grid first, then mass and friction variant grids.
    pub grids: Vec<SweepGrid>,
    pub mass_indices: DirectionIndices,
    pub friction_indices: DirectionIndices,
    pub index_grid: IndexGrid,
}

/// Sweeps the reference and all variants, then computes I and P.
pub fn sensitivity(
    variants: &VariantSet,
    f_axis: &[f64],
    theta_axis: &[f64],
    cfg: &SweepConfig,
    cap: &IndexCap,
    opts: &RobustnessOptions,
) -> Result<SensitivityResult> {
    let models = variants.build_models()?;
    let refs: Vec<&RobotModel<f64>> = models.iter().collect();
    let grids = sweep_many(&refs, f_axis, theta_axis, cfg)?;
    indices_from_grids(variants.all().iter().map(|v| v.label.clone()).collect(), grids, variants.mass.len(), cap, opts)
}

/// Index computation from completed grids (reference, then `n_mass` mass
/// variant grids, then friction variant grids).
pub fn indices_from_grids(labels: Vec<String>, grids: Vec<SweepGrid>, n_mass: usize, cap: &IndexCap, opts: &RobustnessOptions) -> Result<SensitivityResult> {
    if grids.len() < 2 + n_mass {
        return Err(Error::ShapeMismatch("need a reference, mass and friction grids".into()));
    }
    let reference = &grids[0];
    let mass: Vec<&SweepGrid> = grids[1..1 + n_mass].iter().collect();
    let friction: Vec<&SweepGrid> = grids[1 + n_mass..].iter().collect();
    let mass_indices = direction_indices(reference, &mass, cap)?;
    let friction_indices = direction_indices(reference, &friction, cap)?;
    let index_grid = robustness_index(&mass_indices, &friction_indices, reference, opts)?;
    Ok(SensitivityResult { labels, grids, mass_indices, friction_indices, index_grid })
}
