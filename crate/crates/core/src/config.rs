//! Run configuration in TOML.
//!
//! Numeric fields take either a bare number or a string with a unit suffix,
//! e.g. `body_length = "220 mm"`, `f = "35 Hz"`, `deadband = "5 deg"`. Bare
//! numbers are read in SI units, except frequencies (Hz) and angles (deg).
//! Every section is optional and overrides the defaults key by key; unknown
//! keys are rejected.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use sha2::{Digest, Sha256};
use toml::Value as Toml;

use crate::analysis::{IndexCap, ModeThresholds, RobustnessOptions, SelectionCriteria, SweepConfig, VariantProtocol};
use crate::calibration::{DivergencePenalty, FrictionMode, FullRunConfig, LegWeights, VelocityWeights};
use crate::control::{ActuationTable, ControllerConfig, Disturbance, Pair, Unicycle};
use crate::dynamics::{Chirality, LegExperimentConfig, RobotSpec, SimConfig};
use crate::model::linear_axis;
use crate::{Error, Result};

/// Accepted unit suffixes and the factor for bare numbers.
#[derive(Clone, Copy, Debug)]
pub struct Dim {
    pub units: &'static [(&'static str, f64, f64)],
    /// Factor as (numerator, denominator) so decimal prefixes stay exact.
    pub bare: (f64, f64),
}

pub const LENGTH: Dim = Dim { units: &[("m", 1.0, 1.0), ("cm", 1.0, 1e2), ("mm", 1.0, 1e3), ("um", 1.0, 1e6)], bare: (1.0, 1.0) };
pub const MASS: Dim = Dim { units: &[("kg", 1.0, 1.0), ("g", 1.0, 1e3), ("mg", 1.0, 1e6)], bare: (1.0, 1.0) };
pub const TIME: Dim = Dim { units: &[("s", 1.0, 1.0), ("ms", 1.0, 1e3), ("us", 1.0, 1e6), ("min", 60.0, 1.0)], bare: (1.0, 1.0) };
pub const FREQUENCY: Dim = Dim { units: &[("Hz", 1.0, 1.0), ("kHz", 1e3, 1.0)], bare: (1.0, 1.0) };
/// Angles stored in radians.
pub const ANGLE: Dim = Dim { units: &[("deg", PI, 180.0), ("rad", 1.0, 1.0)], bare: (PI, 180.0) };
/// Angles stored in degrees.
pub const ANGLE_DEG: Dim = Dim { units: &[("deg", 1.0, 1.0), ("rad", 180.0, PI)], bare: (1.0, 1.0) };
pub const ACCEL: Dim = Dim { units: &[("m/s^2", 1.0, 1.0)], bare: (1.0, 1.0) };
pub const SPEED: Dim = Dim { units: &[("m/s", 1.0, 1.0), ("mm/s", 1.0, 1e3), ("cm/s", 1.0, 1e2)], bare: (1.0, 1.0) };
pub const RATE: Dim = Dim { units: &[("rad/s", 1.0, 1.0), ("deg/s", PI, 180.0)], bare: (1.0, 1.0) };
pub const STIFFNESS: Dim = Dim { units: &[("N/m", 1.0, 1.0), ("kN/m", 1e3, 1.0)], bare: (1.0, 1.0) };
pub const DAMPING: Dim = Dim { units: &[("N*s/m", 1.0, 1.0)], bare: (1.0, 1.0) };
pub const ROT_STIFFNESS: Dim = Dim { units: &[("N*m/rad", 1.0, 1.0), ("N*mm/rad", 1.0, 1e3)], bare: (1.0, 1.0) };
pub const ROT_DAMPING: Dim = Dim { units: &[("N*m*s/rad", 1.0, 1.0), ("N*mm*s/rad", 1.0, 1e3)], bare: (1.0, 1.0) };
pub const PLAIN: Dim = Dim { units: &[], bare: (1.0, 1.0) };

/// Parses `"220 mm"`, `"220mm"` or `"0.22"` into the SI value.
pub fn parse_quantity(text: &str, dim: Dim) -> Result<f64> {
    let s = text.trim();
    let split = s
        .char_indices()
        .find(|&(i, c)| c.is_alphabetic() && !((c == 'e' || c == 'E') && s[i + 1..].starts_with(|n: char| n.is_ascii_digit() || n == '-' || n == '+')))
        .map_or(s.len(), |(i, _)| i);
    let (num, unit) = (s[..split].trim(), s[split..].trim());
    let value: f64 = num.parse().map_err(|_| Error::Config(format!("cannot read a number from `{text}`")))?;
    let factor = if unit.is_empty() {
        dim.bare
    } else {
        dim.units
            .iter()
            .find(|(u, _, _)| *u == unit)
            .map(|&(_, n, d)| (n, d))
            .ok_or_else(|| Error::Config(format!("unit `{unit}` in `{text}` is not one of {:?}", dim.units.iter().map(|u| u.0).collect::<Vec<_>>())))?
    };
    let v = value * factor.0 / factor.1;
    if !v.is_finite() {
        return Err(Error::Config(format!("`{text}` is not finite")));
    }
    Ok(v)
}

fn quantity(v: &Toml, dim: Dim, key: &str) -> Result<f64> {
    match v {
        Toml::Integer(i) => Ok(*i as f64 * dim.bare.0 / dim.bare.1),
        Toml::Float(x) => Ok(x * dim.bare.0 / dim.bare.1),
        Toml::String(s) => parse_quantity(s, dim),
        _ => Err(Error::Config(format!("`{key}` must be a number or a quantity string"))),
    }
}

fn quantity_json(v: &Toml, dim: Dim, key: &str) -> Result<Json> {
    match v {
        Toml::Array(a) => a.iter().map(|x| quantity_json(x, dim, key)).collect::<Result<Vec<_>>>().map(Json::Array),
        _ => Ok(Json::from(quantity(v, dim, key)?)),
    }
}

/// How a key of a section is read.
#[derive(Clone, Copy)]
enum Field {
    Q(Dim),
    /// Passed through unchanged (booleans, integers, enums).
    Raw,
}

/// Applies the keys of `section` onto `base`.
fn overlay<T: Serialize + DeserializeOwned>(base: &T, section: Option<&Toml>, name: &str, fields: &[(&str, Field)]) -> Result<T> {
    let Some(section) = section else { return Ok(serde_json::from_value(serde_json::to_value(base)?)?) };
    let table = section.as_table().ok_or_else(|| Error::Config(format!("[{name}] must be a table")))?;
    let mut json = serde_json::to_value(base)?;
    let obj = json.as_object_mut().ok_or_else(|| Error::Config(format!("[{name}] is not a keyed section")))?;
    for (k, v) in table {
        let key = format!("{name}.{k}");
        let field = fields.iter().find(|f| f.0 == k).map(|f| f.1).ok_or_else(|| Error::Config(format!("unknown key `{key}`")))?;
        let value = match field {
            Field::Q(dim) => quantity_json(v, dim, &key)?,
            Field::Raw => serde_json::to_value(v)?,
        };
        obj.insert(k.clone(), value);
    }
    serde_json::from_value(json).map_err(|e| Error::Config(format!("[{name}]: {e}")))
}

fn check_keys(table: &toml::Table, name: &str, allowed: &[&str]) -> Result<()> {
    for k in table.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::Config(format!("unknown key `{name}{k}`")));
        }
    }
    Ok(())
}

fn sub<'a>(t: &'a toml::Table, key: &str) -> Option<&'a Toml> {
    t.get(key)
}

fn q(dim: Dim) -> Field {
    Field::Q(dim)
}

const DESIGN_FIELDS: &[(&str, Field)] = &[
    ("body_length", Field::Q(LENGTH)),
    ("body_width", Field::Q(LENGTH)),
    ("body_thickness", Field::Q(LENGTH)),
    ("leg_length", Field::Q(LENGTH)),
    ("leg_width", Field::Q(LENGTH)),
    ("leg_thickness", Field::Q(LENGTH)),
    ("leg_twist", Field::Q(ANGLE)),
    ("foot_length", Field::Q(LENGTH)),
    ("foot_width", Field::Q(LENGTH)),
    ("rotor_arm", Field::Q(LENGTH)),
    ("rotor_separation", Field::Q(LENGTH)),
    ("rotor_mass", Field::Q(MASS)),
    ("total_mass", Field::Q(MASS)),
    ("gravity", Field::Q(ACCEL)),
    ("plate_mass", Field::Q(MASS)),
    ("leg_mass", Field::Q(MASS)),
    ("foot_mass", Field::Q(MASS)),
    ("rotor_height", Field::Q(LENGTH)),
];

const STIFFNESS_FIELDS: &[(&str, Field)] = &[
    ("k_bend", Field::Q(ROT_STIFFNESS)),
    ("b_bend", Field::Q(ROT_DAMPING)),
    ("k_twist", Field::Q(ROT_STIFFNESS)),
    ("b_twist", Field::Q(ROT_DAMPING)),
];

const ERROR_FIELDS: &[(&str, Field)] = &[
    ("k_bend", Field::Q(PLAIN)),
    ("b_bend", Field::Q(PLAIN)),
    ("k_twist", Field::Q(PLAIN)),
    ("b_twist", Field::Q(PLAIN)),
    ("friction", Field::Q(PLAIN)),
    ("m_mag", Field::Q(MASS)),
    ("m_x", Field::Q(LENGTH)),
    ("m_y", Field::Q(LENGTH)),
];

const CONTACT_FIELDS: &[(&str, Field)] = &[
    ("stiffness", Field::Q(STIFFNESS)),
    ("damping", Field::Q(DAMPING)),
    ("slip_velocity", Field::Q(SPEED)),
    ("torsional", Field::Q(LENGTH)),
];

const INTEGRATOR_FIELDS: &[(&str, Field)] = &[
    ("dt", Field::Q(TIME)),
    ("sample_interval", Field::Q(TIME)),
    ("motor_lag", Field::Q(TIME)),
    ("divergence_limit", Field::Q(PLAIN)),
];

const LEG_EXPERIMENT_FIELDS: &[(&str, Field)] = &[
    ("load_mass", Field::Q(MASS)),
    ("deflection", Field::Q(ANGLE)),
    ("dt", Field::Q(TIME)),
    ("sample_interval", Field::Q(TIME)),
    ("duration", Field::Q(TIME)),
    ("settle_speed", Field::Q(SPEED)),
];

const THRESHOLD_FIELDS: &[(&str, Field)] = &[
    ("linear_floor", Field::Q(SPEED)),
    ("turn_floor", Field::Q(RATE)),
    ("normalizers", Field::Q(PLAIN)),
    ("dominance_ratio", Field::Q(PLAIN)),
];

const VARIANT_FIELDS: &[(&str, Field)] = &[
    ("load_mass", Field::Q(MASS)),
    ("edge_inset", Field::Q(LENGTH)),
    ("load_size", Field::Q(LENGTH)),
    ("friction_changes", Field::Q(PLAIN)),
];

const INDEX_FIELDS: &[(&str, Field)] = &[("epsilon", Field::Q(PLAIN)), ("max", Field::Q(PLAIN))];

const ROBUSTNESS_FIELDS: &[(&str, Field)] = &[("heading_speed_min", Field::Q(SPEED)), ("summed_directions", Field::Raw)];

const SELECTION_FIELDS: &[(&str, Field)] = &[
    ("w_target", Field::Q(PLAIN)),
    ("w_off", Field::Q(PLAIN)),
    ("normalizers", Field::Q(PLAIN)),
    ("top_k", Field::Raw),
    ("exclusion_disabled", Field::Raw),
];

const CONTROLLER_FIELDS: &[(&str, Field)] = &[
    ("deadband", Field::Q(ANGLE)),
    ("period", Field::Q(TIME)),
    ("three_state", Field::Raw),
    ("capture_radius", Field::Q(LENGTH)),
];

/// Sweep axes and per-cell run settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub f_axis: Vec<f64>,
    pub theta_axis: Vec<f64>,
    pub run: SweepConfig,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self { f_axis: linear_axis(-35.0, 35.0, 5.0), theta_axis: linear_axis(-90.0, 90.0, 15.0), run: SweepConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSettings {
    pub leg_evaluations: usize,
    pub full_evaluations: usize,
    pub leg_weights: LegWeights,
    pub velocity_weights: VelocityWeights,
    pub penalty: DivergencePenalty,
    pub friction_mode: FrictionMode,
    pub leg_reference: Option<PathBuf>,
    pub robot_reference: Option<PathBuf>,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            leg_evaluations: 300,
            full_evaluations: 500,
            leg_weights: LegWeights::default(),
            velocity_weights: VelocityWeights::default(),
            penalty: DivergencePenalty::default(),
            friction_mode: FrictionMode::default(),
            leg_reference: None,
            robot_reference: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FigureEight {
    pub center: [f64; 2],
    pub lobe_radius: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackSettings {
    /// Explicit waypoints; when empty the figure eight is used.
    pub waypoints: Vec<[f64; 2]>,
    pub figure_eight: FigureEight,
    pub duration: f64,
}

impl Default for TrackSettings {
    fn default() -> Self {
        Self { waypoints: Vec::new(), figure_eight: FigureEight { center: [0.0, 0.0], lobe_radius: 0.5, count: 8 }, duration: 600.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnSettings {
    pub origin: [f64; 2],
    pub disturbances: Vec<Disturbance>,
    pub duration: f64,
}

impl Default for ReturnSettings {
    fn default() -> Self {
        Self { origin: [0.0, 0.0], disturbances: Vec::new(), duration: 120.0 }
    }
}

/// Which plant the closed-loop commands drive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantKind {
    #[default]
    Surrogate,
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSettings {
    pub speed: f64,
    pub turn_rate: f64,
}

impl Default for SurrogateSettings {
    fn default() -> Self {
        let u = Unicycle::default();
        Self { speed: u.speed, turn_rate: u.turn_rate }
    }
}

/// Fully resolved configuration (SI units, frequencies in Hz, grid angles in
/// degrees).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub seed: Option<u64>,
    pub robot: RobotSpec<f64>,
    pub sweep: SweepSettings,
    pub thresholds: ModeThresholds,
    pub variants: VariantProtocol,
    pub index_cap: IndexCap,
    pub robustness: RobustnessOptions,
    pub selection: SelectionCriteria,
    pub leg_experiment: LegExperimentConfig,
    pub calibration: CalibrationSettings,
    pub controller: ControllerConfig,
    pub actuation_table: ActuationTable,
    pub plant: PlantKind,
    pub surrogate: SurrogateSettings,
    pub track: TrackSettings,
    pub return_home: ReturnSettings,
}

const TOP_KEYS: &[&str] = &[
    "seed",
    "design",
    "stiffness",
    "errors",
    "contact",
    "chirality",
    "integrator",
    "sweep",
    "thresholds",
    "variants",
    "index",
    "robustness",
    "selection",
    "leg_experiment",
    "calibration",
    "controller",
    "actuation_table",
    "plant",
    "surrogate",
    "track",
    "return_home",
];

fn point(v: &Toml, key: &str) -> Result<[f64; 2]> {
    match v.as_array().map(|a| a.as_slice()) {
        Some([x, y]) => Ok([quantity(x, LENGTH, key)?, quantity(y, LENGTH, key)?]),
        _ => Err(Error::Config(format!("`{key}` must be a pair [x, y]"))),
    }
}

fn table<'a>(v: &'a Toml, name: &str) -> Result<&'a toml::Table> {
    v.as_table().ok_or_else(|| Error::Config(format!("[{name}] must be a table")))
}

fn axis(v: &Toml, dim: Dim, key: &str) -> Result<Vec<f64>> {
    match v {
        Toml::Array(a) => a.iter().map(|x| quantity(x, dim, key)).collect(),
        Toml::Table(t) => {
            check_keys(t, &format!("{key}."), &["start", "stop", "step"])?;
            let get = |k: &str| t.get(k).ok_or_else(|| Error::Config(format!("`{key}.{k}` is required"))).and_then(|x| quantity(x, dim, key));
            let (a, b, s) = (get("start")?, get("stop")?, get("step")?);
            if !(s > 0.0) || b < a {
                return Err(Error::Config(format!("`{key}` needs start <= stop and step > 0")));
            }
            Ok(linear_axis(a, b, s))
        }
        _ => Err(Error::Config(format!("`{key}` must be a list or a {{start, stop, step}} table"))),
    }
}

fn usize_of(v: &Toml, key: &str) -> Result<usize> {
    v.as_integer().filter(|&i| i >= 0).map(|i| i as usize).ok_or_else(|| Error::Config(format!("`{key}` must be a non-negative integer")))
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let root: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        check_keys(&root, "", TOP_KEYS)?;
        let mut c = Config::default();
        let g = |k: &str| sub(&root, k);

        if let Some(s) = g("seed") {
            let s = s.as_integer().filter(|&s| s >= 0).ok_or_else(|| Error::Config("`seed` must be a non-negative integer".into()))?;
            c.seed = Some(s as u64);
        }

        let r = &mut c.robot;
        r.design = overlay(&r.design, g("design"), "design", DESIGN_FIELDS)?;
        r.stiffness = overlay(&r.stiffness, g("stiffness"), "stiffness", STIFFNESS_FIELDS)?;
        r.errors = overlay(&r.errors, g("errors"), "errors", ERROR_FIELDS)?;
        r.contact = overlay(&r.contact, g("contact"), "contact", CONTACT_FIELDS)?;
        if let Some(ch) = g("chirality") {
            r.chirality = match ch.as_str() {
                Some("mirror_left_right") => Chirality::MirrorLeftRight,
                Some("uniform") => Chirality::Uniform,
                _ => return Err(Error::Config("`chirality` must be \"mirror_left_right\" or \"uniform\"".into())),
            };
        }
        let sim: SimConfig<f64> = overlay(&c.sweep.run.sim, g("integrator"), "integrator", INTEGRATOR_FIELDS)?;
        c.sweep.run.sim = sim;

        if let Some(s) = g("sweep") {
            let t = table(s, "sweep")?;
            check_keys(t, "sweep.", &["f_axis", "theta_axis", "duration", "settle", "max_frequency"])?;
            if let Some(v) = t.get("f_axis") {
                c.sweep.f_axis = axis(v, FREQUENCY, "sweep.f_axis")?;
            }
            if let Some(v) = t.get("theta_axis") {
                c.sweep.theta_axis = axis(v, ANGLE_DEG, "sweep.theta_axis")?;
            }
            if let Some(v) = t.get("duration") {
                c.sweep.run.duration = quantity(v, TIME, "sweep.duration")?;
            }
            if let Some(v) = t.get("settle") {
                c.sweep.run.settle = quantity(v, TIME, "sweep.settle")?;
            }
            if let Some(v) = t.get("max_frequency") {
                c.sweep.run.max_frequency = quantity(v, FREQUENCY, "sweep.max_frequency")?;
            }
        }

        c.thresholds = overlay(&c.thresholds, g("thresholds"), "thresholds", THRESHOLD_FIELDS)?;
        c.variants = overlay(&c.variants, g("variants"), "variants", VARIANT_FIELDS)?;
        c.index_cap = overlay(&c.index_cap, g("index"), "index", INDEX_FIELDS)?;
        c.robustness = overlay(&c.robustness, g("robustness"), "robustness", ROBUSTNESS_FIELDS)?;
        c.selection = overlay(&c.selection, g("selection"), "selection", SELECTION_FIELDS)?;
        c.leg_experiment = overlay(&c.leg_experiment, g("leg_experiment"), "leg_experiment", LEG_EXPERIMENT_FIELDS)?;
        c.controller = overlay(&c.controller, g("controller"), "controller", CONTROLLER_FIELDS)?;

        if let Some(s) = g("calibration") {
            let t = table(s, "calibration")?;
            let cal = &mut c.calibration;
            check_keys(
                t,
                "calibration.",
                &["leg_evaluations", "full_evaluations", "leg_weights", "velocity_weights", "penalty_relative", "penalty_fixed", "friction", "leg_reference", "robot_reference"],
            )?;
            if let Some(v) = t.get("leg_evaluations") {
                cal.leg_evaluations = usize_of(v, "calibration.leg_evaluations")?;
            }
            if let Some(v) = t.get("full_evaluations") {
                cal.full_evaluations = usize_of(v, "calibration.full_evaluations")?;
            }
            if let Some(v) = t.get("leg_weights") {
                cal.leg_weights = overlay(&cal.leg_weights, Some(v), "calibration.leg_weights", &[("position", q(PLAIN)), ("rotation", q(PLAIN))])?;
            }
            if let Some(v) = t.get("velocity_weights") {
                cal.velocity_weights = VelocityWeights(serde_json::from_value(quantity_json(v, PLAIN, "calibration.velocity_weights")?).map_err(|e| Error::Config(format!("calibration.velocity_weights: {e}")))?);
            }
            match (t.get("penalty_relative"), t.get("penalty_fixed")) {
                (Some(_), Some(_)) => return Err(Error::Config("give only one of `penalty_relative` and `penalty_fixed`".into())),
                (Some(v), None) => cal.penalty = DivergencePenalty::Relative(quantity(v, PLAIN, "calibration.penalty_relative")?),
                (None, Some(v)) => cal.penalty = DivergencePenalty::Fixed(quantity(v, PLAIN, "calibration.penalty_fixed")?),
                _ => {}
            }
            if let Some(v) = t.get("friction") {
                cal.friction_mode = match v.as_str() {
                    Some("co_optimize") => FrictionMode::CoOptimize,
                    Some("fixed") => FrictionMode::Fixed,
                    _ => return Err(Error::Config("`calibration.friction` must be \"co_optimize\" or \"fixed\"".into())),
                };
            }
            for (k, slot) in [("leg_reference", &mut cal.leg_reference), ("robot_reference", &mut cal.robot_reference)] {
                if let Some(v) = t.get(k) {
                    *slot = Some(PathBuf::from(v.as_str().ok_or_else(|| Error::Config(format!("`calibration.{k}` must be a path")))?));
                }
            }
        }

        if let Some(s) = g("actuation_table") {
            let t = table(s, "actuation_table")?;
            check_keys(t, "actuation_table.", &["linear", "left_turn", "right_turn", "left_strafe", "right_strafe"])?;
            let tab = &mut c.actuation_table;
            for (k, slot) in [
                ("linear", &mut tab.linear),
                ("left_turn", &mut tab.left_turn),
                ("right_turn", &mut tab.right_turn),
                ("left_strafe", &mut tab.left_strafe),
                ("right_strafe", &mut tab.right_strafe),
            ] {
                if let Some(v) = t.get(k) {
                    let key = format!("actuation_table.{k}");
                    *slot = match v.as_array().map(|a| a.as_slice()) {
                        Some([f, th]) => Pair::new(quantity(f, FREQUENCY, &key)?, quantity(th, ANGLE_DEG, &key)?),
                        _ => return Err(Error::Config(format!("`{key}` must be [f, theta]"))),
                    };
                }
            }
        }

        if let Some(v) = g("plant") {
            c.plant = match v.as_str() {
                Some("surrogate") => PlantKind::Surrogate,
                Some("full") => PlantKind::Full,
                _ => return Err(Error::Config("`plant` must be \"surrogate\" or \"full\"".into())),
            };
        }
        if let Some(s) = g("surrogate") {
            c.surrogate = overlay(&c.surrogate, Some(s), "surrogate", &[("speed", q(SPEED)), ("turn_rate", q(RATE))])?;
        }

        if let Some(s) = g("track") {
            let t = table(s, "track")?;
            check_keys(t, "track.", &["waypoints", "figure_eight", "duration"])?;
            if let Some(v) = t.get("waypoints") {
                let a = v.as_array().ok_or_else(|| Error::Config("`track.waypoints` must be a list of [x, y]".into()))?;
                c.track.waypoints = a.iter().map(|p| point(p, "track.waypoints")).collect::<Result<_>>()?;
            }
            if let Some(v) = t.get("figure_eight") {
                let f = table(v, "track.figure_eight")?;
                check_keys(f, "track.figure_eight.", &["center", "lobe_radius", "count"])?;
                let fe = &mut c.track.figure_eight;
                if let Some(p) = f.get("center") {
                    fe.center = point(p, "track.figure_eight.center")?;
                }
                if let Some(r) = f.get("lobe_radius") {
                    fe.lobe_radius = quantity(r, LENGTH, "track.figure_eight.lobe_radius")?;
                }
                if let Some(n) = f.get("count") {
                    fe.count = usize_of(n, "track.figure_eight.count")?;
                }
            }
            if let Some(v) = t.get("duration") {
                c.track.duration = quantity(v, TIME, "track.duration")?;
            }
        }

        if let Some(s) = g("return_home") {
            let t = table(s, "return_home")?;
            check_keys(t, "return_home.", &["origin", "disturbances", "duration"])?;
            if let Some(v) = t.get("origin") {
                c.return_home.origin = point(v, "return_home.origin")?;
            }
            if let Some(v) = t.get("duration") {
                c.return_home.duration = quantity(v, TIME, "return_home.duration")?;
            }
            if let Some(v) = t.get("disturbances") {
                let a = v.as_array().ok_or_else(|| Error::Config("`return_home.disturbances` must be a list of tables".into()))?;
                c.return_home.disturbances = a
                    .iter()
                    .map(|d| {
                        overlay(
                            &Disturbance { t: 0.0, dx: 0.0, dy: 0.0, dyaw: 0.0 },
                            Some(d),
                            "return_home.disturbances",
                            &[("t", q(TIME)), ("dx", q(LENGTH)), ("dy", q(LENGTH)), ("dyaw", q(ANGLE))],
                        )
                    })
                    .collect::<Result<_>>()?;
            }
        }

        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => Error::Config(format!("{}: {other}", path.display())),
        })
    }

    /// Checks every section; failures are reported as config errors.
    pub fn validate(&self) -> Result<()> {
        let wrap = |r: Result<()>| r.map_err(|e| Error::Config(e.to_string()));
        wrap(self.robot.design.validate())?;
        wrap(self.robot.stiffness.validate())?;
        wrap(self.robot.errors.validate())?;
        wrap(self.robot.contact.validate())?;
        wrap(self.sweep.run.sim.validate())?;
        wrap(self.controller.validate())?;
        wrap(self.actuation_table.validate())?;
        wrap(crate::model::check_axis(&self.sweep.f_axis, "f"))?;
        wrap(crate::model::check_axis(&self.sweep.theta_axis, "theta"))?;
        if self.sweep.f_axis.iter().any(|f| f.abs() > self.sweep.run.max_frequency) || self.sweep.theta_axis.iter().any(|t| t.abs() > 90.0) {
            return Err(Error::Config("sweep axes exceed the actuation limits".into()));
        }
        if !(self.sweep.run.duration > self.sweep.run.settle && self.sweep.run.settle >= 0.0) {
            return Err(Error::Config("sweep duration must exceed the settle time".into()));
        }
        if !(self.surrogate.speed >= 0.0 && self.surrogate.turn_rate > 0.0) {
            return Err(Error::Config("surrogate needs speed >= 0 and turn_rate > 0".into()));
        }
        if !(self.track.duration > 0.0 && self.return_home.duration > 0.0) {
            return Err(Error::Config("task durations must be positive".into()));
        }
        Ok(())
    }

    /// Canonical JSON of the resolved configuration.
    pub fn canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn hash(&self) -> Result<String> {
        Ok(hex_digest(self.canonical_json()?.as_bytes()))
    }

    pub fn full_run(&self) -> FullRunConfig {
        FullRunConfig { sweep: self.sweep.run, weights: self.calibration.velocity_weights, penalty: self.calibration.penalty }
    }

    pub fn unicycle(&self) -> Unicycle {
        Unicycle::new(self.surrogate.speed, self.surrogate.turn_rate)
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quantities() {
        assert_relative_eq!(parse_quantity("220 mm", LENGTH).unwrap(), 0.22, max_relative = 1e-15);
        assert_relative_eq!(parse_quantity("16g", MASS).unwrap(), 0.016, max_relative = 1e-15);
        assert_eq!(parse_quantity("35 Hz", FREQUENCY).unwrap(), 35.0);
        assert_eq!(parse_quantity("-30", ANGLE_DEG).unwrap(), -30.0);
        assert_relative_eq!(parse_quantity("90 deg", ANGLE).unwrap(), PI / 2.0, max_relative = 1e-15);
        assert_relative_eq!(parse_quantity("2e-4 s", TIME).unwrap(), 2e-4, max_relative = 1e-15);
        assert_relative_eq!(parse_quantity("0.2 ms", TIME).unwrap(), 2e-4, max_relative = 1e-15);
        assert!(parse_quantity("3 furlongs", LENGTH).is_err());
        assert!(parse_quantity("mm", LENGTH).is_err());
    }

    #[test]
    fn empty_file_is_default() {
        let c = Config::from_toml_str("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.sweep.f_axis.len() * c.sweep.theta_axis.len(), 195);
        assert_eq!(c.seed, None);
    }

    #[test]
    fn overrides_and_units() {
        let c = Config::from_toml_str(
            r#"
seed = 7
chirality = "uniform"
[design]
body_length = "200 mm"
leg_twist = "45 deg"
[errors]
friction = [0.5, 0.5, 0.5, 0.5]
m_mag = "10 g"
[integrator]
dt = "0.1 ms"
[sweep]
f_axis = { start = "-10 Hz", stop = "10 Hz", step = "10 Hz" }
theta_axis = ["0 deg", "0.5 rad"]
duration = "2 s"
[controller]
deadband = "5 deg"
three_state = true
[actuation_table]
left_turn = ["-25 Hz", "80 deg"]
[return_home]
disturbances = [{ t = "5 s", dx = "500 mm" }]
"#,
        )
        .unwrap();
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.robot.chirality, Chirality::Uniform);
        assert_relative_eq!(c.robot.design.body_length, 0.2, max_relative = 1e-15);
        assert_relative_eq!(c.robot.design.leg_twist, PI / 4.0, max_relative = 1e-15);
        assert_eq!(c.robot.errors.friction, [0.5; 4]);
        assert_relative_eq!(c.robot.errors.m_mag, 0.01, max_relative = 1e-15);
        assert_eq!(c.sweep.f_axis, vec![-10.0, 0.0, 10.0]);
        assert_relative_eq!(c.sweep.theta_axis[1], 0.5 * 180.0 / PI, max_relative = 1e-15);
        assert_relative_eq!(c.sweep.run.sim.dt, 1e-4, max_relative = 1e-15);
        assert!(c.controller.three_state);
        assert_eq!(c.actuation_table.left_turn, Pair::new(-25.0, 80.0));
        assert_eq!(c.return_home.disturbances[0].dx, 0.5);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(Config::from_toml_str("[design]\nbody_lenght = 1"), Err(Error::Config(_))));
        assert!(matches!(Config::from_toml_str("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(Config::from_toml_str("[design]\nbody_length = \"-5 mm\""), Err(Error::Config(_))));
        assert!(matches!(Config::from_toml_str("[integrator]\ndt = \"5 ms\""), Err(Error::Config(_))));
        assert!(matches!(Config::from_toml_str("[sweep]\nf_axis = [\"40 Hz\"]"), Err(Error::Config(_))));
    }

    #[test]
    fn hash_tracks_content() {
        let a = Config::from_toml_str("seed = 1").unwrap();
        let b = Config::from_toml_str("seed = 1\n[design]\nbody_length = \"220 mm\"").unwrap();
        let c = Config::from_toml_str("seed = 2").unwrap();
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        assert_ne!(a.hash().unwrap(), c.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }

    #[test]
    fn round_trip_through_json() {
        let c = Config::from_toml_str("seed = 3\n[design]\nleg_twist = \"60 deg\"").unwrap();
        let back: Config = serde_json::from_str(&c.canonical_json().unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
