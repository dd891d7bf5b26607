//! Reference data for calibration and its CSV form.
//!
//! Leg file columns: `t, angle_deg, px, py, pz, rx, ry, rz` (s, deg, m, rad).
//! Rotations are intrinsic XYZ angles of the tip frame relative to the
//! straight beam. Rows of one load angle must have increasing `t`.
//!
//! Robot file columns: `f_hz, theta_deg, vx, vy, w` (Hz, deg, m/s, m/s, rad/s),
//! body-frame averages.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::LegSeries;
use crate::model::{CellResult, SweepGrid, VelocitySummary};
use crate::{Error, Result};

pub const LEG_COLUMNS: [&str; 8] = ["t", "angle_deg", "px", "py", "pz", "rx", "ry", "rz"];
pub const ROBOT_COLUMNS: [&str; 5] = ["f_hz", "theta_deg", "vx", "vy", "w"];

/// Minimum samples per load-angle series.
pub const MIN_LEG_SAMPLES: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegReference {
    pub series: Vec<LegSeries>,
}

impl LegReference {
    pub fn new(series: Vec<LegSeries>) -> Result<Self> {
        let r = Self { series };
        r.validate()?;
        Ok(r)
    }

    pub fn angles(&self) -> Vec<f64> {
        self.series.iter().map(|s| s.angle_deg).collect()
    }

    pub fn get(&self, angle_deg: f64) -> Option<&LegSeries> {
        self.series.iter().find(|s| (s.angle_deg - angle_deg).abs() < 1e-9)
    }

    /// Common sample spacing (s).
    pub fn sample_interval(&self) -> f64 {
        let t = &self.series[0].t;
        (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64
    }

    pub fn duration(&self) -> f64 {
        self.series.iter().map(|s| s.t[s.t.len() - 1]).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.series.is_empty() {
            return Err(Error::invalid("leg reference has no series"));
        }
        let mut rate = None;
        for s in &self.series {
            if s.len() < MIN_LEG_SAMPLES {
                return Err(Error::invalid(format!("series at {} deg has {} samples, need >= {MIN_LEG_SAMPLES}", s.angle_deg, s.len())));
            }
            if s.position.len() != s.len() || s.rotation.len() != s.len() {
                return Err(Error::ShapeMismatch(format!("series at {} deg has ragged channels", s.angle_deg)));
            }
            if s.t.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::invalid(format!("series at {} deg: time is not increasing", s.angle_deg)));
            }
            let h = (s.t[s.len() - 1] - s.t[0]) / (s.len() - 1) as f64;
            match rate {
                None => rate = Some(h),
                Some(h0) if (h - h0).abs() > 1e-6 * h0 => {
                    return Err(Error::invalid(format!("series at {} deg samples every {h} s, others every {h0} s", s.angle_deg)))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotSample {
    pub f_hz: f64,
    pub theta_deg: f64,
    pub velocity: VelocitySummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotReference {
    pub samples: Vec<RobotSample>,
}

impl RobotReference {
    pub fn new(samples: Vec<RobotSample>) -> Result<Self> {
        let r = Self { samples };
        r.validate()?;
        Ok(r)
    }

    pub fn from_grid(grid: &SweepGrid) -> Result<Self> {
        let mut samples = Vec::with_capacity(grid.len());
        for (i, c) in grid.cells.iter().enumerate() {
            let (f_hz, theta_deg) = grid.point(i);
            match c {
                CellResult::Ok(v) => samples.push(RobotSample { f_hz, theta_deg, velocity: *v }),
                CellResult::Failed(e) => return Err(Error::invalid(format!("cell ({f_hz} Hz, {theta_deg} deg) failed: {e}"))),
            }
        }
        Self::new(samples)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::invalid("robot reference is empty"));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if !(s.f_hz.abs() <= 35.0) || !(s.theta_deg.abs() <= 90.0) {
                return Err(Error::invalid(format!("sample {i}: ({} Hz, {} deg) outside f in [-35, 35], theta in [-90, 90]", s.f_hz, s.theta_deg)));
            }
            if !s.velocity.is_finite() {
                return Err(Error::NonFinite("robot reference velocity"));
            }
        }
        Ok(())
    }

    /// Rebuilds a rectangular grid when the samples cover one.
    pub fn to_grid(&self) -> Result<SweepGrid> {
        let mut fs: Vec<f64> = self.samples.iter().map(|s| s.f_hz).collect();
        let mut ts: Vec<f64> = self.samples.iter().map(|s| s.theta_deg).collect();
        for v in [&mut fs, &mut ts] {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        let mut cells = vec![None; fs.len() * ts.len()];
        for s in &self.samples {
            let fi = fs.iter().position(|&v| v == s.f_hz).unwrap_or(0);
            let ti = ts.iter().position(|&v| v == s.theta_deg).unwrap_or(0);
            cells[fi * ts.len() + ti] = Some(CellResult::Ok(s.velocity));
        }
        if cells.iter().any(|c| c.is_none()) || self.samples.len() != cells.len() {
            return Err(Error::ShapeMismatch("robot reference is not a complete rectangular grid".into()));
        }
        SweepGrid::new(fs, ts, cells.into_iter().flatten().collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Reference {
    Leg(LegReference),
    Robot(RobotReference),
}

fn column_map(path: &Path, headers: &csv::StringRecord, wanted: &[&str]) -> Result<Vec<usize>> {
    wanted
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h.trim() == *c)
                .ok_or_else(|| Error::MissingColumn { path: path.to_path_buf(), column: (*c).to_string() })
        })
        .collect()
}

fn field(path: &Path, row: usize, rec: &csv::StringRecord, idx: usize, name: &str) -> Result<f64> {
    let raw = rec.get(idx).unwrap_or("").trim();
    let v: f64 = raw.parse().map_err(|_| Error::Schema { path: path.to_path_buf(), row, message: format!("column `{name}`: cannot parse `{raw}`") })?;
    if !v.is_finite() {
        return Err(Error::Schema { path: path.to_path_buf(), row, message: format!("column `{name}` is not finite") });
    }
    Ok(v)
}

/// Reads either reference kind; the header decides which. Row numbers in
/// errors count data rows from 1.
pub fn ingest_reference_csv(path: &Path) -> Result<Reference> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let has = |c: &str| headers.iter().any(|h| h.trim() == c);
    if has("angle_deg") || has("px") {
        let cols = column_map(path, &headers, &LEG_COLUMNS)?;
        let mut groups: BTreeMap<i64, LegSeries> = BTreeMap::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec?;
            let mut v = [0.0; 8];
            for (k, name) in LEG_COLUMNS.iter().enumerate() {
                v[k] = field(path, row, &rec, cols[k], name)?;
            }
            // angles are grouped on a millidegree key
            let key = (v[1] * 1000.0).round() as i64;
            let s = groups.entry(key).or_insert_with(|| LegSeries { angle_deg: v[1], t: Vec::new(), position: Vec::new(), rotation: Vec::new() });
            if let Some(&last) = s.t.last() {
                if !(v[0] > last) {
                    return Err(Error::Schema { path: path.to_path_buf(), row, message: format!("time {} does not increase (previous {last}) for angle {}", v[0], v[1]) });
                }
            }
            s.t.push(v[0]);
            s.position.push([v[2], v[3], v[4]]);
            s.rotation.push([v[5], v[6], v[7]]);
        }
        Ok(Reference::Leg(LegReference::new(groups.into_values().collect())?))
    } else {
        let cols = column_map(path, &headers, &ROBOT_COLUMNS)?;
        let mut samples = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec?;
            let mut v = [0.0; 5];
            for (k, name) in ROBOT_COLUMNS.iter().enumerate() {
                v[k] = field(path, row, &rec, cols[k], name)?;
            }
            if v[1].abs() > 90.0 {
                return Err(Error::Schema { path: path.to_path_buf(), row, message: format!("theta_deg {} outside [-90, 90]", v[1]) });
            }
            if v[0].abs() > 35.0 {
                return Err(Error::Schema { path: path.to_path_buf(), row, message: format!("f_hz {} outside [-35, 35]", v[0]) });
            }
            samples.push(RobotSample { f_hz: v[0], theta_deg: v[1], velocity: VelocitySummary::new(v[2], v[3], v[4]) });
        }
        Ok(Reference::Robot(RobotReference::new(samples)?))
    }
}

pub fn write_leg_reference<W: Write>(out: W, r: &LegReference) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LEG_COLUMNS)?;
    for s in &r.series {
        for i in 0..s.len() {
            let p = s.position[i];
            let q = s.rotation[i];
            w.serialize((s.t[i], s.angle_deg, p[0], p[1], p[2], q[0], q[1], q[2]))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_robot_reference<W: Write>(out: W, r: &RobotReference) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ROBOT_COLUMNS)?;
    for s in &r.samples {
        w.serialize((s.f_hz, s.theta_deg, s.velocity.vx, s.velocity.vy, s.velocity.w))?;
    }
    w.flush()?;
    Ok(())
}
