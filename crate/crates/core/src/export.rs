//! CSV and JSON outputs. Floats are written in shortest round-trip form, so
//! equal inputs give byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::actuation::{envelope, max_force, RotorGeometry};
use crate::analysis::{classify_mode, IndexGrid, ModeSelection, ModeThresholds};
use crate::config::hex_digest;
use crate::control::{Event, TaskLog};
use crate::model::{ActuationCommand, CellResult, Direction, SweepGrid, Trajectory};
use crate::{Error, Result};

pub const SWEEP_COLUMNS: [&str; 7] = ["f_hz", "theta_deg", "vx", "vy", "w", "mode", "status"];
pub const INDEX_COLUMNS: [&str; 8] = ["f_hz", "theta_deg", "direction", "I_mass", "I_friction", "P", "sign", "excluded"];
pub const PMAP_COLUMNS: [&str; 5] = ["f_hz", "theta_deg", "direction", "P", "excluded"];
pub const SELECTION_COLUMNS: [&str; 6] = ["mode", "rank", "f_hz", "theta_deg", "score", "P"];
pub const TRAJECTORY_COLUMNS: [&str; 11] = ["t", "x", "y", "z", "qw", "qx", "qy", "qz", "vx_body", "vy_body", "yaw_rate"];
pub const CONTROL_COLUMNS: [&str; 6] = ["t", "x", "y", "yaw", "heading_error", "state"];
pub const EVENT_COLUMNS: [&str; 3] = ["t", "type", "payload"];
pub const ENVELOPE_COLUMNS: [&str; 9] = ["t", "f", "theta", "Fx", "Fy", "Fz", "Tx", "Ty", "Tz"];
pub const MAX_FORCE_COLUMNS: [&str; 2] = ["f_hz", "max_force"];
pub const HEATMAP_COLUMNS: [&str; 3] = ["f_hz", "theta_deg", "value"];

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_sweep<W: Write>(out: W, grid: &SweepGrid, th: &ModeThresholds) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_COLUMNS)?;
    for (i, c) in grid.cells.iter().enumerate() {
        let (f, t) = grid.point(i);
        match c {
            CellResult::Ok(s) => w.serialize((f, t, s.vx, s.vy, s.w, classify_mode(s, th).name(), "ok"))?,
            CellResult::Failed(e) => w.serialize((f, t, "", "", "", "", format!("failed: {e}")))?,
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_sweep`].
pub fn read_sweep(path: &Path) -> Result<SweepGrid> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != SWEEP_COLUMNS {
        return Err(Error::Schema { path: path.to_path_buf(), row: 0, message: format!("expected header {SWEEP_COLUMNS:?}") });
    }
    let mut points = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec[k].parse().map_err(|_| Error::Schema { path: path.to_path_buf(), row: i + 1, message: format!("column `{}`: cannot parse `{}`", SWEEP_COLUMNS[k], &rec[k]) })
        };
        let cell = if &rec[6] == "ok" {
            CellResult::Ok(crate::model::VelocitySummary::new(num(2)?, num(3)?, num(4)?))
        } else {
            CellResult::Failed(rec[6].trim_start_matches("failed: ").to_string())
        };
        points.push((num(0)?, num(1)?, cell));
    }
    let mut fs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let mut ts: Vec<f64> = points.iter().map(|p| p.1).collect();
    for v in [&mut fs, &mut ts] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    if fs.len() * ts.len() != points.len() {
        return Err(Error::ShapeMismatch(format!("{}: rows do not form a complete grid", path.display())));
    }
    let mut cells = vec![CellResult::Failed(String::new()); points.len()];
    for (f, t, c) in points {
        let fi = fs.iter().position(|&v| v == f).unwrap();
        let ti = ts.iter().position(|&v| v == t).unwrap();
        cells[fi * ts.len() + ti] = c;
    }
    SweepGrid::new(fs, ts, cells)
}

pub fn write_indices<W: Write>(out: W, grid: &IndexGrid) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(INDEX_COLUMNS)?;
    for (i, c) in grid.cells.iter().enumerate() {
        let (f, t) = grid.point(i);
        for (d, e) in Direction::ALL.iter().zip(&c.directions) {
            w.serialize((f, t, d.name(), opt(e.i_mass), opt(e.i_friction), opt(e.p), e.sign, c.excluded.as_deref().unwrap_or("")))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Robustness map with its exclusion mask.
pub fn write_p_map<W: Write>(out: W, grid: &IndexGrid) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PMAP_COLUMNS)?;
    for (i, c) in grid.cells.iter().enumerate() {
        let (f, t) = grid.point(i);
        for (d, e) in Direction::ALL.iter().zip(&c.directions) {
            w.serialize((f, t, d.name(), opt(e.p), c.excluded.is_some()))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_selection<W: Write>(out: W, sel: &[ModeSelection]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SELECTION_COLUMNS)?;
    for m in sel {
        for (rank, p) in m.picks.iter().enumerate() {
            w.serialize((m.mode.name(), rank + 1, p.f_hz, p.theta_deg, p.score, p.p))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory<W: Write>(out: W, traj: &Trajectory<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_COLUMNS)?;
    for s in &traj.samples {
        let (p, q) = (s.pose.position, s.pose.orientation);
        w.serialize((s.t, p.x, p.y, p.z, q.w, q.x, q.y, q.z, s.vx_body, s.vy_body, s.yaw_rate))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_control_trajectory<W: Write>(out: W, log: &TaskLog) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CONTROL_COLUMNS)?;
    for s in &log.samples {
        w.serialize((s.t, s.pose.x, s.pose.y, s.pose.yaw, opt(s.error), s.state.name()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_events<W: Write>(out: W, events: &[Event]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EVENT_COLUMNS)?;
    for e in events {
        w.serialize((e.t, e.kind.name(), e.kind.payload()))?;
    }
    w.flush()?;
    Ok(())
}

/// Closed-form wrench over one period, `n` samples.
pub fn write_envelope<W: Write>(out: W, cmd: &ActuationCommand<f64>, geom: &RotorGeometry<f64>, n: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ENVELOPE_COLUMNS)?;
    for s in envelope(cmd, geom, n) {
        let (f, t) = (s.wrench.force, s.wrench.torque);
        w.serialize((s.t, cmd.frequency, cmd.theta_deg(), f.x, f.y, f.z, t.x, t.y, t.z))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_max_force<W: Write>(out: W, freqs: &[f64], geom: &RotorGeometry<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MAX_FORCE_COLUMNS)?;
    for &f in freqs {
        w.serialize((f, max_force(f, geom)))?;
    }
    w.flush()?;
    Ok(())
}

/// One long-format file per velocity channel: `heatmap_vx.csv`,
/// `heatmap_vy.csv`, `heatmap_w.csv`.
pub fn write_heatmaps(dir: &Path, grid: &SweepGrid) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for (name, d) in [("vx", Direction::Longitudinal), ("vy", Direction::Lateral), ("w", Direction::Turning)] {
        let path = dir.join(format!("heatmap_{name}.csv"));
        let mut w = csv::Writer::from_writer(create(&path)?);
        w.write_record(HEATMAP_COLUMNS)?;
        for (i, c) in grid.cells.iter().enumerate() {
            let (f, t) = grid.point(i);
            w.serialize((f, t, opt(c.summary().map(|s| s.channel(d)))))?;
        }
        w.flush()?;
        files.push(path);
    }
    Ok(files)
}

/// Plotting inputs: the three velocity heatmaps and, when given, the
/// robustness map.
pub fn emit_plot_data(dir: &Path, grid: &SweepGrid, index: Option<&IndexGrid>) -> Result<Vec<PathBuf>> {
    let mut files = write_heatmaps(dir, grid)?;
    if let Some(ix) = index {
        let path = dir.join("p_map.csv");
        write_p_map(create(&path)?, ix)?;
        files.push(path);
    }
    Ok(files)
}

pub fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<PathBuf> {
    let mut out = create(path)?;
    f(&mut out)?;
    out.flush()?;
    Ok(path.to_path_buf())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub sha256: String,
}

impl OutputFile {
    pub fn digest(path: &Path) -> Result<Self> {
        Ok(Self { path: path.to_path_buf(), sha256: hex_digest(&std::fs::read(path)?) })
    }
}

/// Record of one command run. Everything except the timestamps is a
/// function of the inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub command_line: Vec<String>,
    pub tool_version: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<OutputFile>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VelocitySummary;

    fn grid() -> SweepGrid {
        let cells = vec![
            CellResult::Ok(VelocitySummary::new(0.1, 0.0, 0.0)),
            CellResult::Ok(VelocitySummary::new(0.0, 0.0, -0.9)),
            CellResult::Failed("diverged".into()),
            CellResult::Ok(VelocitySummary::new(0.0, 0.05, 0.0)),
        ];
        SweepGrid::new(vec![-5.0, 5.0], vec![0.0, 30.0], cells).unwrap()
    }

    #[test]
    fn sweep_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_sweep(File::create(&p).unwrap(), &grid(), &ModeThresholds::default()).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("f_hz,theta_deg,vx,vy,w,mode,status\n"));
        assert!(text.contains("right_turn"));
        assert_eq!(read_sweep(&p).unwrap(), grid());
    }

    #[test]
    fn three_heatmaps() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_plot_data(dir.path(), &grid(), None).unwrap();
        assert_eq!(files.len(), 3);
        let vx = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(vx.lines().count(), 5);
    }

    #[test]
    fn envelope_peak_at_10_hz() {
        let mut buf = Vec::new();
        let g = RotorGeometry::default();
        write_envelope(&mut buf, &ActuationCommand::from_degrees(10.0, 0.0), &g, 360).unwrap();
        let mut rdr = csv::Reader::from_reader(buf.as_slice());
        let peak = rdr
            .records()
            .map(|r| {
                let r = r.unwrap();
                let fx: f64 = r[3].parse().unwrap();
                let fy: f64 = r[4].parse().unwrap();
                fx.hypot(fy)
            })
            .fold(0.0, f64::max);
        let oracle = 2.0 * 0.012 * (2.0 * std::f64::consts::PI * 10.0f64).powi(2) * 0.028;
        assert!((peak - oracle).abs() < 1e-9 * oracle);
        assert!((peak - 2.6529).abs() < 1e-4);
    }
}
