use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vibrowalk")).arg("--out-dir").arg(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

const QUICK: &str = r#"
seed = 11
[integrator]
dt = "1 ms"
[sweep]
duration = "0.3 s"
settle = "0.1 s"
"#;

#[test]
fn usage_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(d.path(), &[])), 2);
    assert_eq!(code(&run(d.path(), &["fly"])), 2);
    assert_eq!(code(&run(d.path(), &["simulate", "--f", "10"])), 2);
}

#[test]
fn config_errors_exit_3_with_record() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "bad.toml", "[design]\nbody_length = \"12 parsecs\"\n");
    let o = run(d.path(), &["--config", &cfg, "envelope"]);
    assert_eq!(code(&o), 3);
    let rec: serde_json::Value = serde_json::from_str(&read(d.path(), "error.json")).unwrap();
    assert_eq!(rec["kind"], "config");
    assert_eq!(rec["exit_code"], 3);

    let missing = d.path().join("nope.toml");
    assert_eq!(code(&run(d.path(), &["--config", missing.to_str().unwrap(), "envelope"])), 3);
}

#[test]
fn randomized_commands_need_a_seed() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["leg-identify", "--synthetic"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
}

#[test]
fn missing_reference_file_is_runtime_error() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["--seed", "1", "calibrate", "--reference", "/nonexistent/ref.csv"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn envelope_outputs_and_manifest() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["envelope", "--f", "10 Hz", "--theta", "30", "--samples", "360"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(d.path(), "envelope.csv");
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,f,theta,Fx,Fy,Fz,Tx,Ty,Tz");
    let peak = lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            v[3].hypot(v[4])
        })
        .fold(0.0, f64::max);
    assert!((peak - 2.6529).abs() < 1e-4, "{peak}");
    let m: serde_json::Value = serde_json::from_str(&read(d.path(), "envelope.manifest.json")).unwrap();
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn default_sweep_has_195_rows_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = write(a.path(), "quick.toml", QUICK);
    let o = run(a.path(), &["--config", &cfg, "sweep", "--out", "sweep.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(b.path(), &["--config", &cfg, "--jobs", "1", "sweep", "--out", "sweep.csv"]);
    assert_eq!(code(&o), 0);
    let sa = read(a.path(), "sweep.csv");
    assert_eq!(sa.lines().count(), 196);
    assert_eq!(sa, read(b.path(), "sweep.csv"));
    for c in ["vx", "vy", "w"] {
        assert_eq!(read(a.path(), &format!("heatmap_{c}.csv")), read(b.path(), &format!("heatmap_{c}.csv")));
    }
    let ma: serde_json::Value = serde_json::from_str(&read(a.path(), "sweep.manifest.json")).unwrap();
    let mb: serde_json::Value = serde_json::from_str(&read(b.path(), "sweep.manifest.json")).unwrap();
    assert_eq!(ma["config_hash"], mb["config_hash"]);
    assert_eq!(ma["outputs"][0]["sha256"], mb["outputs"][0]["sha256"]);
}

#[test]
fn sensitivity_then_indices_and_select() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "s.toml", &format!("{QUICK}f_axis = [\"-30 Hz\", \"30 Hz\"]\ntheta_axis = [0, 90]\n"));
    let o = run(d.path(), &["--config", &cfg, "sensitivity"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let idx = read(d.path(), "indices.csv");
    assert!(idx.starts_with("f_hz,theta_deg,direction,I_mass,I_friction,P,sign,excluded\n"));
    assert_eq!(idx.lines().count(), 1 + 4 * 3);
    assert!(read(d.path(), "p_map.csv").lines().next().unwrap().ends_with("excluded"));

    let e = tempfile::tempdir().unwrap();
    let o = run(e.path(), &["--config", &cfg, "indices", "--input", d.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(e.path(), "indices.csv"), idx);
    let o = run(e.path(), &["--config", &cfg, "select", "--input", d.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(read(e.path(), "selection.csv").starts_with("mode,rank,f_hz,theta_deg,score,P\n"));
}

#[test]
fn track_and_return_home_on_surrogate() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["track"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let ev = read(d.path(), "events.csv");
    assert_eq!(ev.lines().filter(|l| l.contains("waypoint_captured")).count(), 8);

    let cfg = write(
        d.path(),
        "r.toml",
        "[return_home]\nduration = \"120 s\"\ndisturbances = [{ t = \"5 s\", dx = \"0.5 m\" }, { t = \"40 s\", dy = \"-500 mm\" }, { t = \"80 s\", dx = -0.3, dy = 0.4 }]\n",
    );
    let o = run(d.path(), &["--config", &cfg, "return-home"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s: serde_json::Value = serde_json::from_str(&read(d.path(), "task_summary.json")).unwrap();
    assert_eq!(s["completed"], true);
    let ev = read(d.path(), "events.csv");
    assert!(ev.lines().any(|l| l.starts_with("5.0,disturbance,") && l.contains("magnitude=0.5")), "{ev}");
}

#[test]
fn simulate_writes_trajectory() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "q.toml", QUICK);
    let o = run(d.path(), &["--config", &cfg, "simulate", "--f", "-30", "--theta", "30 deg"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = read(d.path(), "trajectory.csv");
    assert!(t.starts_with("t,x,y,z,qw,qx,qy,qz,vx_body,vy_body,yaw_rate\n"));
    assert!(t.lines().count() > 20);
}
