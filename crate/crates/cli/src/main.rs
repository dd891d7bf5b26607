//! `vibrowalk` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use vibrowalk::analysis::{classify_grid, indices_from_grids, make_variants, select_pairs, sensitivity, sweep, LocomotionMode, SensitivityResult};
use vibrowalk::actuation::RotorGeometry;
use vibrowalk::calibration::{
    calibrate_full, default_error_bounds, default_leg_bounds, identify_leg, ingest_reference_csv, synthetic_leg_reference, write_leg_reference,
    write_robot_reference, CalibrationReport, LegReference, OptBudget, Reference, RobotReference, LEG_LOAD_ANGLES,
};
use vibrowalk::control::{figure_eight_waypoints, return_to_origin, run_tracking, Plant, SimulatedRobot, TaskLog};
use vibrowalk::dynamics::{average_velocities, simulate, RobotModel};
use vibrowalk::export::{self, OutputFile, RunManifest};
use vibrowalk::model::{linear_axis, ActuationCommand, ErrorParams};
use vibrowalk::{Config, Error};

const EXIT_USAGE: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "vibrowalk", version, about = "Simulation, calibration and actuation analysis for a vibration-driven compliant quadruped")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for all outputs.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Integration step, e.g. `2e-4` or `0.2ms`.
    #[arg(long, global = true)]
    dt: Option<String>,
    /// Horizon of the command's runs, e.g. `8` or `8s`.
    #[arg(long, global = true)]
    duration: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Wrench over one rotor period and peak force against frequency.
    Envelope {
        #[arg(long, default_value = "10", allow_hyphen_values = true)]
        f: String,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        theta: String,
        #[arg(long, default_value_t = 360)]
        samples: usize,
    },
    /// One run of the full robot at a fixed command.
    Simulate {
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        #[arg(long, allow_hyphen_values = true)]
        theta: String,
    },
    /// Identifies the leg joint coefficients from release recordings.
    LegIdentify {
        /// Leg reference CSV (overrides the config).
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Generate the reference from the configured coefficients.
        #[arg(long, conflicts_with = "reference")]
        synthetic: bool,
    },
    /// Fits per-leg errors, friction and mass offsets to robot velocities.
    Calibrate {
        /// Robot reference CSV (overrides the config).
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Generate the reference from the configured robot and start the
        /// search from identity errors.
        #[arg(long, conflicts_with = "reference")]
        synthetic: bool,
    },
    /// Velocity map over the (f, theta) grid.
    Sweep {
        /// File name of the sweep table inside the output directory.
        #[arg(long, default_value = "sweep.csv")]
        out: String,
    },
    /// Sweeps the reference and all mass/friction variants, then indices.
    Sensitivity,
    /// Recomputes indices from the sweep tables of a sensitivity run.
    Indices {
        #[arg(long)]
        input: PathBuf,
    },
    /// Ranks actuation pairs per locomotion mode from a sensitivity run.
    Select {
        #[arg(long)]
        input: PathBuf,
    },
    /// Waypoint tracking with the switching controller.
    Track,
    /// Return to the origin with scheduled pushes.
    ReturnHome,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Envelope { .. } => "envelope",
            Command::Simulate { .. } => "simulate",
            Command::LegIdentify { .. } => "leg-identify",
            Command::Calibrate { .. } => "calibrate",
            Command::Sweep { .. } => "sweep",
            Command::Sensitivity => "sensitivity",
            Command::Indices { .. } => "indices",
            Command::Select { .. } => "select",
            Command::Track => "track",
            Command::ReturnHome => "return-home",
        }
    }
}

/// Failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Failure { code: EXIT_CONFIG, kind: "config", message: m },
            other => Failure { code: EXIT_RUNTIME, kind: "runtime", message: other.to_string() },
        }
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_CONFIG, kind: "config", message: message.into() }
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    command: &'a str,
    exit_code: u8,
    kind: &'a str,
    message: &'a str,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let name = cli.command.name();
    let started = now();
    match run(&cli) {
        Ok((cfg, outputs)) => match write_manifest(&cli, &cfg, started, outputs) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => report(&cli, name, e.into()),
        },
        Err(f) => report(&cli, name, f),
    }
}

fn report(cli: &Cli, name: &str, f: Failure) -> ExitCode {
    eprintln!("error ({}): {}", f.kind, f.message);
    let record = ErrorRecord { command: name, exit_code: f.code, kind: f.kind, message: &f.message };
    if std::fs::create_dir_all(&cli.global.out_dir).is_ok() {
        let _ = export::write_json(&cli.global.out_dir.join("error.json"), &record);
    }
    ExitCode::from(f.code)
}

fn write_manifest(cli: &Cli, cfg: &Config, started: String, outputs: Vec<PathBuf>) -> vibrowalk::Result<()> {
    let files = outputs.iter().map(|p| OutputFile::digest(p)).collect::<vibrowalk::Result<Vec<_>>>()?;
    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        command_line: std::env::args().collect(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.hash()?,
        seed: cfg.seed,
        started,
        finished: now(),
        outputs: files,
    };
    export::write_json(&cli.global.out_dir.join(format!("{}.manifest.json", cli.command.name())), &manifest)?;
    Ok(())
}

fn load_config(g: &Global) -> Result<Config, Failure> {
    let mut cfg = match &g.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = Some(s);
    }
    if let Some(dt) = &g.dt {
        let dt = vibrowalk::config::parse_quantity(dt, vibrowalk::config::TIME).map_err(|e| config_error(format!("--dt: {e}")))?;
        cfg.sweep.run.sim.dt = dt;
        cfg.leg_experiment.dt = dt;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn apply_duration(g: &Global, slot: &mut f64) -> Result<(), Failure> {
    if let Some(d) = &g.duration {
        let v = vibrowalk::config::parse_quantity(d, vibrowalk::config::TIME).map_err(|e| config_error(format!("--duration: {e}")))?;
        if !(v > 0.0) {
            return Err(config_error("--duration must be positive"));
        }
        *slot = v;
    }
    Ok(())
}

fn require_seed(cfg: &Config, command: &str) -> Result<u64, Failure> {
    cfg.seed.ok_or_else(|| config_error(format!("`{command}` is randomized and needs a seed (config `seed` or --seed)")))
}

fn pair(f: &str, theta: &str) -> Result<ActuationCommand<f64>, Failure> {
    use vibrowalk::config::{parse_quantity, ANGLE_DEG, FREQUENCY};
    let f = parse_quantity(f, FREQUENCY).map_err(|e| config_error(format!("--f: {e}")))?;
    let t = parse_quantity(theta, ANGLE_DEG).map_err(|e| config_error(format!("--theta: {e}")))?;
    Ok(ActuationCommand::from_degrees(f, t))
}

fn run(cli: &Cli) -> Result<(Config, Vec<PathBuf>), Failure> {
    let g = &cli.global;
    let mut cfg = load_config(g)?;
    if let Some(j) = g.jobs {
        if j == 0 {
            return Err(config_error("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().map_err(|e| Failure { code: EXIT_RUNTIME, kind: "runtime", message: e.to_string() })?;
    }
    let out = g.out_dir.clone();
    std::fs::create_dir_all(&out).map_err(Error::from)?;
    let mut files = Vec::new();

    match &cli.command {
        Command::Envelope { f, theta, samples } => {
            let cmd = pair(f, theta)?;
            cmd.validate(cfg.sweep.run.max_frequency)?;
            let geom = RotorGeometry::from_design(&cfg.robot.design);
            files.push(export::write_file(&out.join("envelope.csv"), |w| export::write_envelope(w, &cmd, &geom, *samples))?);
            let freqs = linear_axis(0.0, cfg.sweep.run.max_frequency, 0.5);
            files.push(export::write_file(&out.join("max_force.csv"), |w| export::write_max_force(w, &freqs, &geom))?);
        }
        Command::Simulate { f, theta } => {
            apply_duration(g, &mut cfg.sweep.run.duration)?;
            let cmd = pair(f, theta)?;
            cmd.validate(cfg.sweep.run.max_frequency)?;
            let model = RobotModel::build(cfg.robot.clone())?;
            let traj = simulate(&model, &cmd, cfg.sweep.run.duration, &cfg.sweep.run.sim)?;
            files.push(export::write_file(&out.join("trajectory.csv"), |w| export::write_trajectory(w, &traj))?);
            files.push(export::write_json(&out.join("robot_spec.json"), &cfg.robot)?);
            let summary = average_velocities(&traj, cfg.sweep.run.settle)?;
            files.push(export::write_json(&out.join("summary.json"), &summary)?);
        }
        Command::LegIdentify { reference, synthetic } => {
            apply_duration(g, &mut cfg.leg_experiment.duration)?;
            let seed = require_seed(&cfg, "leg-identify")?;
            let reference = if *synthetic {
                let r = synthetic_leg_reference(&cfg.robot.stiffness, &cfg.robot.design, &LEG_LOAD_ANGLES, &cfg.leg_experiment)?;
                files.push(export::write_file(&out.join("leg_reference.csv"), |w| write_leg_reference(w, &r))?);
                r
            } else {
                load_leg_reference(reference.as_deref().or(cfg.calibration.leg_reference.as_deref()))?
            };
            let bounds = default_leg_bounds();
            let budget = OptBudget::new(cfg.calibration.leg_evaluations, seed, bounds.clone());
            let fit = identify_leg(&reference, &cfg.robot.design, &cfg.leg_experiment, &cfg.calibration.leg_weights, &budget)?;
            let w = &cfg.calibration.leg_weights;
            let weights = w.position.iter().chain(&w.rotation).copied().collect();
            let report = CalibrationReport::new("leg", &bounds, &fit.result, weights, cfg.hash()?);
            files.push(export::write_file(&out.join("leg_report.txt"), |o| Ok(std::io::Write::write_all(o, report.to_text().as_bytes())?))?);
            files.push(export::write_json(&out.join("leg_fit.json"), &fit)?);
        }
        Command::Calibrate { reference, synthetic } => {
            apply_duration(g, &mut cfg.sweep.run.duration)?;
            let seed = require_seed(&cfg, "calibrate")?;
            let mut base = cfg.robot.clone();
            let reference = if *synthetic {
                let model = RobotModel::build(cfg.robot.clone())?;
                let grid = sweep(&model, &cfg.sweep.f_axis, &cfg.sweep.theta_axis, &cfg.sweep.run)?;
                let r = RobotReference::from_grid(&grid)?;
                files.push(export::write_file(&out.join("robot_reference.csv"), |w| write_robot_reference(w, &r))?);
                base.errors = ErrorParams::identity();
                r
            } else {
                load_robot_reference(reference.as_deref().or(cfg.calibration.robot_reference.as_deref()))?
            };
            let mode = cfg.calibration.friction_mode;
            let bounds = default_error_bounds(mode);
            let budget = OptBudget::new(cfg.calibration.full_evaluations, seed, bounds.clone());
            let fit = calibrate_full(&reference, &base, &cfg.full_run(), mode, &budget)?;
            let report = CalibrationReport::new("robot", &bounds, &fit.result, cfg.calibration.velocity_weights.0.to_vec(), cfg.hash()?);
            files.push(export::write_file(&out.join("robot_report.txt"), |o| Ok(std::io::Write::write_all(o, report.to_text().as_bytes())?))?);
            files.push(export::write_json(&out.join("robot_fit.json"), &fit)?);
        }
        Command::Sweep { out: name } => {
            apply_duration(g, &mut cfg.sweep.run.duration)?;
            if Path::new(name).components().count() != 1 {
                return Err(config_error("--out must be a plain file name"));
            }
            let model = RobotModel::build(cfg.robot.clone())?;
            let grid = sweep(&model, &cfg.sweep.f_axis, &cfg.sweep.theta_axis, &cfg.sweep.run)?;
            files.push(export::write_file(&out.join(name), |w| export::write_sweep(w, &grid, &cfg.thresholds))?);
            files.extend(export::emit_plot_data(&out, &grid, None)?);
            files.push(export::write_json(&out.join("mode_counts.json"), &mode_counts(&grid, &cfg))?);
        }
        Command::Sensitivity => {
            apply_duration(g, &mut cfg.sweep.run.duration)?;
            let variants = make_variants(&cfg.robot, &cfg.variants)?;
            let res = sensitivity(&variants, &cfg.sweep.f_axis, &cfg.sweep.theta_axis, &cfg.sweep.run, &cfg.index_cap, &cfg.robustness)?;
            for (label, grid) in res.labels.iter().zip(&res.grids) {
                files.push(export::write_file(&out.join(format!("sweep_{label}.csv")), |w| export::write_sweep(w, grid, &cfg.thresholds))?);
            }
            files.extend(write_index_outputs(&out, &res, &cfg)?);
        }
        Command::Indices { input } | Command::Select { input } => {
            let res = load_sensitivity(input, &cfg)?;
            if matches!(cli.command, Command::Indices { .. }) {
                files.extend(write_index_outputs(&out, &res, &cfg)?);
            } else {
                let sel = select_pairs(&res.index_grid, &cfg.selection);
                files.push(export::write_file(&out.join("selection.csv"), |w| export::write_selection(w, &sel))?);
            }
        }
        Command::Track => {
            apply_duration(g, &mut cfg.track.duration)?;
            let t = &cfg.track;
            let waypoints = if t.waypoints.is_empty() {
                figure_eight_waypoints(t.figure_eight.center, t.figure_eight.lobe_radius, t.figure_eight.count)?
            } else {
                t.waypoints.clone()
            };
            let log = with_plant(&cfg, |p| run_tracking(p, &waypoints, &cfg.controller, &cfg.actuation_table, t.duration))?;
            files.extend(write_task(&out, &log)?);
        }
        Command::ReturnHome => {
            apply_duration(g, &mut cfg.return_home.duration)?;
            let r = &cfg.return_home;
            let log = with_plant(&cfg, |p| return_to_origin(p, r.origin, &cfg.controller, &cfg.actuation_table, &r.disturbances, r.duration))?;
            files.extend(write_task(&out, &log)?);
        }
    }
    Ok((cfg, files))
}

fn with_plant(cfg: &Config, f: impl Fn(&mut dyn Plant) -> vibrowalk::Result<TaskLog>) -> vibrowalk::Result<TaskLog> {
    match cfg.plant {
        vibrowalk::config::PlantKind::Surrogate => f(&mut cfg.unicycle()),
        vibrowalk::config::PlantKind::Full => {
            let model = RobotModel::build(cfg.robot.clone())?;
            let mut p = SimulatedRobot::new(&model, cfg.sweep.run.sim)?;
            f(&mut p)
        }
    }
}

fn write_task(out: &Path, log: &TaskLog) -> vibrowalk::Result<Vec<PathBuf>> {
    Ok(vec![
        export::write_file(&out.join("control_trajectory.csv"), |w| export::write_control_trajectory(w, log))?,
        export::write_file(&out.join("events.csv"), |w| export::write_events(w, &log.events))?,
        export::write_json(
            &out.join("task_summary.json"),
            &serde_json::json!({
                "captured": log.captured,
                "completed": log.completed,
                "completion_time": log.completion_time,
                "final_distance": log.final_distance,
            }),
        )?,
    ])
}

fn write_index_outputs(out: &Path, res: &SensitivityResult, cfg: &Config) -> vibrowalk::Result<Vec<PathBuf>> {
    let mut files = vec![export::write_file(&out.join("indices.csv"), |w| export::write_indices(w, &res.index_grid))?];
    files.extend(export::emit_plot_data(out, &res.grids[0], Some(&res.index_grid))?);
    let sel = select_pairs(&res.index_grid, &cfg.selection);
    files.push(export::write_file(&out.join("selection.csv"), |w| export::write_selection(w, &sel))?);
    Ok(files)
}

/// Reads `sweep_<label>.csv` for the reference and every configured variant.
fn load_sensitivity(dir: &Path, cfg: &Config) -> vibrowalk::Result<SensitivityResult> {
    let variants = make_variants(&cfg.robot, &cfg.variants)?;
    let labels: Vec<String> = variants.all().iter().map(|v| v.label.clone()).collect();
    let grids = labels.iter().map(|l| export::read_sweep(&dir.join(format!("sweep_{l}.csv")))).collect::<vibrowalk::Result<Vec<_>>>()?;
    indices_from_grids(labels, grids, variants.mass.len(), &cfg.index_cap, &cfg.robustness)
}

fn mode_counts(grid: &vibrowalk::SweepGrid, cfg: &Config) -> serde_json::Value {
    let labels = classify_grid(grid, &cfg.thresholds);
    let mut m = serde_json::Map::new();
    for mode in LocomotionMode::ALL {
        m.insert(mode.name().into(), labels.iter().filter(|l| **l == Some(mode)).count().into());
    }
    m.insert("failed".into(), labels.iter().filter(|l| l.is_none()).count().into());
    serde_json::Value::Object(m)
}

fn load_leg_reference(path: Option<&Path>) -> Result<LegReference, Failure> {
    let path = path.ok_or_else(|| config_error("no leg reference: pass --reference, --synthetic or set calibration.leg_reference"))?;
    match ingest_reference_csv(path)? {
        Reference::Leg(r) => Ok(r),
        Reference::Robot(_) => Err(Failure { code: EXIT_RUNTIME, kind: "runtime", message: format!("{} holds a robot reference, expected leg recordings", path.display()) }),
    }
}

fn load_robot_reference(path: Option<&Path>) -> Result<RobotReference, Failure> {
    let path = path.ok_or_else(|| config_error("no robot reference: pass --reference, --synthetic or set calibration.robot_reference"))?;
    match ingest_reference_csv(path)? {
        Reference::Robot(r) => Ok(r),
        Reference::Leg(_) => Err(Failure { code: EXIT_RUNTIME, kind: "runtime", message: format!("{} holds leg recordings, expected a robot reference", path.display()) }),
    }
}
