//! Time stepping of the assembled robot under the shaker wrench.

use serde::{Deserialize, Serialize};

use crate::actuation::wrench_at_phase;
use crate::model::{body_frame_velocity, ActuationCommand, SimState, Trajectory};
use crate::scalar::Real;
use crate::{Error, Result};

use super::multibody::{TreeState, Workspace};
use super::robot::RobotModel;
use super::spatial::{Force, Motion};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct SimConfig<S = f64> {
    /// Integration step (s), at most 1e-3.
    pub dt: S,
    /// Trajectory sample interval (s); rounded to a whole number of steps.
    pub sample_interval: S,
    /// First-order motor time constant (s); `None` for instantaneous spin-up.
    pub motor_lag: Option<S>,
    /// Generalized speed above which a run is declared diverged.
    pub divergence_limit: S,
}

impl<S: Real> Default for SimConfig<S> {
    fn default() -> Self {
        Self { dt: S::lit(2e-4), sample_interval: S::lit(0.01), motor_lag: None, divergence_limit: S::lit(1e4) }
    }
}

impl<S: Real> SimConfig<S> {
    pub fn with_dt(dt: S) -> Self {
        Self { dt, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > S::zero() && self.dt <= S::lit(1e-3)) {
            return Err(Error::invalid(format!("dt must lie in (0, 1e-3], got {}", self.dt)));
        }
        if !(self.sample_interval >= self.dt) || !self.sample_interval.is_finite() {
            return Err(Error::invalid("sample interval must be >= dt"));
        }
        if let Some(tau) = self.motor_lag {
            if !(tau > S::zero()) {
                return Err(Error::invalid("motor lag must be positive"));
            }
        }
        Ok(())
    }

    pub fn steps_per_sample(&self) -> usize {
        (self.sample_interval / self.dt).round().to_usize().unwrap_or(1).max(1)
    }
}

/// Owns the mutable state of one run over a shared model.
pub struct Simulator<'m, S: Real = f64> {
    model: &'m RobotModel<S>,
    cfg: SimConfig<S>,
    ws: Workspace<S>,
    state: TreeState<S>,
    steps: u64,
    rotor_phase: S,
    rotor_rate: S,
}

impl<'m, S: Real> Simulator<'m, S> {
    /// Starts from the model's canonical rest pose.
    pub fn new(model: &'m RobotModel<S>, cfg: SimConfig<S>) -> Result<Self> {
        Self::from_state(model, cfg, model.rest_state())
    }

    pub fn from_state(model: &'m RobotModel<S>, cfg: SimConfig<S>, state: TreeState<S>) -> Result<Self> {
        cfg.validate()?;
        if state.q.len() != model.joint_count() || state.qd.len() != model.joint_count() {
            return Err(Error::ShapeMismatch(format!("state has {} joints, model {}", state.q.len(), model.joint_count())));
        }
        Ok(Self { model, cfg, ws: model.tree.workspace(), state, steps: 0, rotor_phase: S::zero(), rotor_rate: S::zero() })
    }

    pub fn time(&self) -> S {
        S::lit(self.steps as f64) * self.cfg.dt
    }

    pub fn tree_state(&self) -> &TreeState<S> {
        &self.state
    }

    /// Mutable access for externally imposed displacements.
    pub fn tree_state_mut(&mut self) -> &mut TreeState<S> {
        &mut self.state
    }

    pub fn config(&self) -> &SimConfig<S> {
        &self.cfg
    }

    pub fn state(&self) -> SimState<S> {
        SimState {
            t: self.time(),
            pose: self.state.root_pose,
            linear_velocity: self.state.root_velocity.lin,
            angular_velocity: self.state.root_velocity.ang,
            q: self.state.q.clone(),
            qd: self.state.qd.clone(),
            rotor_phase: self.rotor_phase,
            rotor_rate: self.rotor_rate,
        }
    }

    /// Latest per-foot contact forces (world frame).
    pub fn contact_forces(&self) -> &[crate::math::Vec3<S>] {
        &self.ws.contact_forces
    }

    /// Advances one step with the shaker driven by `cmd`.
    pub fn step(&mut self, cmd: &ActuationCommand<S>) -> Result<()> {
        let dt = self.cfg.dt;
        let target = cmd.rotor_rate();
        if self.steps == 0 && self.cfg.motor_lag.is_none() {
            self.rotor_rate = target;
        }
        match self.cfg.motor_lag {
            None => self.rotor_rate = target,
            Some(tau) => self.rotor_rate = self.rotor_rate + (target - self.rotor_rate) * (S::one() - (-dt / tau).exp()),
        }
        let w = wrench_at_phase(self.rotor_phase, self.rotor_rate, cmd.theta, &self.model.rotor);
        let r = self.model.rotor_offset;
        let wrench = Force { ang: w.torque + r.cross(&w.force), lin: w.force };
        let m = self.model;
        let ok = m.tree.step(&mut self.ws, &mut self.state, Some(&wrench), &[], &m.contacts, &m.spec.contact, dt);
        self.steps += 1;
        self.rotor_phase = self.rotor_phase + self.rotor_rate * dt;
        // keep the phase bounded so long runs lose no precision
        let two_pi = S::two() * S::PI();
        if self.rotor_phase.abs() > two_pi {
            self.rotor_phase = self.rotor_phase % two_pi;
        }
        if !ok {
            return Err(self.divergence("system matrix lost positive definiteness"));
        }
        self.check()
    }

    fn check(&self) -> Result<()> {
        let lim = self.cfg.divergence_limit;
        let v = &self.state.root_velocity;
        let speeds = v.ang.to_array().into_iter().chain(v.lin.to_array()).chain(self.state.qd.iter().copied());
        for s in speeds {
            if !s.is_finite() || s.abs() > lim {
                return Err(self.divergence(&format!("generalized speed {s} exceeds {lim}")));
            }
        }
        if !self.state.root_pose.position.is_finite() || !self.state.q.iter().all(|q| q.is_finite()) {
            return Err(self.divergence("non-finite coordinates"));
        }
        Ok(())
    }

    fn divergence(&self, reason: &str) -> Error {
        Error::Divergence { time: self.time().to_f64_lossy(), reason: reason.to_string() }
    }

    pub fn record(&self, traj: &mut Trajectory<S>) -> Result<()> {
        let st = &self.state;
        let world = st.root_pose.orientation.rotate(&st.root_velocity.lin);
        let body = body_frame_velocity(&st.root_pose, world)?;
        let yaw_rate = st.root_pose.orientation.rotate(&st.root_velocity.ang).z;
        traj.push(self.time(), st.root_pose, body.x, body.y, yaw_rate);
        Ok(())
    }

    /// Runs `steps` steps with a constant command, recording every sample.
    pub fn run(&mut self, cmd: &ActuationCommand<S>, steps: usize, traj: Option<&mut Trajectory<S>>) -> Result<()> {
        let per = self.cfg.steps_per_sample() as u64;
        match traj {
            Some(t) => {
                for _ in 0..steps {
                    self.step(cmd)?;
                    if self.steps % per == 0 {
                        self.record(t)?;
                    }
                }
            }
            None => {
                for _ in 0..steps {
                    self.step(cmd)?;
                }
            }
        }
        Ok(())
    }

    /// Current base velocity as a spatial motion (base coordinates).
    pub fn base_velocity(&self) -> Motion<S> {
        self.state.root_velocity
    }
}

/// Simulates `duration` seconds from the rest pose with a constant command.
pub fn simulate<S: Real>(model: &RobotModel<S>, cmd: &ActuationCommand<S>, duration: S, cfg: &SimConfig<S>) -> Result<Trajectory<S>> {
    if !(duration > S::zero()) || !duration.is_finite() {
        return Err(Error::invalid("duration must be positive"));
    }
    let mut sim = Simulator::new(model, *cfg)?;
    let steps = (duration / cfg.dt).round().to_usize().ok_or_else(|| Error::invalid("duration overflow"))?;
    let per = cfg.steps_per_sample();
    let mut traj = Trajectory::new(S::lit(per as f64) * cfg.dt);
    traj.samples.reserve(steps / per + 1);
    sim.record(&mut traj)?;
    sim.run(cmd, steps, Some(&mut traj))?;
    Ok(traj)
}
