//! Simulation, calibration and actuation analysis for a vibration-driven
//! compliant quadruped with twisted-beam legs.

pub mod actuation;
pub mod analysis;
pub mod calibration;
pub mod config;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod math;
pub mod model;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub use config::Config;
pub use control::{ActuationTable, ControllerConfig};
pub use model::{ActuationCommand, DesignParams, ErrorParams, LegStiffness, SweepGrid, VelocitySummary};

// Concrete aliases. Analysis, calibration and control run in f64.
pub type Vec3F64 = crate::math::Vec3<f64>;
pub type QuatF64 = crate::math::Quat<f64>;
pub type PoseF64 = crate::model::Pose<f64>;
pub type RobotSpecF64 = crate::dynamics::RobotSpec<f64>;
pub type RobotModelF64 = crate::dynamics::RobotModel<f64>;
pub type SimConfigF64 = crate::dynamics::SimConfig<f64>;
pub type TrajectoryF64 = crate::model::Trajectory<f64>;
pub type DesignParamsF64 = crate::model::DesignParams<f64>;
pub type LegStiffnessF64 = crate::model::LegStiffness<f64>;
pub type ErrorParamsF64 = crate::model::ErrorParams<f64>;
pub type ActuationCommandF64 = crate::model::ActuationCommand<f64>;
pub type SimulatorF64<'m> = crate::dynamics::Simulator<'m, f64>;

pub type Vec3F32 = crate::math::Vec3<f32>;
pub type QuatF32 = crate::math::Quat<f32>;
pub type PoseF32 = crate::model::Pose<f32>;
pub type RobotSpecF32 = crate::dynamics::RobotSpec<f32>;
pub type RobotModelF32 = crate::dynamics::RobotModel<f32>;
pub type SimConfigF32 = crate::dynamics::SimConfig<f32>;
pub type TrajectoryF32 = crate::model::Trajectory<f32>;
pub type DesignParamsF32 = crate::model::DesignParams<f32>;
pub type LegStiffnessF32 = crate::model::LegStiffness<f32>;
pub type ErrorParamsF32 = crate::model::ErrorParams<f32>;
pub type ActuationCommandF32 = crate::model::ActuationCommand<f32>;
pub type SimulatorF32<'m> = crate::dynamics::Simulator<'m, f32>;
