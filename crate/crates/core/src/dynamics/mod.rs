//! Articulated rigid-body engine and the robot assembled from it.

pub mod contact;
pub mod leg;
pub mod multibody;
pub mod rig;
pub mod robot;
pub mod sim;
pub mod spatial;
pub mod velocity;

pub use contact::{contact_force, linearize_contact, ContactParams, PointState};
pub use leg::{build_leg, joint_torque, PrbmLeg};
pub use multibody::{ContactSite, Multibody, PointLoad, TreeState};
pub use rig::{LegExperimentConfig, LegRig, LegSeries};
pub use robot::{build_robot, Chirality, ElectronicsLayout, Lump, RobotModel, RobotSpec};
pub use sim::{simulate, SimConfig, Simulator};
pub use velocity::{average_velocities, DEFAULT_SETTLE};
