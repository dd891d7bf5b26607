//! Assembled quadruped: base plate with lumped electronics, four twisted
//! beam legs at the plate corners, and the shaker mounted at the body center.

use serde::{Deserialize, Serialize};

use crate::actuation::RotorGeometry;
use crate::math::{Mat3, Vec3};
use crate::model::{DesignParams, ErrorParams, Leg, LegStiffness, Pose};
use crate::scalar::Real;
use crate::{Error, Result};

use super::contact::ContactParams;
use super::leg::{build_leg, PrbmLeg, JOINTS_PER_LEG};
use super::multibody::{ContactSite, Multibody, TreeState};
use super::spatial::{RigidInertia, Transform};

/// Box-shaped mass lump rigidly fixed to the base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct Lump<S = f64> {
    pub label: String,
    pub mass: S,
    /// Center in body coordinates (m).
    pub center: Vec3<S>,
    pub size: Vec3<S>,
}

impl<S: Real> Lump<S> {
    pub fn point(label: impl Into<String>, mass: S, center: Vec3<S>) -> Self {
        Self { label: label.into(), mass, center, size: Vec3::zeros() }
    }

    fn inertia(&self) -> RigidInertia<S> {
        RigidInertia::solid_box(self.mass, self.center, self.size)
    }
}

/// Where the residual (non-plate, non-leg, non-rotor) mass sits. Weights are
/// normalized when the model is built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct ElectronicsLayout<S = f64> {
    pub slots: Vec<(String, S, Vec3<S>, Vec3<S>)>,
}

impl<S: Real> Default for ElectronicsLayout<S> {
    fn default() -> Self {
        let v = |x: f64, y: f64, z: f64| Vec3::from_f64(x, y, z);
        Self {
            slots: vec![
                ("battery".into(), S::lit(0.25), v(0.07, 0.0, 0.015), v(0.06, 0.035, 0.02)),
                ("controller".into(), S::lit(0.25), v(-0.075, 0.0, 0.01), v(0.04, 0.03, 0.012)),
                ("motor_cage".into(), S::lit(0.5), v(0.0, 0.0, 0.03), v(0.06, 0.06, 0.05)),
            ],
        }
    }
}

/// Sense of the leg twist at each corner.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chirality {
    /// Right legs are mirror images of left legs.
    #[default]
    MirrorLeftRight,
    /// All four legs twist the same way.
    Uniform,
}

/// Everything needed to assemble a robot. Serializable snapshot of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct RobotSpec<S = f64> {
    pub design: DesignParams<S>,
    pub stiffness: LegStiffness<S>,
    pub errors: ErrorParams<S>,
    pub contact: ContactParams<S>,
    pub electronics: ElectronicsLayout<S>,
    /// Extra masses (sensitivity variants).
    pub attachments: Vec<Lump<S>>,
    pub chirality: Chirality,
}

impl<S: Real> RobotSpec<S> {
    pub fn new(design: DesignParams<S>, stiffness: LegStiffness<S>, errors: ErrorParams<S>) -> Self {
        Self {
            design,
            stiffness,
            errors,
            contact: ContactParams::default(),
            electronics: ElectronicsLayout::default(),
            attachments: Vec::new(),
            chirality: Chirality::default(),
        }
    }
}

impl<S: Real> Default for RobotSpec<S> {
    fn default() -> Self {
        Self::new(DesignParams::default(), LegStiffness::baseline(), ErrorParams::identity())
    }
}

/// Immutable assembled robot.
#[derive(Clone, Debug, PartialEq)]
pub struct RobotModel<S = f64> {
    pub spec: RobotSpec<S>,
    pub tree: Multibody<S>,
    pub legs: [PrbmLeg<S>; 4],
    pub contacts: Vec<ContactSite<S>>,
    pub rotor: RotorGeometry<S>,
    /// Rotor-pair midpoint in body coordinates.
    pub rotor_offset: Vec3<S>,
    /// Lumped electronics mass after the budget.
    pub lumps: Vec<Lump<S>>,
    pub base_inertia: RigidInertia<S>,
}

/// Leg base placement on the plate. Legs hang straight down with their
/// thickness normal pointing sideways.
pub fn leg_mount<S: Real>(design: &DesignParams<S>, leg: Leg, chirality: Chirality) -> (Transform<S>, bool) {
    let sx = if leg.is_front() { S::one() } else { -S::one() };
    let sy = if leg.is_left() { S::one() } else { -S::one() };
    let pos = Vec3::new(
        sx * (design.body_length * S::half() - design.leg_width * S::half()),
        sy * (design.body_width * S::half() - design.leg_width * S::half()),
        -design.body_thickness * S::half(),
    );
    let mirrored = chirality == Chirality::MirrorLeftRight && !leg.is_left();
    let (x, y, z) = (Vec3::x_axis(), Vec3::y_axis(), Vec3::z_axis());
    let rot = if mirrored { Mat3::from_columns(-x, -z, -y) } else { Mat3::from_columns(x, -z, y) };
    (Transform::new(rot, pos), mirrored)
}

pub fn build_robot<S: Real>(design: &DesignParams<S>, stiffness: &LegStiffness<S>, errors: &ErrorParams<S>) -> Result<RobotModel<S>> {
    RobotModel::build(RobotSpec::new(design.clone(), *stiffness, errors.clone()))
}

impl<S: Real> RobotModel<S> {
    pub fn build(spec: RobotSpec<S>) -> Result<Self> {
        let d = &spec.design;
        d.validate()?;
        spec.stiffness.validate()?;
        spec.errors.validate()?;
        spec.contact.validate()?;

        let legs = Leg::ALL.map(|leg| build_leg(&spec.errors.leg_stiffness(&spec.stiffness, leg), d));
        let legs = match legs {
            [Ok(a), Ok(b), Ok(c), Ok(e)] => [a, b, c, e],
            [a, b, c, e] => {
                for r in [a, b, c, e] {
                    r?;
                }
                unreachable!()
            }
        };

        let leg_total = legs.iter().fold(S::zero(), |acc, l| acc + l.total_mass());
        let residual = d.total_mass - d.plate_mass - leg_total - S::two() * d.rotor_mass + spec.errors.m_mag;
        if !(residual >= S::zero()) {
            return Err(Error::MassBudget { residual: residual.to_f64_lossy() });
        }
        let weight_sum = spec.electronics.slots.iter().fold(S::zero(), |acc, s| acc + s.1);
        if !(weight_sum > S::zero()) && residual > S::zero() {
            return Err(Error::invalid("electronics layout needs positive weights"));
        }
        let lumps: Vec<Lump<S>> = spec
            .electronics
            .slots
            .iter()
            .map(|(label, w, c, size)| Lump { label: label.clone(), mass: residual * *w / weight_sum, center: *c, size: *size })
            .collect();

        let plate = RigidInertia::solid_box(d.plate_mass, Vec3::zeros(), Vec3::new(d.body_length, d.body_width, d.body_thickness));
        let mut base = lumps.iter().fold(plate, |acc, l| acc.add(&l.inertia()));
        base = base.translated(Vec3::new(spec.errors.m_x, spec.errors.m_y, S::zero()));
        for a in &spec.attachments {
            if !(a.mass >= S::zero()) {
                return Err(Error::invalid("attachment mass must be >= 0"));
            }
            base = base.add(&a.inertia());
        }

        let mut tree = Multibody {
            floating: true,
            root_inertia: base,
            bodies: Vec::with_capacity(4 * JOINTS_PER_LEG),
            gravity: Vec3::new(S::zero(), S::zero(), -d.gravity),
        };
        let mut contacts = Vec::with_capacity(4);
        for (leg, prbm) in Leg::ALL.iter().zip(legs.iter()) {
            let (mount, mirrored) = leg_mount(d, *leg, spec.chirality);
            let tip = prbm.attach(&mut tree, None, mount, mirrored);
            contacts.push(ContactSite { body: Some(tip), point: prbm.contact_point(), mu: spec.errors.friction[leg.index()] });
        }

        Ok(Self {
            rotor: RotorGeometry::from_design(d),
            rotor_offset: Vec3::new(S::zero(), S::zero(), d.rotor_height),
            spec,
            tree,
            legs,
            contacts,
            lumps,
            base_inertia: base,
        })
    }

    pub fn joint_count(&self) -> usize {
        self.tree.bodies.len()
    }

    /// Mass of all simulated bodies plus the two rotor masses.
    pub fn total_mass(&self) -> S {
        self.tree.total_mass() + S::two() * self.spec.design.rotor_mass
    }

    /// Center of mass of the simulated bodies at `q = 0`, body coordinates.
    pub fn center_of_mass(&self) -> Vec3<S> {
        let mut ws = self.tree.workspace();
        let q = vec![S::zero(); self.joint_count()];
        self.tree.kinematics(&mut ws, &Pose::identity(), &q);
        let mut h = self.tree.root_inertia.h;
        let mut m = self.tree.root_inertia.mass;
        for (i, b) in self.tree.bodies.iter().enumerate() {
            let x = self.tree.world_transform(&ws, Some(i));
            h += x.apply_point(&b.inertia.com()) * b.inertia.mass;
            m = m + b.inertia.mass;
        }
        h * (S::one() / m)
    }

    pub fn friction(&self) -> [S; 4] {
        [0, 1, 2, 3].map(|i| self.contacts[i].mu)
    }

    /// Per-leg effective coefficients.
    pub fn leg_stiffness(&self, leg: Leg) -> LegStiffness<S> {
        self.legs[leg.index()].stiffness
    }

    /// Base height at which the feet carry the static weight with straight legs.
    pub fn rest_height(&self) -> S {
        let d = &self.spec.design;
        let reach = d.body_thickness * S::half() + d.leg_length + d.foot_width;
        let weight = self.total_mass() * d.gravity;
        reach - weight / (S::lit(4.0) * self.spec.contact.stiffness)
    }

    /// Canonical initial state: straight legs, feet on the ground, at rest.
    pub fn rest_state(&self) -> TreeState<S> {
        let pose = Pose { position: Vec3::new(S::zero(), S::zero(), self.rest_height()), ..Pose::identity() };
        TreeState::at_rest(pose, self.joint_count())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_errors_give_identical_legs() {
        let r = RobotModel::<f64>::build(RobotSpec::default()).unwrap();
        for leg in Leg::ALL {
            assert_eq!(r.leg_stiffness(leg), LegStiffness::baseline());
        }
        assert_eq!(r.joint_count(), 24);
        assert_eq!(r.friction(), crate::model::DEFAULT_FRICTION);
    }

    #[test]
    fn total_mass_matches_budget() {
        let r = RobotModel::<f64>::build(RobotSpec::default()).unwrap();
        assert_relative_eq!(r.total_mass(), 0.350, max_relative = 1e-12);
    }

    #[test]
    fn scaled_bend_stiffness_on_one_leg() {
        let mut spec = RobotSpec::<f64>::default();
        spec.errors.k_bend[Leg::FrontLeft.index()] = 1.1;
        let r = RobotModel::build(spec).unwrap();
        assert_relative_eq!(r.leg_stiffness(Leg::FrontLeft).k_bend, 1.168279, max_relative = 1e-6);
        assert_eq!(r.leg_stiffness(Leg::FrontRight).k_bend, 1.062072);
    }

    #[test]
    fn mass_offset_moves_center_of_mass() {
        let a = RobotModel::<f64>::build(RobotSpec::default()).unwrap();
        let mut spec = RobotSpec::default();
        spec.errors.m_x = 0.01;
        let b = RobotModel::build(spec).unwrap();
        assert_relative_eq!(b.base_inertia.com().x - a.base_inertia.com().x, 0.01, max_relative = 1e-9);
    }

    #[test]
    fn negative_residual_is_rejected() {
        let mut spec = RobotSpec::<f64>::default();
        spec.errors.m_mag = -0.5;
        assert!(matches!(RobotModel::build(spec), Err(Error::MassBudget { .. })));
    }

    #[test]
    fn mirrored_mount_is_a_rotation() {
        let d = DesignParams::<f64>::default();
        for leg in Leg::ALL {
            let (m, _) = leg_mount(&d, leg, Chirality::MirrorLeftRight);
            assert_relative_eq!(m.rot.determinant(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn feet_touch_ground_at_rest() {
        let r = RobotModel::<f64>::build(RobotSpec::default()).unwrap();
        let st = r.rest_state();
        let mut ws = r.tree.workspace();
        for c in &r.contacts {
            let p = r.tree.point_position(&mut ws, &st, c.body, &c.point);
            assert!(p.z < 0.0 && p.z > -2e-4, "foot z {}", p.z);
        }
    }
}
