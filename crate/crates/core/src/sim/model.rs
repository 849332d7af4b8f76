use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of limbs: two arms at the front of the torso, two legs at the rear.
pub const LIMBS: usize = 4;
/// Two revolute joints per limb.
pub const JOINTS: usize = 8;

/// Planar rigid torso with four massless two-link limbs and penalty ground contact.
///
/// All quantities are SI: kg, m, N/m, N·s/m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotModel {
    pub body_mass: f64,
    pub body_length: f64,
    /// Radius of gyration of the torso about its centre, as a fraction of `body_length`.
    pub gyration_ratio: f64,
    /// Shoulder / hip to elbow / knee.
    pub upper_link: f64,
    /// Elbow / knee to hand / foot.
    pub lower_link: f64,
    pub gravity: f64,
    pub contact_stiffness: f64,
    pub contact_damping: f64,
    pub friction_coefficient: f64,
    /// Slope of the regularized (viscous, Coulomb-capped) tangential contact law.
    pub tangential_damping: f64,
    /// Friction scale for a hand or foot sliding forward over the ground,
    /// relative to sliding backward; 1 is isotropic.
    pub forward_slip_friction: f64,
}

impl Default for RobotModel {
    fn default() -> Self {
        RobotModel {
            body_mass: 10.0,
            body_length: 0.6,
            gyration_ratio: 0.35,
            upper_link: 0.18,
            lower_link: 0.18,
            gravity: 9.81,
            contact_stiffness: 2.0e4,
            contact_damping: 400.0,
            friction_coefficient: 0.8,
            tangential_damping: 1500.0,
            forward_slip_friction: 0.2,
        }
    }
}

impl RobotModel {
    pub fn weight(&self) -> f64 {
        self.body_mass * self.gravity
    }

    pub fn inertia(&self) -> f64 {
        let r = self.gyration_ratio * self.body_length;
        self.body_mass * r * r
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("body_mass", self.body_mass),
            ("body_length", self.body_length),
            ("gyration_ratio", self.gyration_ratio),
            ("upper_link", self.upper_link),
            ("lower_link", self.lower_link),
            ("gravity", self.gravity),
            ("contact_stiffness", self.contact_stiffness),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("robot.{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("contact_damping", self.contact_damping),
            ("friction_coefficient", self.friction_coefficient),
            ("tangential_damping", self.tangential_damping),
            ("forward_slip_friction", self.forward_slip_friction),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("robot.{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// How the per-step contact forces are reduced to the scalar safety measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForceMetric {
    /// Root-mean-square over the episode of the per-step summed normal force.
    /// Equals the supported weight at rest and grows with impact loading.
    #[default]
    RmsNormal,
    /// Time-mean of the summed contact force magnitudes (normal and tangential).
    MeanMagnitude,
    /// Time-mean of the summed normal forces only. By momentum balance this
    /// tends to the supported weight for any gait that starts and ends at rest.
    MeanNormal,
    /// Largest per-step summed normal force.
    Peak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Episode duration, s.
    pub episode: f64,
    /// Integration step, s.
    pub dt: f64,
    /// Initial interval excluded from the speed measurement, s.
    pub settle_time: f64,
    pub force_metric: ForceMetric,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            episode: 5.0,
            dt: 1e-3,
            settle_time: 1.0,
            force_metric: ForceMetric::default(),
        }
    }
}

impl SimConfig {
    pub fn steps(&self) -> usize {
        (self.episode / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.episode > 0.0) {
            return Err(Error::Config("sim.dt and sim.episode must be positive".into()));
        }
        if !(0.0..self.episode).contains(&self.settle_time) {
            return Err(Error::Config(
                "sim.settle_time must lie in [0, episode)".into(),
            ));
        }
        Ok(())
    }
}
