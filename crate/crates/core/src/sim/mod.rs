//! Deterministic reduced-order crawling robot.
//!
//! A planar torso carries two arms (front) and two legs (rear), each a
//! massless two-link chain whose joints track open-loop sinusoids. Hands,
//! feet and both torso ends interact with flat ground through a
//! spring-damper normal force and a Coulomb-capped viscous tangential force.
//! Integration is fixed-step semi-implicit Euler.

mod controller;
mod damage;
mod engine;
mod model;

pub use controller::{ControllerParams, ControllerRanges};
pub use damage::{
    DamageCondition, DamageSpec, JointLock, ARM1_ELBOW, ARM1_SHOULDER, ARM2_ELBOW, ARM2_SHOULDER,
    LEG1_HIP, LEG1_KNEE, LEG2_HIP, LEG2_KNEE,
};
pub use engine::{SimResult, Simulator, TraceRow};
pub use model::{ForceMetric, RobotModel, SimConfig, JOINTS, LIMBS};
