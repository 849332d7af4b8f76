use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::JOINTS;
use crate::error::{Error, Result};

pub const ARM1_SHOULDER: usize = 0;
pub const ARM1_ELBOW: usize = 1;
pub const ARM2_SHOULDER: usize = 2;
pub const ARM2_ELBOW: usize = 3;
pub const LEG1_HIP: usize = 4;
pub const LEG1_KNEE: usize = 5;
pub const LEG2_HIP: usize = 6;
pub const LEG2_KNEE: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLock {
    pub joint: usize,
    /// rad
    pub angle: f64,
}

/// Set of locked joints. A locked joint holds its lock angle for the whole episode.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DamageSpec {
    locks: Vec<JointLock>,
}

impl DamageSpec {
    pub fn none() -> Self {
        DamageSpec::default()
    }

    pub fn new(locks: Vec<JointLock>) -> Result<Self> {
        let mut seen = [false; JOINTS];
        for l in &locks {
            if l.joint >= JOINTS {
                return Err(Error::InvalidInput(format!("joint id {} out of range", l.joint)));
            }
            if seen[l.joint] {
                return Err(Error::InvalidInput(format!("joint {} locked twice", l.joint)));
            }
            if !l.angle.is_finite() {
                return Err(Error::InvalidInput("lock angle must be finite".into()));
            }
            seen[l.joint] = true;
        }
        let mut locks = locks;
        locks.sort_by_key(|l| l.joint);
        Ok(DamageSpec { locks })
    }

    pub fn locks(&self) -> &[JointLock] {
        &self.locks
    }

    pub fn is_intact(&self) -> bool {
        self.locks.is_empty()
    }

    /// Lock angle per joint, `None` for free joints.
    pub fn lock_table(&self) -> [Option<f64>; JOINTS] {
        let mut table = [None; JOINTS];
        for l in &self.locks {
            table[l.joint] = Some(l.angle);
        }
        table
    }

    /// Union of two lock sets; fails if both lock the same joint at different angles.
    pub fn union(&self, other: &DamageSpec) -> Result<DamageSpec> {
        let mut locks = self.locks.clone();
        for l in &other.locks {
            match locks.iter().find(|m| m.joint == l.joint) {
                Some(m) if m.angle == l.angle => {}
                Some(_) => {
                    return Err(Error::InvalidInput(format!(
                        "joint {} locked at conflicting angles",
                        l.joint
                    )))
                }
                None => locks.push(*l),
            }
        }
        DamageSpec::new(locks)
    }

    /// Perturbs every lock angle uniformly within `±amplitude` rad.
    ///
    /// Models the fact that a real joint failure freezes at an angle that is
    /// only approximately known. Used to make benchmark replicates distinct.
    pub fn jittered(&self, seed: u64, amplitude: f64) -> DamageSpec {
        if amplitude == 0.0 {
            return self.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let locks = self
            .locks
            .iter()
            .map(|l| JointLock {
                joint: l.joint,
                angle: l.angle + rng.random_range(-amplitude..=amplitude),
            })
            .collect();
        DamageSpec { locks }
    }
}

/// The four benchmark damage conditions plus the intact robot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DamageCondition {
    None,
    /// Locked shoulder.
    D1,
    /// Locked hip.
    D2,
    /// Locked shoulder and angled elbow.
    D3,
    /// D2 and D3 combined.
    D4,
}

impl DamageCondition {
    pub const BENCH: [DamageCondition; 4] = [
        DamageCondition::D1,
        DamageCondition::D2,
        DamageCondition::D3,
        DamageCondition::D4,
    ];

    pub fn spec(self) -> DamageSpec {
        let lock = |joint, angle| JointLock { joint, angle };
        let d2 = || DamageSpec::new(vec![lock(LEG1_HIP, 0.0)]).unwrap();
        let d3 = || DamageSpec::new(vec![lock(ARM1_SHOULDER, 0.0), lock(ARM1_ELBOW, FRAC_PI_4)]).unwrap();
        match self {
            DamageCondition::None => DamageSpec::none(),
            DamageCondition::D1 => DamageSpec::new(vec![lock(ARM1_SHOULDER, 0.0)]).unwrap(),
            DamageCondition::D2 => d2(),
            DamageCondition::D3 => d3(),
            DamageCondition::D4 => d2().union(&d3()).unwrap(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DamageCondition::None => "none",
            DamageCondition::D1 => "d1",
            DamageCondition::D2 => "d2",
            DamageCondition::D3 => "d3",
            DamageCondition::D4 => "d4",
        }
    }
}

impl fmt::Display for DamageCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DamageCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(DamageCondition::None),
            "d1" => Ok(DamageCondition::D1),
            "d2" => Ok(DamageCondition::D2),
            "d3" => Ok(DamageCondition::D3),
            "d4" => Ok(DamageCondition::D4),
            other => Err(Error::InvalidInput(format!("unknown damage condition `{other}`"))),
        }
    }
}
