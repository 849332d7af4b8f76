use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::model::JOINTS;
use crate::archive::Genotype;
use crate::error::{Error, Result};

/// Affine ranges the `[0,1]` genes are mapped onto.
///
/// Gene layout: joint `j` owns genes `3j` (amplitude), `3j+1` (phase) and
/// `3j+2` (offset). With `frequency_gene` set, gene 24 selects the gait
/// frequency in `[frequency_min, frequency_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerRanges {
    /// rad
    pub amplitude_max: f64,
    /// rad
    pub offset_min: f64,
    /// rad
    pub offset_max: f64,
    /// Hz, used when `frequency_gene` is off.
    pub frequency: f64,
    pub frequency_gene: bool,
    pub frequency_min: f64,
    pub frequency_max: f64,
}

impl Default for ControllerRanges {
    fn default() -> Self {
        ControllerRanges {
            amplitude_max: 0.6,
            offset_min: -0.6,
            offset_max: 0.6,
            frequency: 1.0,
            frequency_gene: false,
            frequency_min: 0.5,
            frequency_max: 2.0,
        }
    }
}

impl ControllerRanges {
    pub fn genotype_len(&self) -> usize {
        if self.frequency_gene {
            3 * JOINTS + 1
        } else {
            3 * JOINTS
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude_max >= 0.0 && self.offset_min <= self.offset_max && self.frequency > 0.0) {
            return Err(Error::Config("controller ranges are inconsistent".into()));
        }
        if self.frequency_gene && !(0.0 < self.frequency_min && self.frequency_min <= self.frequency_max) {
            return Err(Error::Config("controller frequency range is inconsistent".into()));
        }
        Ok(())
    }

    pub fn decode(&self, genotype: &Genotype) -> Result<ControllerParams> {
        let g = genotype.as_slice();
        if g.len() != self.genotype_len() {
            return Err(Error::DimensionMismatch {
                expected: self.genotype_len(),
                got: g.len(),
            });
        }
        let mut params = ControllerParams {
            amplitude: [0.0; JOINTS],
            phase: [0.0; JOINTS],
            offset: [0.0; JOINTS],
            frequency: self.frequency,
        };
        for j in 0..JOINTS {
            params.amplitude[j] = g[3 * j] * self.amplitude_max;
            params.phase[j] = g[3 * j + 1] * TAU;
            params.offset[j] = self.offset_min + g[3 * j + 2] * (self.offset_max - self.offset_min);
        }
        if self.frequency_gene {
            params.frequency = self.frequency_min + g[3 * JOINTS] * (self.frequency_max - self.frequency_min);
        }
        Ok(params)
    }
}

/// Open-loop sinusoidal joint targets: `θ_j(t) = offset_j + amplitude_j · sin(2π f t + phase_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerParams {
    pub amplitude: [f64; JOINTS],
    pub phase: [f64; JOINTS],
    pub offset: [f64; JOINTS],
    pub frequency: f64,
}

impl ControllerParams {
    /// Target angle and angular velocity of joint `j` at time `t`.
    #[inline]
    pub fn target(&self, j: usize, t: f64) -> (f64, f64) {
        let w = TAU * self.frequency;
        let (s, c) = (w * t + self.phase[j]).sin_cos();
        (self.offset[j] + self.amplitude[j] * s, self.amplitude[j] * w * c)
    }
}
