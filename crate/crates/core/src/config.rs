//! TOML run configuration shared by map generation and adaptation.
//!
//! Every key is optional; omitted keys take their defaults.
//!
//! ```toml
//! [robot]          # RobotModel: body_mass, body_length, gyration_ratio,
//!                  # upper_link, lower_link, gravity, contact_stiffness,
//!                  # contact_damping, friction_coefficient,
//!                  # tangential_damping, forward_slip_friction
//! [controller]     # ControllerRanges: amplitude_max, offset_min, offset_max,
//!                  # frequency, frequency_gene, frequency_min, frequency_max
//! [sim]            # SimConfig: episode, dt, settle_time,
//!                  # force_metric = "rms-normal" | "mean-magnitude" | "mean-normal" | "peak"
//! [map_elites]     # MapElitesConfig: resolution, init_count, mutation_sigma,
//!                  # seed, batch_size, norm_quantile, threshold_quantile
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::archive::Archive;
use crate::map_elites::{run_map_elites, MapElitesConfig, RunStats};
use crate::sim::{ControllerRanges, RobotModel, SimConfig, Simulator};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub robot: RobotModel,
    pub controller: ControllerRanges,
    pub sim: SimConfig,
    pub map_elites: MapElitesConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.simulator()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn simulator(&self) -> Result<Simulator> {
        Simulator::new(self.robot.clone(), self.controller.clone(), self.sim.clone())
    }

    /// Runs MAP-Elites on the intact robot. `seed` overrides the configured one.
    pub fn generate_map(&self, seed: u64, budget: u64) -> Result<(Archive, RunStats)> {
        let sim = self.simulator()?;
        let cfg = MapElitesConfig {
            seed,
            ..self.map_elites.clone()
        };
        let (mut archive, stats) = run_map_elites(|g| sim.evaluate(g), sim.ranges.genotype_len(), budget, &cfg)?;
        archive.meta.sim_version = sim.fingerprint();
        Ok((archive, stats))
    }
}
