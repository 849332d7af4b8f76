//! Safety-aware map-based constrained Bayesian optimization.
//!
//! A behavior-performance map is generated with MAP-Elites on an intact
//! simulated crawler, with the contact-force level as an extra descriptor
//! dimension. After damage, the robot adapts online by selecting behaviors
//! from the map with a constrained acquisition whose Gaussian-process priors
//! come from the map itself.

pub mod acquisition;
pub mod adaptation;
pub mod archive;
pub mod bench;
pub mod config;
pub mod error;
pub mod gp;
pub mod map_elites;
pub mod normal;
pub mod sim;

pub use error::{Error, Result};
