//! Simulation and closed-form analysis of the high-temperature hard-edge
//! point process of the stochastic Bessel operator.

pub mod analytics;
pub mod diffusion;
pub mod error;
pub mod finite_beta;
pub mod gaps;
pub mod laguerre;
pub mod stats;
pub mod stochastic;

pub use error::{Error, Result};
