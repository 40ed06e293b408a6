//! Reservoir computing on observations of ergodic dynamical systems.
//!
//! The crate simulates the Lorenz system (plus simple ergodic test maps),
//! drives randomly generated echo state networks with the observations,
//! trains linear readouts by Tikhonov least squares, runs the closed
//! feedback loop, and orchestrates readout-convergence experiments.

pub mod dynsys;
pub mod error;
pub mod experiment;
pub mod forecast;
pub mod reservoir;
pub mod ridge;
pub mod rng;

pub use error::{Error, Result};
