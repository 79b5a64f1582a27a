//! Relativistic quantum information tasks on a desk: causal geometry, task
//! models, feasibility verdicts, protocol plans and a dense qudit simulator.

pub mod error;
pub mod geometry;
pub mod model;
pub mod feasibility;
pub mod qsim;
pub mod schemes;
pub mod planner;
pub mod engine;
pub mod render;

pub use error::{Error, Result};
