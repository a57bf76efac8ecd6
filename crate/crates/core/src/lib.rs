//! Exact tools for contextuality as a resource: scenarios, empirical
//! models, noncontextual fractions, adaptive measurement protocols,
//! simulations between models and catalyst elimination.

pub mod cli;
pub mod contextuality;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod lp;
pub mod model;
pub mod procedure;
pub mod protocol;
pub mod rational;
pub mod scenario;
pub mod simulation;

pub use error::{Error, Result};
pub use model::{EmpiricalModel, PartitionedModel};
pub use rational::Rational;
pub use scenario::{Assignment, Measurement, PartitionedScenario, Scenario};
