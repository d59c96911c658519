//! Configuration, the run loop over time steps, online checks, file output
//! and refinement sweeps.

pub mod checks;
pub mod config;
pub mod output;
pub mod run;
pub mod sweep;

pub use checks::{Check, CheckSet};
pub use config::{Resolved, SimConfig};
pub use run::{run, RunOutput, RunReport, SampleRow};
pub use sweep::{sweep, SweepReport};
